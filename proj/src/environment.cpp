#include "diss/environment.hpp"

namespace diss {

std::vector<double> masked_features(const std::vector<double>& x,
                                    const std::vector<std::uint8_t>& mask) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (mask[j]) out[j] = x[j];
    }
    return out;
}

Observation observe_instance(const Environment& env, const Instance& instance,
                             std::size_t instance_index, const Action& action) {
    const auto x_masked = masked_features(instance.features, action.mask);
    Observation obs;
    obs.instance_index = instance_index;
    obs.action = action;
    obs.output = env.expert->decide(x_masked, action.mask, action.option);
    obs.reward = compute_reward(env.reward_spec, instance.label.value(), action, obs.output);
    return obs;
}

Observation observe(const Environment& env, std::size_t instance_index, const Action& action) {
    return observe_instance(env, env.train.instances[instance_index], instance_index, action);
}

}  // namespace diss
