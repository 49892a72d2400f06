#include "diss/core.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace diss {

double Action::mask_l2() const { return std::sqrt(static_cast<double>(cardinality())); }

double compute_reward(const RewardSpec& spec, int y, const Action& action,
                      const DecisionOutput& output) {
    const double eta = clamp_prob(output.prob_positive, spec.epsilon);
    double r = y == 1 ? std::log(eta) : std::log(1.0 - eta);
    if (spec.kind == RewardKind::log_likelihood_with_cardinality_penalty) {
        r -= spec.lambda * static_cast<double>(action.cardinality());
    }
    return r;
}

bool action_space_fits(std::size_t d, int n_options, std::size_t cap) {
    if (n_options < 1) throw std::invalid_argument("n_options must be >= 1");
    if (d >= 63) return false;
    const std::uint64_t masks = std::uint64_t{1} << d;
    if (masks > cap) return false;
    return masks <= cap / static_cast<std::uint64_t>(n_options);
}

std::vector<std::uint8_t> random_mask(std::size_t d, Rng& rng) {
    std::vector<std::uint8_t> mask(d);
    std::uint64_t word = 0;
    for (std::size_t j = 0; j < d; ++j) {
        if (j % 64 == 0) word = rng();
        mask[j] = static_cast<std::uint8_t>((word >> (j % 64)) & 1u);
    }
    return mask;
}

std::vector<Action> enumerate_or_sample_actions(std::size_t d, int n_options,
                                                std::size_t cap, Rng& rng) {
    if (cap < 1) throw std::invalid_argument("cap must be >= 1");
    if (n_options < 1) throw std::invalid_argument("n_options must be >= 1");

    std::vector<Action> out;
    if (action_space_fits(d, n_options, cap)) {
        const std::uint64_t masks = std::uint64_t{1} << d;
        out.reserve(static_cast<std::size_t>(masks) * n_options);
        for (int o = 0; o < n_options; ++o) {
            for (std::uint64_t m = 0; m < masks; ++m) {
                Action a;
                a.mask.resize(d);
                for (std::size_t j = 0; j < d; ++j) {
                    a.mask[j] = static_cast<std::uint8_t>((m >> j) & 1u);
                }
                a.option = o;
                out.push_back(std::move(a));
            }
        }
        return out;
    }

    std::set<std::pair<std::vector<std::uint8_t>, int>> seen;
    std::uniform_int_distribution<int> opt_dist(0, n_options - 1);
    out.reserve(cap);
    while (out.size() < cap) {
        Action a;
        a.mask = random_mask(d, rng);
        a.option = n_options == 1 ? 0 : opt_dist(rng);
        if (seen.emplace(a.mask, a.option).second) {
            out.push_back(std::move(a));
        }
    }
    return out;
}

std::pair<std::size_t, double> argmax_action(const ActionScorer& score,
                                             const std::vector<Action>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("candidate list is empty");
    std::size_t best = 0;
    double best_value = score(candidates[0]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double v = score(candidates[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return {best, best_value};
}

Action greedy_policy(const RewardEstimator& estimator, const std::vector<double>& x,
                     const std::vector<Action>& candidates) {
    const auto [idx, value] = argmax_action(estimator.scorer(x), candidates);
    (void)value;
    return candidates[idx];
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace diss
