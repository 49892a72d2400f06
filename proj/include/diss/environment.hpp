#pragma once

#include <memory>
#include <string>

#include "diss/core.hpp"
#include "diss/data.hpp"
#include "diss/experts.hpp"

namespace diss {

/// Dataset split + decision-maker + reward definition; everything a strategy
/// needs to acquire observations and be evaluated.
struct Environment {
    Dataset train;
    Dataset test;
    std::shared_ptr<const DecisionMaker> expert;
    RewardSpec reward_spec;
    int option_count = 1;
    std::string name;
};

/// Masks the training instance, queries the expert, scores against the label.
Observation observe(const Environment& env, std::size_t instance_index, const Action& action);

/// Same query path for an arbitrary labeled instance (held-out evaluation).
Observation observe_instance(const Environment& env, const Instance& instance,
                             std::size_t instance_index, const Action& action);

std::vector<double> masked_features(const std::vector<double>& x,
                                    const std::vector<std::uint8_t>& mask);

}  // namespace diss
