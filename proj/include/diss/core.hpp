#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace diss {

using Rng = std::mt19937_64;

/// A single data point: standardized feature vector plus optional binary label.
struct Instance {
    std::vector<double> features;
    std::optional<int> label;

    std::size_t dim() const { return features.size(); }
};

/// Feature mask plus a discrete option index (expert id, prompt style, ...).
struct Action {
    std::vector<std::uint8_t> mask;
    int option = 0;

    std::size_t cardinality() const {
        std::size_t c = 0;
        for (auto b : mask) c += b;
        return c;
    }
    double mask_l2() const;

    bool operator==(const Action& other) const = default;
};

/// Decision-maker output: probability of the positive class plus opaque metadata.
struct DecisionOutput {
    double prob_positive = 0.5;
    std::map<std::string, std::string> metadata;
};

/// One acquired decision-making observation.
struct Observation {
    std::size_t instance_index = 0;
    Action action;
    DecisionOutput output;
    double reward = 0.0;
};

enum class RewardKind {
    log_likelihood,
    log_likelihood_with_cardinality_penalty,
};

struct RewardSpec {
    RewardKind kind = RewardKind::log_likelihood;
    double lambda = 0.0;
    double epsilon = 1e-6;
};

/// Label log-likelihood of the decision output, with the probability clamped to
/// [epsilon, 1-epsilon]; subtracts lambda * |mask| for the penalized kind.
double compute_reward(const RewardSpec& spec, int y, const Action& action,
                      const DecisionOutput& output);

/// Full product space {0,1}^d x options when it fits under `cap` (masks counted
/// in binary, option-major); otherwise `cap` distinct uniform samples.
std::vector<Action> enumerate_or_sample_actions(std::size_t d, int n_options,
                                                std::size_t cap, Rng& rng);

/// d fair mask bits drawn from the raw engine stream.
std::vector<std::uint8_t> random_mask(std::size_t d, Rng& rng);

bool action_space_fits(std::size_t d, int n_options, std::size_t cap);

using ActionScorer = std::function<double(const Action&)>;

/// Anything that maps (instance features, action) to an estimated expected reward.
class RewardEstimator {
public:
    virtual ~RewardEstimator() = default;

    virtual double estimate(const std::vector<double>& x, const Action& action) const = 0;

    /// Scorer bound to one instance; overrides may hoist per-instance work out
    /// of action loops. The returned callable references `x` — keep it alive.
    virtual ActionScorer scorer(const std::vector<double>& x) const {
        return [this, &x](const Action& a) { return estimate(x, a); };
    }
};

/// Index and value of the best-scoring action; ties go to the lowest index.
std::pair<std::size_t, double> argmax_action(const ActionScorer& score,
                                             const std::vector<Action>& candidates);

/// argmax_{b,o} of the estimator over the candidate list.
Action greedy_policy(const RewardEstimator& estimator, const std::vector<double>& x,
                     const std::vector<Action>& candidates);

inline double clamp_prob(double p, double eps) {
    return p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p);
}

double sigmoid(double z);
double logit(double p);

/// splitmix64; used to derive independent seed streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace diss
