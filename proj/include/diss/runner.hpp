#pragma once

#include <functional>
#include <string>
#include <vector>

#include "diss/acquisition.hpp"
#include "diss/core.hpp"
#include "diss/environment.hpp"
#include "diss/estimators.hpp"

namespace diss {

struct EvalRecord {
    std::size_t instance_index = 0;
    Action action;
    double eta = 0.0;
    double reward = 0.0;
    int label = 0;
};

struct EvalResult {
    std::vector<EvalRecord> records;
    std::size_t failures = 0;
    bool valid = true;

    double mean_reward() const;
    double mean_mask_cardinality() const;
    double accuracy() const;  // prediction = (eta >= 0.5) against the true label
    std::vector<double> option_frequencies(int n_options) const;
};

/// Builds one scorer per evaluated instance; the policy is argmax over a
/// sampled candidate set under that scorer.
using PolicyScorerFactory = std::function<ActionScorer(const std::vector<double>& x)>;

PolicyScorerFactory mean_policy(const RewardModel& model);
PolicyScorerFactory modiste_knn_policy(const ReplayBuffer& buffer, const Dataset& train,
                                       std::size_t prefix_len, std::size_t k);
PolicyScorerFactory modiste_uknn_policy(const ReplayBuffer& buffer, const Dataset& train,
                                        std::size_t prefix_len, std::size_t k, double nu);

struct EvalConfig {
    std::size_t action_cap = 5000;
    std::size_t max_test_instances = 0;  // 0 means the whole test set
    double max_failure_fraction = 0.01;
    int jobs = 1;
};

/// Greedy mean-mode policy over a fresh candidate sample per test instance;
/// queries the expert once per instance and scores against the true label.
EvalResult evaluate_policy(const PolicyScorerFactory& policy, const Environment& env,
                           const EvalConfig& cfg, Rng& rng);

struct CurvePoint {
    std::size_t queries = 0;
    double mean_reward = 0.0;
    double mean_selected_features = 0.0;
};

struct LearningCurve {
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<CurvePoint> points;
};

struct AggregateCurve {
    std::string strategy;
    std::vector<std::size_t> queries;
    std::vector<double> mean;
    std::vector<double> stddev;  // sample std over seeds; 0 for a single seed
};

AggregateCurve aggregate_curves(const std::vector<LearningCurve>& curves);

/// One acquisition run per seed with held-out evaluation at every checkpoint.
std::vector<LearningCurve> run_experiment(const Environment& env, const AcquisitionConfig& acq,
                                          const EvalConfig& eval, const std::vector<std::uint64_t>& seeds,
                                          const std::string& strategy_label);

struct SweepRow {
    double lambda = 0.0;
    double final_mean_reward = 0.0;
    double final_mean_selected_features = 0.0;
    double policy_accuracy = 0.0;
    double random_mask_accuracy = 0.0;
};

/// Reruns the experiment per penalty weight and adds a cardinality-matched
/// random-mask control arm evaluated at threshold 0.5.
std::vector<SweepRow> interpretability_sweep(const Environment& env_base,
                                             const std::vector<double>& lambdas,
                                             const AcquisitionConfig& acq, const EvalConfig& eval,
                                             const std::vector<std::uint64_t>& seeds);

/// Fraction of evaluated actions that selected the poison feature.
double poison_selection_frequency(const std::vector<EvalRecord>& records, int poison_index);
double poison_selection_frequency(const ReplayBuffer& buffer, int poison_index);

}  // namespace diss
