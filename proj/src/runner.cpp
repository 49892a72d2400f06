#include "diss/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <stdexcept>

namespace diss {

double EvalResult::mean_reward() const {
    double s = 0.0;
    for (const auto& r : records) s += r.reward;
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

double EvalResult::mean_mask_cardinality() const {
    double s = 0.0;
    for (const auto& r : records) s += static_cast<double>(r.action.cardinality());
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

double EvalResult::accuracy() const {
    if (records.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& r : records) {
        correct += (r.eta >= 0.5 ? 1 : 0) == r.label;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::vector<double> EvalResult::option_frequencies(int n_options) const {
    std::vector<double> freq(static_cast<std::size_t>(n_options), 0.0);
    for (const auto& r : records) freq[static_cast<std::size_t>(r.action.option)] += 1.0;
    if (!records.empty()) {
        for (auto& f : freq) f /= static_cast<double>(records.size());
    }
    return freq;
}

PolicyScorerFactory mean_policy(const RewardModel& model) {
    return [&model](const std::vector<double>& x) { return model.mean_scorer(x); };
}

namespace {

ReplayBuffer buffer_prefix(const ReplayBuffer& buffer, std::size_t len) {
    ReplayBuffer out;
    const std::size_t n = std::min(len, buffer.size());
    out.observations.assign(buffer.observations.begin(),
                            buffer.observations.begin() + static_cast<std::ptrdiff_t>(n));
    out.meta.assign(buffer.meta.begin(), buffer.meta.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

}  // namespace

PolicyScorerFactory modiste_knn_policy(const ReplayBuffer& buffer, const Dataset& train,
                                       std::size_t prefix_len, std::size_t k) {
    auto prefix = std::make_shared<ReplayBuffer>(buffer_prefix(buffer, prefix_len));
    return [prefix, &train, k](const std::vector<double>& x) {
        return [prefix, &train, k, &x](const Action& a) {
            return modiste_knn_estimate(*prefix, train, x, a, k);
        };
    };
}

PolicyScorerFactory modiste_uknn_policy(const ReplayBuffer& buffer, const Dataset& train,
                                        std::size_t prefix_len, std::size_t k, double nu) {
    auto prefix = std::make_shared<ReplayBuffer>(buffer_prefix(buffer, prefix_len));
    return [prefix, &train, k, nu](const std::vector<double>& x) {
        return [prefix, &train, k, nu, &x](const Action& a) {
            return modiste_uknn_estimate(*prefix, train, x, a, k, nu);
        };
    };
}

EvalResult evaluate_policy(const PolicyScorerFactory& policy, const Environment& env,
                           const EvalConfig& cfg, Rng& rng) {
    EvalResult result;
    const std::size_t n = cfg.max_test_instances > 0
                              ? std::min(cfg.max_test_instances, env.test.size())
                              : env.test.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& inst = env.test.instances[i];
        const auto candidates =
            enumerate_or_sample_actions(env.test.dim(), env.option_count, cfg.action_cap, rng);
        try {
            const auto scorer = policy(inst.features);
            const auto [best_idx, best_value] = argmax_action(scorer, candidates);
            (void)best_value;
            const auto obs = observe_instance(env, inst, i, candidates[best_idx]);
            result.records.push_back(
                {i, obs.action, obs.output.prob_positive, obs.reward, inst.label.value()});
        } catch (const LlmTransportError&) {
            ++result.failures;
        }
    }
    result.valid = static_cast<double>(result.failures) <=
                   cfg.max_failure_fraction * static_cast<double>(n);
    return result;
}

AggregateCurve aggregate_curves(const std::vector<LearningCurve>& curves) {
    if (curves.empty()) throw std::invalid_argument("no curves to aggregate");
    AggregateCurve agg;
    agg.strategy = curves[0].strategy;
    const std::size_t n_points = curves[0].points.size();
    for (const auto& c : curves) {
        if (c.points.size() != n_points) {
            throw std::invalid_argument("curves have mismatched checkpoint schedules");
        }
    }
    for (std::size_t p = 0; p < n_points; ++p) {
        agg.queries.push_back(curves[0].points[p].queries);
        double mean = 0.0;
        for (const auto& c : curves) mean += c.points[p].mean_reward;
        mean /= static_cast<double>(curves.size());
        double var = 0.0;
        for (const auto& c : curves) {
            const double diff = c.points[p].mean_reward - mean;
            var += diff * diff;
        }
        const double stddev =
            curves.size() > 1 ? std::sqrt(var / static_cast<double>(curves.size() - 1)) : 0.0;
        agg.mean.push_back(mean);
        agg.stddev.push_back(stddev);
    }
    return agg;
}

namespace {

LearningCurve run_one_seed(const Environment& env, const AcquisitionConfig& acq,
                           const EvalConfig& eval, std::uint64_t seed,
                           const std::string& strategy_label) {
    LearningCurve curve;
    curve.strategy = strategy_label;
    curve.seed = seed;

    const auto on_checkpoint = [&](std::size_t queries, const ReplayBuffer& buffer,
                                   const RewardModel* model) {
        Rng eval_rng(mix_seed(seed, 0xe7a1u + queries));
        PolicyScorerFactory policy;
        if (model != nullptr) {
            policy = mean_policy(*model);
        } else if (acq.strategy == Strategy::modiste_knn) {
            policy = modiste_knn_policy(buffer, env.train, buffer.size(),
                                        static_cast<std::size_t>(acq.modiste_k));
        } else {
            policy = modiste_uknn_policy(buffer, env.train, buffer.size(),
                                         static_cast<std::size_t>(acq.modiste_k), acq.modiste_nu);
        }
        const auto result = evaluate_policy(policy, env, eval, eval_rng);
        curve.points.push_back({queries, result.mean_reward(), result.mean_mask_cardinality()});
    };

    run_acquisition(acq, env, seed, on_checkpoint);
    return curve;
}

}  // namespace

std::vector<LearningCurve> run_experiment(const Environment& env, const AcquisitionConfig& acq,
                                          const EvalConfig& eval,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::string& strategy_label) {
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    std::vector<LearningCurve> curves(seeds.size());
    const int jobs = std::max(1, eval.jobs);
    if (jobs == 1 || seeds.size() == 1) {
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            curves[s] = run_one_seed(env, acq, eval, seeds[s], strategy_label);
        }
        return curves;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t s = next.fetch_add(1);
            if (s >= seeds.size()) break;
            curves[s] = run_one_seed(env, acq, eval, seeds[s], strategy_label);
        }
    };
    std::vector<std::future<void>> pool;
    for (int w = 0; w < jobs; ++w) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
    return curves;
}

std::vector<SweepRow> interpretability_sweep(const Environment& env_base,
                                             const std::vector<double>& lambdas,
                                             const AcquisitionConfig& acq, const EvalConfig& eval,
                                             const std::vector<std::uint64_t>& seeds) {
    for (double lambda : lambdas) {
        if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    }
    std::vector<SweepRow> rows;
    const std::size_t d = env_base.train.dim();

    for (double lambda : lambdas) {
        Environment env = env_base;
        env.reward_spec.kind = RewardKind::log_likelihood_with_cardinality_penalty;
        env.reward_spec.lambda = lambda;

        SweepRow row;
        row.lambda = lambda;
        for (auto seed : seeds) {
            auto result = run_acquisition(acq, env, seed);
            if (!result.model) {
                throw std::invalid_argument("interpretability sweep requires a model strategy");
            }
            Rng eval_rng(mix_seed(seed, 0xf17a1u));
            const auto final_eval = evaluate_policy(mean_policy(*result.model), env, eval, eval_rng);
            row.final_mean_reward += final_eval.mean_reward();
            row.final_mean_selected_features += final_eval.mean_mask_cardinality();
            row.policy_accuracy += final_eval.accuracy();

            // Control arm: random masks with the policy's average cardinality.
            const double p_bit = std::clamp(
                final_eval.mean_mask_cardinality() / static_cast<double>(d), 0.0, 1.0);
            Rng ctrl_rng(mix_seed(seed, 0xc017u));
            std::bernoulli_distribution bit(p_bit);
            std::uniform_int_distribution<int> opt(0, env.option_count - 1);
            EvalResult control;
            const std::size_t n = eval.max_test_instances > 0
                                      ? std::min(eval.max_test_instances, env.test.size())
                                      : env.test.size();
            for (std::size_t i = 0; i < n; ++i) {
                const auto& inst = env.test.instances[i];
                Action a;
                a.mask.resize(d);
                for (std::size_t j = 0; j < d; ++j) a.mask[j] = bit(ctrl_rng) ? 1 : 0;
                a.option = env.option_count > 1 ? opt(ctrl_rng) : 0;
                const auto obs = observe_instance(env, inst, i, a);
                control.records.push_back(
                    {i, obs.action, obs.output.prob_positive, obs.reward, inst.label.value()});
            }
            row.random_mask_accuracy += control.accuracy();
        }
        const auto n_seeds = static_cast<double>(seeds.size());
        row.final_mean_reward /= n_seeds;
        row.final_mean_selected_features /= n_seeds;
        row.policy_accuracy /= n_seeds;
        row.random_mask_accuracy /= n_seeds;
        rows.push_back(row);
    }
    return rows;
}

double poison_selection_frequency(const std::vector<EvalRecord>& records, int poison_index) {
    if (records.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : records) {
        hits += r.action.mask[static_cast<std::size_t>(poison_index)] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

double poison_selection_frequency(const ReplayBuffer& buffer, int poison_index) {
    if (buffer.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (const auto& obs : buffer.observations) {
        hits += obs.action.mask[static_cast<std::size_t>(poison_index)] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(buffer.size());
}

}  // namespace diss
