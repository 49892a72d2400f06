#include "diss/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace diss {

void AcquisitionConfig::validate() const {
    if (warmup < 1) throw std::invalid_argument("warmup must be >= 1");
    if (warmup > budget) throw std::invalid_argument("warmup exceeds budget");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (refit_interval < 1) throw std::invalid_argument("refit_interval must be >= 1");
    if (action_cap < 1) throw std::invalid_argument("action_cap must be >= 1");
    if (ensemble_size < 1) throw std::invalid_argument("ensemble_size must be >= 1");
}

void ReplayBuffer::append(Observation obs, StrategyMeta m) {
    observations.push_back(std::move(obs));
    meta.push_back(m);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string buffer_to_ndjson(const ReplayBuffer& buffer) {
    std::ostringstream out;
    for (std::size_t t = 0; t < buffer.size(); ++t) {
        const auto& obs = buffer.observations[t];
        const auto& meta = buffer.meta[t];
        std::string mask;
        mask.reserve(obs.action.mask.size());
        for (auto b : obs.action.mask) mask.push_back(b ? '1' : '0');
        nlohmann::json j = {
            {"t", t + 1},
            {"i", obs.instance_index},
            {"mask", mask},
            {"option", obs.action.option},
            {"eta", obs.output.prob_positive},
            {"reward", obs.reward},
            {"strategy_meta",
             {{"member", meta.drawn_member},
              {"improvement", std::isnan(meta.improvement) ? nlohmann::json(nullptr)
                                                           : nlohmann::json(meta.improvement)}}},
        };
        out << j.dump() << '\n';
    }
    return out.str();
}

ReplayBuffer buffer_from_ndjson(const std::string& text) {
    ReplayBuffer buffer;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Observation obs;
        obs.instance_index = j.at("i").get<std::size_t>();
        const auto mask_str = j.at("mask").get<std::string>();
        obs.action.mask.reserve(mask_str.size());
        for (char c : mask_str) obs.action.mask.push_back(c == '1' ? 1 : 0);
        obs.action.option = j.at("option").get<int>();
        obs.output.prob_positive = j.at("eta").get<double>();
        obs.reward = j.at("reward").get<double>();
        StrategyMeta meta;
        meta.drawn_member = j.at("strategy_meta").at("member").get<int>();
        const auto& imp = j.at("strategy_meta").at("improvement");
        meta.improvement =
            imp.is_null() ? std::numeric_limits<double>::quiet_NaN() : imp.get<double>();
        buffer.append(std::move(obs), meta);
    }
    return buffer;
}

void save_buffer(const ReplayBuffer& buffer, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write buffer file: " + path);
    out << buffer_to_ndjson(buffer);
}

ReplayBuffer load_buffer(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read buffer file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return buffer_from_ndjson(ss.str());
}

// ---------------------------------------------------------------------------
// Warmup and strategy steps
// ---------------------------------------------------------------------------

namespace {

Observation random_query(const Environment& env, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, env.train.size() - 1);
    const std::size_t i = pick(rng);
    Action action;
    action.mask = random_mask(env.train.dim(), rng);
    if (env.option_count > 1) {
        std::uniform_int_distribution<int> opt(0, env.option_count - 1);
        action.option = opt(rng);
    }
    return observe(env, i, action);
}

}  // namespace

ReplayBuffer run_warmup(const Environment& env, std::size_t t_init, Rng& rng) {
    if (t_init < 1) throw std::invalid_argument("t_init must be >= 1");
    ReplayBuffer buffer;
    for (std::size_t t = 0; t < t_init; ++t) {
        buffer.append(random_query(env, rng));
    }
    return buffer;
}

Observation fts_step(ReplayBuffer& buffer, const RewardModel& model, bool cmts,
                     const Environment& env, int batch_size, std::size_t action_cap, Rng& rng) {
    if (!model.fitted()) throw std::logic_error("reward model must be fitted before fts_step");
    const std::size_t d = env.train.dim();
    std::uniform_int_distribution<std::size_t> pick_instance(0, env.train.size() - 1);

    std::size_t i_t = 0;
    int member = -1;
    double improvement = std::numeric_limits<double>::quiet_NaN();

    if (!cmts) {
        i_t = pick_instance(rng);
        member = model.draw_member(rng);
    } else {
        member = model.draw_member(rng);
        std::vector<std::size_t> batch(static_cast<std::size_t>(batch_size));
        for (auto& i : batch) i = pick_instance(rng);

        double best_improvement = -std::numeric_limits<double>::infinity();
        for (auto i : batch) {
            const auto& x = env.train.features(i);
            const auto candidates = enumerate_or_sample_actions(d, env.option_count, action_cap, rng);
            const auto mean_scorer = model.mean_scorer(x);
            const auto draw_scorer = model.member_scorer(member, x);
            const auto [mean_best_idx, mean_best_value] = argmax_action(mean_scorer, candidates);
            (void)mean_best_value;
            const auto [draw_best_idx, draw_best_value] = argmax_action(draw_scorer, candidates);
            (void)draw_best_idx;
            const double imp = draw_best_value - draw_scorer(candidates[mean_best_idx]);
            if (imp > best_improvement) {
                best_improvement = imp;
                i_t = i;
            }
        }
        improvement = best_improvement;
    }

    const auto& x = env.train.features(i_t);
    const auto candidates = enumerate_or_sample_actions(d, env.option_count, action_cap, rng);
    const auto [best_idx, best_value] =
        argmax_action(model.member_scorer(member, x), candidates);
    (void)best_value;

    Observation obs = observe(env, i_t, candidates[best_idx]);
    buffer.append(obs, StrategyMeta{member, improvement});
    return obs;
}

// ---------------------------------------------------------------------------
// Modiste baselines
// ---------------------------------------------------------------------------

namespace {

double context_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sq = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

double min_reward(const ReplayBuffer& buffer) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& obs : buffer.observations) m = std::min(m, obs.reward);
    return m;
}

std::pair<double, std::size_t> knn_estimate_with_count(const ReplayBuffer& buffer,
                                                       const Dataset& train,
                                                       const std::vector<double>& x,
                                                       const Action& action, std::size_t k) {
    std::vector<std::size_t> matching;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        if (buffer.observations[i].action == action) matching.push_back(i);
    }
    if (matching.empty()) return {min_reward(buffer), 0};

    std::vector<double> rewards(matching.size());
    for (std::size_t m = 0; m < matching.size(); ++m) {
        rewards[m] = buffer.observations[matching[m]].reward;
    }
    const double est = knn_mean(
        rewards,
        [&](std::size_t m) {
            const auto& obs = buffer.observations[matching[m]];
            return context_distance(x, train.features(obs.instance_index));
        },
        k);
    return {est, std::min(k, matching.size())};
}

}  // namespace

double modiste_knn_estimate(const ReplayBuffer& buffer, const Dataset& train,
                            const std::vector<double>& x, const Action& action, std::size_t k) {
    if (buffer.size() == 0) throw std::invalid_argument("replay buffer is empty");
    return knn_estimate_with_count(buffer, train, x, action, k).first;
}

std::vector<double> action_vector(const Action& action, int n_options) {
    std::vector<double> av(action.mask.size() + (n_options > 1 ? static_cast<std::size_t>(n_options) : 0),
                           0.0);
    for (std::size_t j = 0; j < action.mask.size(); ++j) av[j] = action.mask[j];
    if (n_options > 1) av[action.mask.size() + static_cast<std::size_t>(action.option)] = 1.0;
    return av;
}

double uknn_distance(const std::vector<double>& x_a, const std::vector<double>& av_a,
                     const std::vector<double>& x_b, const std::vector<double>& av_b, double nu) {
    return context_distance(x_a, x_b) + nu * context_distance(av_a, av_b);
}

double modiste_uknn_estimate(const ReplayBuffer& buffer, const Dataset& train,
                             const std::vector<double>& x, const Action& action, std::size_t k,
                             double nu) {
    if (buffer.size() == 0) throw std::invalid_argument("replay buffer is empty");
    if (nu < 0.0) throw std::invalid_argument("nu must be >= 0");
    int n_options = 1;
    for (const auto& obs : buffer.observations) n_options = std::max(n_options, obs.action.option + 1);
    n_options = std::max(n_options, action.option + 1);

    const auto query_av = action_vector(action, n_options);
    std::vector<double> rewards(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) rewards[i] = buffer.observations[i].reward;
    return knn_mean(
        rewards,
        [&](std::size_t i) {
            const auto& obs = buffer.observations[i];
            return uknn_distance(x, query_av, train.features(obs.instance_index),
                                 action_vector(obs.action, n_options), nu);
        },
        k);
}

Observation modiste_acquire_step(ReplayBuffer& buffer, Strategy variant, const Environment& env,
                                 std::size_t k, double nu, std::size_t action_cap, double ucb_c,
                                 Rng& rng) {
    if (buffer.size() == 0) throw std::invalid_argument("replay buffer is empty");
    if (variant != Strategy::modiste_knn && variant != Strategy::modiste_uknn) {
        throw std::invalid_argument("modiste step requires a modiste strategy variant");
    }
    std::uniform_int_distribution<std::size_t> pick_instance(0, env.train.size() - 1);
    const std::size_t i_t = pick_instance(rng);
    const auto& x = env.train.features(i_t);
    const auto candidates =
        enumerate_or_sample_actions(env.train.dim(), env.option_count, action_cap, rng);

    const double log_t = std::log(static_cast<double>(buffer.size() + 1));
    ActionScorer score;
    if (variant == Strategy::modiste_knn) {
        score = [&](const Action& a) {
            const auto [est, n_match] = knn_estimate_with_count(buffer, env.train, x, a, k);
            return est + ucb_c * std::sqrt(log_t / static_cast<double>(std::max<std::size_t>(
                                                       n_match, 1)));
        };
    } else {
        const std::size_t n_match = std::min(k, buffer.size());
        score = [&, n_match](const Action& a) {
            const double est = modiste_uknn_estimate(buffer, env.train, x, a, k, nu);
            return est + ucb_c * std::sqrt(log_t / static_cast<double>(std::max<std::size_t>(
                                                       n_match, 1)));
        };
    }

    const auto [best_idx, best_value] = argmax_action(score, candidates);
    (void)best_value;
    Observation obs = observe(env, i_t, candidates[best_idx]);
    buffer.append(obs, StrategyMeta{});
    return obs;
}

// ---------------------------------------------------------------------------
// Full acquisition run
// ---------------------------------------------------------------------------

std::vector<std::size_t> checkpoint_schedule(const AcquisitionConfig& cfg) {
    std::vector<std::size_t> schedule{cfg.warmup};
    if (cfg.checkpoint_every > 0) {
        for (std::size_t t = cfg.warmup + 1; t <= cfg.budget; ++t) {
            if (t % cfg.checkpoint_every == 0) schedule.push_back(t);
        }
    }
    schedule.push_back(cfg.budget);
    std::sort(schedule.begin(), schedule.end());
    schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
    return schedule;
}

AcquisitionResult run_acquisition(const AcquisitionConfig& cfg, const Environment& env,
                                  std::uint64_t seed, const CheckpointFn& on_checkpoint) {
    cfg.validate();
    Rng rng(seed);

    const bool model_based = cfg.strategy == Strategy::fts_ts ||
                             cfg.strategy == Strategy::fts_cmts ||
                             cfg.strategy == Strategy::random;
    const bool model_steers =
        cfg.strategy == Strategy::fts_ts || cfg.strategy == Strategy::fts_cmts;

    AcquisitionResult result;
    result.checkpoints = checkpoint_schedule(cfg);

    std::unique_ptr<RewardModel> model;
    if (model_based) {
        const ActionEncoder encoder{env.train.dim(), env.option_count};
        const EnsembleConfig ens_cfg = cfg.ensemble_config();
        if (cfg.estimator_kind == EstimatorKind::mimic) {
            auto label = mimic_fit_label_model(env.train, ens_cfg, rng());
            model = std::make_unique<MimicEstimator>(std::move(label), encoder, env.reward_spec,
                                                     ens_cfg);
        } else {
            model = std::make_unique<PlainRewardModel>(encoder, ens_cfg);
        }
    }

    ReplayBuffer& buffer = result.buffer;
    int consecutive_failures = 0;
    auto guarded = [&](const std::function<void()>& attempt) {
        try {
            attempt();
            consecutive_failures = 0;
            return true;
        } catch (const LlmTransportError& e) {
            if (++consecutive_failures > cfg.max_consecutive_failures) {
                throw std::runtime_error(std::string("aborting run after repeated expert failures: ") +
                                         e.what());
            }
            return false;
        }
    };

    while (buffer.size() < cfg.warmup) {
        guarded([&] { buffer.append(random_query(env, rng)); });
    }

    auto refit = [&] { model->refit(buffer.observations, env.train, rng()); };
    auto emit_checkpoint = [&](std::size_t queries) {
        if (!on_checkpoint) return;
        if (model_based) refit();
        on_checkpoint(queries, buffer, model.get());
    };

    if (std::binary_search(result.checkpoints.begin(), result.checkpoints.end(), buffer.size())) {
        emit_checkpoint(buffer.size());
    }
    if (model_steers && !model->fitted()) refit();

    while (buffer.size() < cfg.budget) {
        const std::size_t steps_done = buffer.size() - cfg.warmup;
        if (model_steers && steps_done > 0 && steps_done % cfg.refit_interval == 0) refit();

        guarded([&] {
            switch (cfg.strategy) {
                case Strategy::fts_ts:
                    fts_step(buffer, *model, false, env, cfg.batch_size, cfg.action_cap, rng);
                    break;
                case Strategy::fts_cmts:
                    fts_step(buffer, *model, true, env, cfg.batch_size, cfg.action_cap, rng);
                    break;
                case Strategy::random:
                    buffer.append(random_query(env, rng));
                    break;
                case Strategy::modiste_knn:
                case Strategy::modiste_uknn:
                    modiste_acquire_step(buffer, cfg.strategy, env, cfg.modiste_k, cfg.modiste_nu,
                                         cfg.action_cap, cfg.modiste_ucb_c, rng);
                    break;
            }
        });

        if (std::binary_search(result.checkpoints.begin(), result.checkpoints.end(),
                               buffer.size())) {
            emit_checkpoint(buffer.size());
        }
    }

    if (model_based && model && !model->fitted()) refit();
    result.model = std::move(model);
    return result;
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "fts_ts") return Strategy::fts_ts;
    if (s == "fts_cmts") return Strategy::fts_cmts;
    if (s == "random") return Strategy::random;
    if (s == "modiste_knn") return Strategy::modiste_knn;
    if (s == "modiste_uknn") return Strategy::modiste_uknn;
    throw std::invalid_argument("unknown strategy: " + s);
}

std::string strategy_to_string(Strategy s) {
    switch (s) {
        case Strategy::fts_ts: return "fts_ts";
        case Strategy::fts_cmts: return "fts_cmts";
        case Strategy::random: return "random";
        case Strategy::modiste_knn: return "modiste_knn";
        case Strategy::modiste_uknn: return "modiste_uknn";
    }
    return "unknown";
}

}  // namespace diss
