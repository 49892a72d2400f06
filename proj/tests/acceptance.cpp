// Acceptance suite: one self-contained check per shipped guarantee, each
// printing a [PASS]/[FAIL] line. Exit status is the number of failures.
// An optional argv[1] comma list (e.g. "4,7") restricts which checks run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "diss/commands.hpp"
#include "diss/config.hpp"
#include "diss/runner.hpp"

using namespace diss;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define REQUIRE_MSG(cond, msg)                                   \
    do {                                                         \
        if (!(cond)) {                                           \
            std::ostringstream oss_;                             \
            oss_ << msg;                                         \
            throw CheckFailure(oss_.str());                      \
        }                                                        \
    } while (0)

int g_jobs = 2;

ExperimentConfig desk_config(const std::string& env_kind, std::size_t n, std::size_t d,
                             std::vector<std::size_t> informative) {
    ExperimentConfig cfg;
    cfg.dataset.kind = "synthetic";
    cfg.dataset.synthetic.n = n;
    cfg.dataset.synthetic.d = d;
    cfg.dataset.synthetic.seed = 9001;
    cfg.dataset.synthetic.informative = std::move(informative);
    cfg.dataset.test_fraction = 0.2;
    cfg.dataset.split_seed = 13;
    cfg.environment.kind = env_kind;
    cfg.acquisition.budget = 1500;
    cfg.acquisition.warmup = 500;
    cfg.acquisition.checkpoint_every = 250;
    return cfg;
}

double final_mean_reward(const std::vector<LearningCurve>& curves) {
    double mean = 0.0;
    for (const auto& c : curves) mean += c.points.back().mean_reward;
    return mean / static_cast<double>(curves.size());
}

// ---------------------------------------------------------------------------
// 1. Structured-estimate oracle equivalence
// ---------------------------------------------------------------------------
void criterion_1(std::ostringstream& detail) {
    SyntheticSpec spec{400, 3, 5, {0, 1}, 4.0};
    const auto ds = make_synthetic(spec);
    auto [train_raw, test_raw] = split(ds, SplitSpec{0.25, 3});
    auto [train, stats] = standardize(train_raw);
    const auto test = apply_standardize(test_raw, stats);

    ActionEncoder enc{3, 2};
    RewardSpec rspec;
    EnsembleConfig ecfg;
    ecfg.members = 2;
    ecfg.base.n_trees = 16;
    MimicEstimator est(mimic_fit_label_model(train, ecfg, 1), enc, rspec, ecfg);

    Rng rng(7);
    auto random_action = [&] {
        Action a;
        a.mask = random_mask(3, rng);
        a.option = std::uniform_int_distribution<int>(0, 1)(rng);
        return a;
    };
    std::vector<Observation> obs;
    std::uniform_real_distribution<double> ueta(0.05, 0.95);
    for (int i = 0; i < 60; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
        obs.push_back({pick(rng), random_action(), DecisionOutput{ueta(rng), {}}, -1.0});
    }
    est.refit(obs, train, 11);

    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::uniform_int_distribution<std::size_t> pick(0, test.size() - 1);
        const auto& x = test.features(pick(rng));
        const auto a = random_action();

        double p_hat, eta_hat, produced;
        if (t % 2 == 0) {
            const int member = t / 2 % ecfg.members;
            p_hat = est.label_model().member(member).predict_prob(x);
            eta_hat = est.mimic_model().member(member).predict_prob(enc.encode(x, a));
            produced = mimic_estimate(est, x, a, member);
        } else {
            p_hat = est.label_model().mean_prob(x);
            eta_hat = est.mimic_model().mean_prob(enc.encode(x, a));
            produced = mimic_estimate_mean(est, x, a);
        }
        double oracle = 0.0;
        for (int y = 0; y <= 1; ++y) {
            const double w = y == 1 ? p_hat : 1.0 - p_hat;
            oracle += w * compute_reward(rspec, y, a, DecisionOutput{eta_hat, {}});
        }
        worst = std::max(worst, std::abs(produced - oracle));
    }
    REQUIRE_MSG(worst <= 1e-12, "max |structured - oracle| = " << worst << " > 1e-12");
    detail << "max abs error " << worst << " over 100 grid points";
}

// ---------------------------------------------------------------------------
// 2. Exhaustive-argmax equivalence of the acquisition step
// ---------------------------------------------------------------------------
void criterion_2(std::ostringstream& detail) {
    int matches = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t d = 2 + trial % 3;
        const int n_options = 1 + trial % 2;

        SyntheticSpec spec{200, d, 100 + static_cast<std::uint64_t>(trial), {0}, 4.0};
        const auto ds = make_synthetic(spec);
        auto [train_raw, test_raw] = split(ds, SplitSpec{0.25, 3});
        auto [train, stats] = standardize(train_raw);

        Environment env;
        env.train = train;
        env.test = apply_standardize(test_raw, stats);
        env.expert = n_options == 1
                         ? std::shared_ptr<const DecisionMaker>(
                               std::make_shared<NWExpert>(train, 1.0))
                         : std::shared_ptr<const DecisionMaker>(std::make_shared<ExpertPool>(
                               std::vector<std::shared_ptr<const DecisionMaker>>{
                                   std::make_shared<NWExpert>(train, 1.0),
                                   std::make_shared<NWExpert>(train, 0.5)}));
        env.option_count = n_options;

        Rng rng(static_cast<std::uint64_t>(trial) * 7 + 1);
        auto buffer = run_warmup(env, 60, rng);

        const ActionEncoder enc{d, n_options};
        EnsembleConfig ecfg;
        ecfg.members = 2;
        ecfg.base.n_trees = 12;
        std::unique_ptr<RewardModel> model;
        if (trial % 2 == 0) {
            model = std::make_unique<PlainRewardModel>(enc, ecfg);
        } else {
            model = std::make_unique<MimicEstimator>(mimic_fit_label_model(train, ecfg, 5), enc,
                                                     env.reward_spec, ecfg);
        }
        model->refit(buffer.observations, train, rng());

        const bool cmts = trial % 5 == 0;
        const auto obs = fts_step(buffer, *model, cmts, env, 4, 5000, rng);
        const int member = buffer.meta.back().drawn_member;

        Rng enum_rng(0);
        const auto all_actions = enumerate_or_sample_actions(d, n_options, 5000, enum_rng);
        const auto scorer = model->member_scorer(member, env.train.features(obs.instance_index));
        const auto [best_idx, best_value] = argmax_action(scorer, all_actions);
        (void)best_value;
        if (obs.action == all_actions[best_idx]) ++matches;
    }
    REQUIRE_MSG(matches == trials, "argmax matched on only " << matches << "/" << trials
                                                             << " trials");
    detail << matches << "/" << trials << " trials matched brute force";
}

// ---------------------------------------------------------------------------
// 3. Bias-wrapper identities
// ---------------------------------------------------------------------------
void criterion_3(std::ostringstream& detail) {
    Rng rng(3);
    std::uniform_real_distribution<double> ueta(1e-5, 1.0 - 1e-5);

    BiasConfig overload_cfg;
    overload_cfg.kind = BiasKind::overload;
    overload_cfg.bias_level = 0.0;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double eta = ueta(rng);
        const auto mask = random_mask(6, rng);
        worst = std::max(worst, std::abs(apply_overload(eta, mask, overload_cfg) - eta));
    }
    REQUIRE_MSG(worst <= 1e-12, "overload identity error " << worst);

    BiasConfig risk_cfg;
    risk_cfg.kind = BiasKind::risk_averse;
    risk_cfg.bias_level = 0.5;
    const double averse = apply_risk_aversion(0.3, risk_cfg);
    REQUIRE_MSG(averse == 0.65, "risk aversion (alpha=0.5, eta=0.3) = " << averse);

    BiasConfig poison_cfg;
    poison_cfg.kind = BiasKind::simplicity;
    poison_cfg.bias_level = 0.5;
    poison_cfg.poison_feature_index = 2;
    poison_cfg.poison_model = UnivariateLogistic{1.3, -0.4};
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    for (int t = 0; t < 1000; ++t) {
        auto mask = random_mask(5, rng);
        mask[2] = 0;
        const std::vector<double> x{ux(rng), ux(rng), ux(rng), ux(rng), ux(rng)};
        const double eta = ueta(rng);
        REQUIRE_MSG(apply_simplicity_bias(eta, x, mask, poison_cfg) == eta,
                    "simplicity bias altered eta with the poison feature hidden");
    }
    detail << "overload identity err " << worst << "; risk 0.65 exact; 1000 hidden-poison inputs";
}

// ---------------------------------------------------------------------------
// 4. Strategy ordering on the cognitive-overload environment
// ---------------------------------------------------------------------------
void criterion_4(std::ostringstream& detail) {
    auto cfg = desk_config("overload", 3000, 8, {0, 1, 2});
    const auto env = assemble_environment(cfg);
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    EvalConfig eval;
    eval.action_cap = cfg.acquisition.action_cap;
    eval.jobs = g_jobs;

    const auto mimic = run_experiment(env, acquisition_for_strategy(cfg, "mimic"), eval, seeds,
                                      "mimic");
    const auto fcmts = run_experiment(env, acquisition_for_strategy(cfg, "fcmts"), eval, seeds,
                                      "fcmts");
    const auto random = run_experiment(env, acquisition_for_strategy(cfg, "random"), eval, seeds,
                                       "random");

    const double mimic_final = final_mean_reward(mimic);
    const double fcmts_final = final_mean_reward(fcmts);
    const double random_final = final_mean_reward(random);
    detail << "final seed-means: mimic " << mimic_final << ", fcmts " << fcmts_final
           << ", random " << random_final;
    REQUIRE_MSG(mimic_final >= random_final + 0.05,
                "mimic " << mimic_final << " does not beat random " << random_final
                         << " by 0.05 nats");
    REQUIRE_MSG(mimic_final >= fcmts_final,
                "mimic " << mimic_final << " below fcmts " << fcmts_final);
}

// ---------------------------------------------------------------------------
// 5. Poison-feature avoidance on the simplicity-bias environment
// ---------------------------------------------------------------------------
void criterion_5(std::ostringstream& detail) {
    const int poison = 4;  // an uninformative feature; its univariate model is noise
    auto cfg = desk_config("simplicity", 3000, 8, {0, 1, 2});
    cfg.environment.poison_feature_index = poison;
    cfg.environment.bias_level = 0.5;
    const auto env = assemble_environment(cfg);
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    EvalConfig eval;
    eval.action_cap = cfg.acquisition.action_cap;

    const auto acq = acquisition_for_strategy(cfg, "mimic");
    double policy_freq = 0.0;
    double random_freq = 0.0;
    std::size_t random_draws = 0;
    for (auto seed : seeds) {
        auto result = run_acquisition(acq, env, seed);
        Rng eval_rng(mix_seed(seed, 0xacce5));
        const auto eval_result = evaluate_policy(mean_policy(*result.model), env, eval, eval_rng);
        policy_freq += poison_selection_frequency(eval_result.records, poison);

        Rng mask_rng(mix_seed(seed, 0xc01));
        for (std::size_t i = 0; i < env.test.size(); ++i) {
            random_freq += static_cast<double>(random_mask(8, mask_rng)[poison]);
            ++random_draws;
        }
    }
    policy_freq /= static_cast<double>(seeds.size());
    random_freq /= static_cast<double>(random_draws);

    detail << "policy poison-selection freq " << policy_freq << ", random-mask freq "
           << random_freq;
    REQUIRE_MSG(policy_freq < 0.35, "policy selects the poison feature at " << policy_freq);
    REQUIRE_MSG(std::abs(random_freq - 0.5) <= 0.03,
                "random-mask control off nominal: " << random_freq);
}

// ---------------------------------------------------------------------------
// 6. Interpretability: penalty shrinks masks without losing accuracy
// ---------------------------------------------------------------------------
void criterion_6(std::ostringstream& detail) {
    auto cfg = desk_config("local_linear", 2000, 8, {0, 1});
    cfg.environment.k_neighbors = 32;
    cfg.acquisition.budget = 1200;
    cfg.acquisition.warmup = 400;
    const auto env = assemble_environment(cfg);
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    EvalConfig eval;
    eval.action_cap = cfg.acquisition.action_cap;

    const auto rows = interpretability_sweep(env, {0.0, 0.5, 0.9},
                                             acquisition_for_strategy(cfg, "mimic"), eval, seeds);
    detail << "mean |b|: " << rows[0].final_mean_selected_features << " (l=0), "
           << rows[1].final_mean_selected_features << " (l=0.5), "
           << rows[2].final_mean_selected_features << " (l=0.9); acc@0.5 policy "
           << rows[1].policy_accuracy << " vs random " << rows[1].random_mask_accuracy;

    REQUIRE_MSG(rows[0].final_mean_selected_features > rows[1].final_mean_selected_features &&
                    rows[1].final_mean_selected_features > rows[2].final_mean_selected_features,
                "selected-feature counts are not strictly decreasing in lambda");
    REQUIRE_MSG(rows[1].policy_accuracy >= rows[1].random_mask_accuracy + 0.03,
                "policy accuracy " << rows[1].policy_accuracy
                                   << " does not beat cardinality-matched random masks "
                                   << rows[1].random_mask_accuracy << " by 3 points");
}

// ---------------------------------------------------------------------------
// 7. Multi-expert routing on a separable two-cluster mixture
// ---------------------------------------------------------------------------
void criterion_7(std::ostringstream& detail) {
    // two clusters offset in features 0/1; feature 2 carries labels in cluster 0,
    // feature 3 in cluster 1; the off-cluster informative feature is pure noise
    Rng gen(404);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::bernoulli_distribution coin(0.5);
    Dataset ds;
    ds.name = "two-cluster";
    for (int j = 0; j < 4; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    std::vector<int> true_cluster;
    for (int i = 0; i < 2400; ++i) {
        const int c = coin(gen) ? 1 : 0;
        const int y = coin(gen) ? 1 : 0;
        Instance inst;
        inst.features.resize(4);
        inst.features[0] = (c == 0 ? -3.0 : 3.0) + noise(gen);
        inst.features[1] = (c == 0 ? -3.0 : 3.0) + noise(gen);
        inst.features[2] = c == 0 ? (2 * y - 1) * 2.5 + noise(gen) : noise(gen) * 2.0;
        inst.features[3] = c == 1 ? (2 * y - 1) * 2.5 + noise(gen) : noise(gen) * 2.0;
        inst.label = y;
        ds.instances.push_back(inst);
        true_cluster.push_back(c);
    }

    auto [train_raw, test_raw] = split(ds, SplitSpec{0.2, 5});
    auto [train, stats] = standardize(train_raw);
    const auto test = apply_standardize(test_raw, stats);

    const auto clustering = kmeans(train, 2, 99);
    std::vector<Dataset> supports(2);
    for (std::size_t i = 0; i < train.size(); ++i) {
        supports[static_cast<std::size_t>(clustering.assignments[i])].instances.push_back(
            train.instances[i]);
    }
    Environment env;
    env.train = train;
    env.test = test;
    env.expert = std::make_shared<ExpertPool>(std::vector<std::shared_ptr<const DecisionMaker>>{
        std::make_shared<NWExpert>(supports[0], 0.5),
        std::make_shared<NWExpert>(supports[1], 0.5)});
    env.option_count = 2;
    env.name = "two-cluster:multi_expert";

    AcquisitionConfig acq;
    acq.budget = 1200;
    acq.warmup = 400;
    acq.strategy = Strategy::fts_ts;
    acq.estimator_kind = EstimatorKind::mimic;
    acq.checkpoint_every = 0;

    EvalConfig eval;
    eval.action_cap = 5000;

    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double routing = 0.0;
    double reward = 0.0;
    for (auto seed : seeds) {
        auto result = run_acquisition(acq, env, seed);
        Rng eval_rng(mix_seed(seed, 0xacce7));
        const auto eval_result = evaluate_policy(mean_policy(*result.model), env, eval, eval_rng);
        reward += eval_result.mean_reward();
        std::size_t matched = 0;
        for (const auto& rec : eval_result.records) {
            const int want = nearest_centroid(clustering, env.test.features(rec.instance_index));
            matched += rec.action.option == want;
        }
        routing += static_cast<double>(matched) / static_cast<double>(eval_result.records.size());
    }
    routing /= static_cast<double>(seeds.size());
    reward /= static_cast<double>(seeds.size());

    detail << "matching-expert routing " << routing << ", final mean reward " << reward;
    REQUIRE_MSG(routing >= 0.8, "routing frequency " << routing << " below 0.8");
    REQUIRE_MSG(reward >= -0.1, "final mean reward " << reward << " below -0.1 nats");
}

// ---------------------------------------------------------------------------
// 8. Mimic error shrinks with the observation budget
// ---------------------------------------------------------------------------
void criterion_8(std::ostringstream& detail) {
    auto cfg = desk_config("overload", 3000, 8, {0, 1, 2});
    const auto env = assemble_environment(cfg);
    const ActionEncoder enc{8, 1};
    EnsembleConfig ecfg;
    ecfg.members = 2;

    auto mae_at = [&](const std::vector<Observation>& obs, std::size_t budget,
                      std::uint64_t seed) {
        const std::vector<Observation> prefix(obs.begin(),
                                              obs.begin() + static_cast<std::ptrdiff_t>(budget));
        const auto model = mimic_fit_expert_model(prefix, env.train, enc, ecfg, seed);
        Rng probe_rng(mix_seed(seed, 0x8e1d));
        std::uniform_int_distribution<std::size_t> pick(0, env.test.size() - 1);
        double mae = 0.0;
        const int probes = 1000;
        for (int p = 0; p < probes; ++p) {
            const auto& x = env.test.features(pick(probe_rng));
            Action a;
            a.mask = random_mask(8, probe_rng);
            const double truth =
                env.expert->decide(masked_features(x, a.mask), a.mask, 0).prob_positive;
            mae += std::abs(model.mean_prob(enc.encode(x, a)) - truth);
        }
        return mae / probes;
    };

    int improved = 0;
    std::ostringstream pairs;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        Rng rng(seed);
        const auto buffer = run_warmup(env, 1500, rng);
        const double mae_small = mae_at(buffer.observations, 500, seed);
        const double mae_large = mae_at(buffer.observations, 1500, seed);
        pairs << " [" << mae_small << " -> " << mae_large << "]";
        if (mae_large < mae_small) ++improved;
    }
    detail << "per-seed MAE at 500 -> 1500:" << pairs.str();
    REQUIRE_MSG(improved == 5, "MAE improved on only " << improved << "/5 seeds");
}

// ---------------------------------------------------------------------------
// 9. Byte-identical reruns of the CLI pipeline
// ---------------------------------------------------------------------------
void criterion_9(std::ostringstream& detail) {
    nlohmann::json j = {
        {"dataset",
         {{"kind", "synthetic"},
          {"synthetic", {{"n", 300}, {"d", 4}, {"seed", 2}, {"informative", {0, 1}}}},
          {"test_fraction", 0.25},
          {"split_seed", 5}}},
        {"environment", {{"kind", "overload"}}},
        {"acquisition",
         {{"budget", 160},
          {"warmup", 120},
          {"checkpoint_every", 20},
          {"n_trees", 8},
          {"refit_interval", 10},
          {"action_cap", 64}}},
        {"strategies", {"mimic", "random", "modiste_uknn"}},
        {"seeds", {1, 2}},
    };

    auto run_into = [&](const std::string& dir) {
        std::filesystem::remove_all(dir);
        j["output_dir"] = dir;
        const std::string cfg_path = dir + "_config.json";
        std::ofstream out(cfg_path);
        out << j.dump(2);
        out.close();
        REQUIRE_MSG(cmd_run(cfg_path, {}) == 0, "cmd_run failed for " << dir);
        std::ifstream in(dir + "/curves.csv");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const auto first = run_into("/tmp/diss_acc9_a");
    const auto second = run_into("/tmp/diss_acc9_b");
    REQUIRE_MSG(!first.empty(), "first run produced an empty curves.csv");
    REQUIRE_MSG(first == second, "two identical runs differ in curves.csv");
    detail << "curves.csv byte-identical across reruns ("
           << std::count(first.begin(), first.end(), '\n') << " lines)";
}

// ---------------------------------------------------------------------------
// 10. Modiste baseline contracts
// ---------------------------------------------------------------------------
void criterion_10(std::ostringstream& detail) {
    Rng rng(55);
    std::uniform_real_distribution<double> ur(-5.0, -0.1);
    int min_hits = 0;
    const int buffers = 100;
    for (int t = 0; t < buffers; ++t) {
        const std::size_t d = 3 + t % 3;
        Dataset train;
        const std::size_t n = 20 + t % 30;
        for (std::size_t i = 0; i < n; ++i) {
            Instance inst;
            for (std::size_t jf = 0; jf < d; ++jf) {
                inst.features.push_back(std::uniform_real_distribution<double>(-2, 2)(rng));
            }
            inst.label = 0;
            train.instances.push_back(inst);
        }
        ReplayBuffer buffer;
        double min_reward = std::numeric_limits<double>::infinity();
        const std::size_t entries = 5 + static_cast<std::size_t>(t % 40);
        for (std::size_t e = 0; e < entries; ++e) {
            Action a;
            a.mask = random_mask(d, rng);
            a.option = 0;
            const double reward = ur(rng);
            min_reward = std::min(min_reward, reward);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            buffer.append({pick(rng), a, DecisionOutput{0.5, {}}, reward});
        }
        Action unseen;
        unseen.mask = random_mask(d, rng);
        unseen.option = 1;  // no buffered entry ever carries option 1
        const auto est = modiste_knn_estimate(buffer, train, train.features(0), unseen, 10);
        if (est == min_reward) ++min_hits;
    }
    REQUIRE_MSG(min_hits == buffers,
                "unseen-action default hit the buffer minimum on only " << min_hits << "/"
                                                                        << buffers);

    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    const double nu = 1.0;
    for (int t = 0; t < 1000; ++t) {
        auto point = [&] {
            std::pair<std::vector<double>, std::vector<double>> p;
            for (int jf = 0; jf < 4; ++jf) p.first.push_back(unif(rng));
            Action a;
            a.mask = random_mask(4, rng);
            a.option = std::uniform_int_distribution<int>(0, 1)(rng);
            p.second = action_vector(a, 2);
            return p;
        };
        const auto a = point(), b = point(), c = point();
        const double dab = uknn_distance(a.first, a.second, b.first, b.second, nu);
        const double dba = uknn_distance(b.first, b.second, a.first, a.second, nu);
        const double dac = uknn_distance(a.first, a.second, c.first, c.second, nu);
        const double dcb = uknn_distance(c.first, c.second, b.first, b.second, nu);
        REQUIRE_MSG(dab >= 0.0, "negative distance");
        REQUIRE_MSG(dab == dba, "asymmetric distance");
        REQUIRE_MSG(uknn_distance(a.first, a.second, a.first, a.second, nu) == 0.0,
                    "nonzero self-distance");
        REQUIRE_MSG(dab <= dac + dcb + 1e-9, "triangle inequality violated");
    }
    detail << min_hits << "/100 unseen-action defaults; 1000 metric triples clean";
}

// ---------------------------------------------------------------------------
// 11. Shipped reproduction config carries the reference hyperparameters
// ---------------------------------------------------------------------------
void criterion_11(std::ostringstream& detail) {
    const std::string path = std::string(ACCEPTANCE_SOURCE_DIR) + "/../configs/paper_default.json";
    REQUIRE_MSG(cmd_validate(path) == 0, "cmd_validate rejected " << path);

    const auto cfg = load_config(path);
    REQUIRE_MSG(cfg.acquisition.budget == 8000, "budget " << cfg.acquisition.budget);
    REQUIRE_MSG(cfg.acquisition.warmup == 500, "warmup " << cfg.acquisition.warmup);
    REQUIRE_MSG(cfg.acquisition.action_cap == 5000, "action_cap " << cfg.acquisition.action_cap);
    REQUIRE_MSG(cfg.acquisition.ensemble_size == 2, "ensemble " << cfg.acquisition.ensemble_size);
    REQUIRE_MSG(cfg.acquisition.boost.n_trees == 64, "n_trees " << cfg.acquisition.boost.n_trees);
    REQUIRE_MSG(cfg.environment.clusters == 4, "clusters " << cfg.environment.clusters);
    REQUIRE_MSG(cfg.environment.bias_level == 0.5, "bias_level " << cfg.environment.bias_level);
    REQUIRE_MSG(cfg.environment.min_temp == 1.0, "min_temp " << cfg.environment.min_temp);
    REQUIRE_MSG(cfg.environment.bias_mult == 5.0, "bias_mult " << cfg.environment.bias_mult);
    detail << "reference defaults verified and config validates";
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(std::ostringstream&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    if (argc > 1) {
        std::stringstream ss(argv[1]);
        std::string tok;
        while (std::getline(ss, tok, ',')) only.push_back(std::stoi(tok));
    }
    if (const char* jobs = std::getenv("DISS_ACCEPTANCE_JOBS")) g_jobs = std::stoi(jobs);

    const std::vector<Criterion> criteria{
        {1, "structured-estimate oracle equivalence", criterion_1},
        {2, "acquisition step matches exhaustive argmax", criterion_2},
        {3, "bias-wrapper identities", criterion_3},
        {4, "strategy ordering on the overload environment", criterion_4},
        {5, "poison-feature avoidance", criterion_5},
        {6, "interpretability penalty sweep", criterion_6},
        {7, "multi-expert routing", criterion_7},
        {8, "mimic error shrinks with budget", criterion_8},
        {9, "byte-identical CLI reruns", criterion_9},
        {10, "modiste baseline contracts", criterion_10},
        {11, "reproduction config fidelity", criterion_11},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        std::ostringstream detail;
        try {
            c.run(detail);
            const auto secs = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
            std::printf("[PASS] criterion %2d: %s (%s) [%.1fs]\n", c.id, c.title,
                        detail.str().c_str(), secs);
        } catch (const std::exception& e) {
            const auto secs = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
            std::printf("[FAIL] criterion %2d: %s -- %s [%.1fs]\n", c.id, c.title, e.what(),
                        secs);
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures;
}
