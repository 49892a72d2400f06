#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diss/commands.hpp"
#include "diss/config.hpp"
#include "diss/svg.hpp"

using namespace diss;

namespace {

std::string write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json quick_config(const std::string& out_dir) {
    nlohmann::json j = {
        {"dataset",
         {{"kind", "synthetic"},
          {"synthetic", {{"n", 220}, {"d", 3}, {"seed", 2}, {"informative", {0, 1}}}},
          {"test_fraction", 0.25},
          {"split_seed", 5}}},
        {"environment", {{"kind", "overload"}}},
        {"acquisition",
         {{"budget", 70},
          {"warmup", 50},
          {"checkpoint_every", 10},
          {"n_trees", 8},
          {"refit_interval", 10},
          {"action_cap", 64}}},
        {"strategies", {"mimic", "random"}},
        {"seeds", {1, 2}},
        {"output_dir", out_dir},
    };
    return j;
}

}  // namespace

TEST_CASE("strategy presets map to strategy and estimator pairs") {
    CHECK(resolve_strategy_preset("mimic") ==
          std::pair{Strategy::fts_ts, EstimatorKind::mimic});
    CHECK(resolve_strategy_preset("mimic_cmts") ==
          std::pair{Strategy::fts_cmts, EstimatorKind::mimic});
    CHECK(resolve_strategy_preset("fcmts") ==
          std::pair{Strategy::fts_cmts, EstimatorKind::plain});
    CHECK(resolve_strategy_preset("random") ==
          std::pair{Strategy::random, EstimatorKind::plain});
    CHECK(resolve_strategy_preset("modiste_knn").first == Strategy::modiste_knn);
    CHECK(resolve_strategy_preset("modiste_uknn").first == Strategy::modiste_uknn);
    CHECK_THROWS_AS(resolve_strategy_preset("gradient_descent"), std::invalid_argument);
}

TEST_CASE("config validation names the failing field") {
    ExperimentConfig cfg = config_from_json(quick_config("/tmp/diss_cfg_out"));
    CHECK(validate_config(cfg).empty());

    auto find_error = [](const std::vector<std::string>& errors, const std::string& needle) {
        for (const auto& e : errors) {
            if (e.find(needle) != std::string::npos) return true;
        }
        return false;
    };

    ExperimentConfig bad_strategy = cfg;
    bad_strategy.strategies = {"mimic", "nonsense"};
    CHECK(find_error(validate_config(bad_strategy), "strategies"));
    CHECK(find_error(validate_config(bad_strategy), "nonsense"));

    ExperimentConfig bad_lambda = cfg;
    bad_lambda.reward.lambda = -1.0;
    CHECK(find_error(validate_config(bad_lambda), "reward.lambda"));

    ExperimentConfig bad_eps = cfg;
    bad_eps.reward.epsilon = 0.7;
    CHECK(find_error(validate_config(bad_eps), "reward.epsilon"));

    ExperimentConfig missing_file = cfg;
    missing_file.dataset.kind = "csv";
    missing_file.dataset.path = "/tmp/definitely_missing_diss.csv";
    CHECK(find_error(validate_config(missing_file), "/tmp/definitely_missing_diss.csv"));

    ExperimentConfig bad_env = cfg;
    bad_env.environment.kind = "oracle";
    CHECK(find_error(validate_config(bad_env), "environment.kind"));

    ExperimentConfig bad_warmup = cfg;
    bad_warmup.acquisition.warmup = 1000;
    bad_warmup.acquisition.budget = 100;
    CHECK(find_error(validate_config(bad_warmup), "acquisition.warmup"));
}

TEST_CASE("config round-trips through json unchanged") {
    const auto original = quick_config("/tmp/diss_cfg_out");
    const auto cfg = config_from_json(original);
    const auto serialized = config_to_json(cfg);
    const auto reparsed = config_to_json(config_from_json(serialized));
    CHECK(serialized == reparsed);
    CHECK(config_hash(serialized) == config_hash(reparsed));
}

TEST_CASE("the shipped paper-default config validates and pins appendix values") {
    const auto cfg = load_config(std::string(TEST_SOURCE_DIR) + "/../configs/paper_default.json");
    CHECK(validate_config(cfg).empty());
    CHECK(cfg.acquisition.budget == 8000);
    CHECK(cfg.acquisition.warmup == 500);
    CHECK(cfg.acquisition.action_cap == 5000);
    CHECK(cfg.acquisition.ensemble_size == 2);
    CHECK(cfg.acquisition.boost.n_trees == 64);
    CHECK(cfg.environment.clusters == 4);
    CHECK(cfg.environment.bias_level == 0.5);
    CHECK(cfg.environment.min_temp == 1.0);
    CHECK(cfg.environment.bias_mult == 5.0);

    const auto serialized = config_to_json(cfg);
    CHECK(config_to_json(config_from_json(serialized)) == serialized);
}

TEST_CASE("assemble_environment builds each expert kind") {
    ExperimentConfig cfg = config_from_json(quick_config("/tmp/diss_cfg_out"));

    auto env = assemble_environment(cfg);
    CHECK(env.train.size() + env.test.size() == 220);
    CHECK(env.option_count == 1);
    CHECK(env.expert != nullptr);

    cfg.environment.kind = "multi_expert";
    cfg.environment.clusters = 3;
    const auto multi = assemble_environment(cfg);
    CHECK(multi.option_count == 3);
    const auto out = multi.expert->decide({0.0, 0.0, 0.0}, {1, 1, 1}, 2);
    CHECK(out.prob_positive >= 0.0);
    CHECK(out.prob_positive <= 1.0);

    cfg.environment.kind = "local_linear";
    cfg.environment.k_neighbors = 8;
    const auto local = assemble_environment(cfg);
    CHECK(local.option_count == 1);

    cfg.environment.kind = "simplicity";
    cfg.environment.poison_feature_index = 99;
    CHECK_THROWS_AS(assemble_environment(cfg), std::invalid_argument);
    cfg.environment.poison_feature_index = 1;
    const auto poisoned = assemble_environment(cfg);
    CHECK(poisoned.expert != nullptr);

    cfg.environment.kind = "llm";
    cfg.environment.llm.mock = true;
    cfg.environment.llm.prompt_styles = {{"plain", "You are a classifier."},
                                         {"verbose", "You are a careful classifier."}};
    const auto llm_env = assemble_environment(cfg);
    CHECK(llm_env.option_count == 2);
    const auto llm_out = llm_env.expert->decide({0.1, 0.0, 0.3}, {1, 0, 1}, 1);
    CHECK(llm_out.prob_positive == doctest::Approx(0.5));

    cfg.reward.lambda = 0.4;
    const auto penalized = assemble_environment(cfg);
    CHECK(penalized.reward_spec.kind == RewardKind::log_likelihood_with_cardinality_penalty);
}

TEST_CASE("cmd_validate accepts good configs and rejects bad ones") {
    const auto good = write_file("/tmp/diss_good.json", quick_config("/tmp/diss_out_v").dump(2));
    CHECK(cmd_validate(good) == 0);

    auto bad = quick_config("/tmp/diss_out_v");
    bad["strategies"] = {"warp_drive"};
    const auto bad_path = write_file("/tmp/diss_bad.json", bad.dump(2));
    CHECK(cmd_validate(bad_path) == 2);

    const auto unparseable = write_file("/tmp/diss_unparseable.json", "{not json");
    CHECK(cmd_validate(unparseable) == 2);

    CHECK(cmd_validate("/tmp/diss_missing_config.json") == 2);
}

TEST_CASE("cmd_run writes deterministic artifacts end to end") {
    std::filesystem::remove_all("/tmp/diss_out_a");
    std::filesystem::remove_all("/tmp/diss_out_b");
    const auto cfg_a = write_file("/tmp/diss_run_a.json", quick_config("/tmp/diss_out_a").dump(2));
    const auto cfg_b = write_file("/tmp/diss_run_b.json", quick_config("/tmp/diss_out_b").dump(2));

    CHECK(cmd_run(cfg_a, {}) == 0);
    RunOptions opts;
    opts.jobs = 2;
    CHECK(cmd_run(cfg_b, opts) == 0);

    const auto curves_a = slurp("/tmp/diss_out_a/curves.csv");
    const auto curves_b = slurp("/tmp/diss_out_b/curves.csv");
    CHECK(curves_a == curves_b);
    CHECK(curves_a.rfind("strategy,seed,queries,mean_reward,mean_nfeat\n", 0) == 0);

    // one buffer per (strategy x seed), each with budget lines
    for (const char* name : {"mimic_seed1", "mimic_seed2", "random_seed1", "random_seed2"}) {
        const auto text = slurp(std::string("/tmp/diss_out_a/buffers/") + name + ".ndjson");
        CHECK(std::count(text.begin(), text.end(), '\n') == 70);
    }

    const auto manifest = nlohmann::json::parse(slurp("/tmp/diss_out_a/manifest.json"));
    CHECK(manifest.at("version") == version_string());
    CHECK(manifest.at("seeds") == nlohmann::json({1, 2}));
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest.at("config").at("acquisition").at("budget") == 70);

    const auto svg = slurp("/tmp/diss_out_a/curves.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);

    // validation failures leave no partial outputs
    std::filesystem::remove_all("/tmp/diss_out_c");
    auto bad = quick_config("/tmp/diss_out_c");
    bad["reward"] = {{"lambda", -2.0}};
    const auto bad_path = write_file("/tmp/diss_run_c.json", bad.dump(2));
    CHECK(cmd_run(bad_path, {}) == 2);
    CHECK(!std::filesystem::exists("/tmp/diss_out_c"));

    // seed offset shifts the executed seeds
    std::filesystem::remove_all("/tmp/diss_out_d");
    auto shifted = quick_config("/tmp/diss_out_d");
    const auto cfg_d = write_file("/tmp/diss_run_d.json", shifted.dump(2));
    RunOptions offset;
    offset.seed_offset = 10;
    CHECK(cmd_run(cfg_d, offset) == 0);
    CHECK(std::filesystem::exists("/tmp/diss_out_d/buffers/mimic_seed11.ndjson"));
}

TEST_CASE("cmd_plot aggregates csv files into an svg") {
    const auto csv = write_file("/tmp/diss_plot.csv",
                                "strategy,seed,queries,mean_reward,mean_nfeat\n"
                                "mimic,1,50,-0.5,2.0\n"
                                "mimic,1,60,-0.4,2.1\n"
                                "mimic,2,50,-0.6,2.2\n"
                                "mimic,2,60,-0.5,2.3\n"
                                "random,1,50,-0.9,2.0\n"
                                "random,1,60,-0.8,2.0\n");
    std::filesystem::remove("/tmp/diss_plot.svg");
    CHECK(cmd_plot({csv}, "/tmp/diss_plot.svg") == 0);
    const auto svg = slurp("/tmp/diss_plot.svg");
    CHECK(svg.find("mimic") != std::string::npos);
    CHECK(svg.find("random") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
    // two strategies, one with a band polygon
    CHECK(svg.find("polygon") != std::string::npos);

    // schema mismatch and empty files error without touching the output
    const auto bad_schema = write_file("/tmp/diss_plot_bad.csv", "a,b,c\n1,2,3\n");
    CHECK(cmd_plot({bad_schema}, "/tmp/diss_plot_bad.svg") == 1);
    CHECK(!std::filesystem::exists("/tmp/diss_plot_bad.svg"));

    const auto empty = write_file("/tmp/diss_plot_empty.csv",
                                  "strategy,seed,queries,mean_reward,mean_nfeat\n");
    CHECK(cmd_plot({empty}, "/tmp/diss_plot_empty.svg") == 1);
    CHECK(!std::filesystem::exists("/tmp/diss_plot_empty.svg"));
}

TEST_CASE("render_line_chart rejects empty input") {
    CHECK_THROWS_AS(render_line_chart({}, "x", "y"), std::invalid_argument);
    ChartSeries s;
    s.label = "empty";
    CHECK_THROWS_AS(render_line_chart({s}, "x", "y"), std::invalid_argument);
}
