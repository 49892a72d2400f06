#include "diss/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace diss {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_styles(const nlohmann::json& j, const char* key, std::vector<PromptStyle>& out) {
    if (!j.contains(key)) return;
    out.clear();
    for (const auto& s : j.at(key)) {
        out.push_back({s.value("name", ""), s.at("preamble").get<std::string>()});
    }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        read_field(d, "kind", cfg.dataset.kind);
        read_field(d, "path", cfg.dataset.path);
        if (d.contains("label_column")) cfg.dataset.label_column = d.at("label_column");
        read_field(d, "has_header", cfg.dataset.has_header);
        read_field(d, "subsample_cap", cfg.dataset.subsample_cap);
        read_field(d, "test_fraction", cfg.dataset.test_fraction);
        read_field(d, "split_seed", cfg.dataset.split_seed);
        if (d.contains("synthetic")) {
            const auto& s = d.at("synthetic");
            read_field(s, "n", cfg.dataset.synthetic.n);
            read_field(s, "d", cfg.dataset.synthetic.d);
            read_field(s, "seed", cfg.dataset.synthetic.seed);
            read_field(s, "informative", cfg.dataset.synthetic.informative);
            read_field(s, "slope", cfg.dataset.synthetic.slope);
        }
    }
    if (j.contains("environment")) {
        const auto& e = j.at("environment");
        read_field(e, "kind", cfg.environment.kind);
        read_field(e, "bandwidth", cfg.environment.bandwidth);
        read_field(e, "bias_level", cfg.environment.bias_level);
        read_field(e, "min_temp", cfg.environment.min_temp);
        read_field(e, "bias_mult", cfg.environment.bias_mult);
        read_field(e, "poison_feature_index", cfg.environment.poison_feature_index);
        read_field(e, "clusters", cfg.environment.clusters);
        read_field(e, "k_neighbors", cfg.environment.k_neighbors);
        read_field(e, "ridge", cfg.environment.ridge);
        if (e.contains("llm")) {
            const auto& l = e.at("llm");
            read_field(l, "endpoint_url", cfg.environment.llm.endpoint_url);
            read_field(l, "model_name", cfg.environment.llm.model_name);
            read_field(l, "temperature", cfg.environment.llm.temperature);
            read_field(l, "mock", cfg.environment.llm.mock);
            read_field(l, "mock_reply", cfg.environment.llm.mock_reply);
            read_styles(l, "prompt_styles", cfg.environment.llm.prompt_styles);
            read_field(l, "feature_descriptions", cfg.environment.llm.feature_descriptions);
            read_field(l, "positive_meaning", cfg.environment.llm.positive_meaning);
            read_field(l, "timeout_seconds", cfg.environment.llm.timeout_seconds);
            read_field(l, "max_retries", cfg.environment.llm.max_retries);
            read_field(l, "max_concurrent", cfg.environment.llm.max_concurrent);
            read_field(l, "api_key_env", cfg.environment.llm.api_key_env);
        }
    }
    if (j.contains("reward")) {
        read_field(j.at("reward"), "lambda", cfg.reward.lambda);
        read_field(j.at("reward"), "epsilon", cfg.reward.epsilon);
    }
    if (j.contains("acquisition")) {
        const auto& a = j.at("acquisition");
        read_field(a, "budget", cfg.acquisition.budget);
        read_field(a, "warmup", cfg.acquisition.warmup);
        read_field(a, "ensemble_size", cfg.acquisition.ensemble_size);
        read_field(a, "batch_size", cfg.acquisition.batch_size);
        read_field(a, "refit_interval", cfg.acquisition.refit_interval);
        read_field(a, "action_cap", cfg.acquisition.action_cap);
        read_field(a, "n_trees", cfg.acquisition.boost.n_trees);
        read_field(a, "max_depth", cfg.acquisition.boost.max_depth);
        read_field(a, "learning_rate", cfg.acquisition.boost.learning_rate);
        read_field(a, "min_leaf", cfg.acquisition.boost.min_leaf);
        read_field(a, "resample", cfg.acquisition.resample);
        read_field(a, "checkpoint_every", cfg.acquisition.checkpoint_every);
        read_field(a, "modiste_k", cfg.acquisition.modiste_k);
        read_field(a, "modiste_nu", cfg.acquisition.modiste_nu);
        read_field(a, "modiste_ucb_c", cfg.acquisition.modiste_ucb_c);
        read_field(a, "max_consecutive_failures", cfg.acquisition.max_consecutive_failures);
    }
    read_field(j, "strategies", cfg.strategies);
    read_field(j, "seeds", cfg.seeds);
    if (j.contains("evaluation")) {
        read_field(j.at("evaluation"), "action_cap", cfg.eval_action_cap);
        read_field(j.at("evaluation"), "max_test_instances", cfg.eval_max_test_instances);
    }
    read_field(j, "output_dir", cfg.output_dir);
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = {
        {"kind", cfg.dataset.kind},
        {"path", cfg.dataset.path},
        {"label_column", cfg.dataset.label_column},
        {"has_header", cfg.dataset.has_header},
        {"subsample_cap", cfg.dataset.subsample_cap},
        {"test_fraction", cfg.dataset.test_fraction},
        {"split_seed", cfg.dataset.split_seed},
        {"synthetic",
         {{"n", cfg.dataset.synthetic.n},
          {"d", cfg.dataset.synthetic.d},
          {"seed", cfg.dataset.synthetic.seed},
          {"informative", cfg.dataset.synthetic.informative},
          {"slope", cfg.dataset.synthetic.slope}}},
    };
    nlohmann::json styles = nlohmann::json::array();
    for (const auto& s : cfg.environment.llm.prompt_styles) {
        styles.push_back({{"name", s.name}, {"preamble", s.preamble}});
    }
    j["environment"] = {
        {"kind", cfg.environment.kind},
        {"bandwidth", cfg.environment.bandwidth},
        {"bias_level", cfg.environment.bias_level},
        {"min_temp", cfg.environment.min_temp},
        {"bias_mult", cfg.environment.bias_mult},
        {"poison_feature_index", cfg.environment.poison_feature_index},
        {"clusters", cfg.environment.clusters},
        {"k_neighbors", cfg.environment.k_neighbors},
        {"ridge", cfg.environment.ridge},
        {"llm",
         {{"endpoint_url", cfg.environment.llm.endpoint_url},
          {"model_name", cfg.environment.llm.model_name},
          {"temperature", cfg.environment.llm.temperature},
          {"mock", cfg.environment.llm.mock},
          {"mock_reply", cfg.environment.llm.mock_reply},
          {"prompt_styles", styles},
          {"feature_descriptions", cfg.environment.llm.feature_descriptions},
          {"positive_meaning", cfg.environment.llm.positive_meaning},
          {"timeout_seconds", cfg.environment.llm.timeout_seconds},
          {"max_retries", cfg.environment.llm.max_retries},
          {"max_concurrent", cfg.environment.llm.max_concurrent},
          {"api_key_env", cfg.environment.llm.api_key_env}}},
    };
    j["reward"] = {{"lambda", cfg.reward.lambda}, {"epsilon", cfg.reward.epsilon}};
    j["acquisition"] = {
        {"budget", cfg.acquisition.budget},
        {"warmup", cfg.acquisition.warmup},
        {"ensemble_size", cfg.acquisition.ensemble_size},
        {"batch_size", cfg.acquisition.batch_size},
        {"refit_interval", cfg.acquisition.refit_interval},
        {"action_cap", cfg.acquisition.action_cap},
        {"n_trees", cfg.acquisition.boost.n_trees},
        {"max_depth", cfg.acquisition.boost.max_depth},
        {"learning_rate", cfg.acquisition.boost.learning_rate},
        {"min_leaf", cfg.acquisition.boost.min_leaf},
        {"resample", cfg.acquisition.resample},
        {"checkpoint_every", cfg.acquisition.checkpoint_every},
        {"modiste_k", cfg.acquisition.modiste_k},
        {"modiste_nu", cfg.acquisition.modiste_nu},
        {"modiste_ucb_c", cfg.acquisition.modiste_ucb_c},
        {"max_consecutive_failures", cfg.acquisition.max_consecutive_failures},
    };
    j["strategies"] = cfg.strategies;
    j["seeds"] = cfg.seeds;
    j["evaluation"] = {{"action_cap", cfg.eval_action_cap},
                       {"max_test_instances", cfg.eval_max_test_instances}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config field error in " + path + ": " + e.what());
    }
}

const std::vector<std::string>& known_strategy_presets() {
    static const std::vector<std::string> presets{"mimic",  "mimic_cmts",  "fts",
                                                  "fcmts",  "random",      "modiste_knn",
                                                  "modiste_uknn"};
    return presets;
}

std::pair<Strategy, EstimatorKind> resolve_strategy_preset(const std::string& name) {
    if (name == "mimic") return {Strategy::fts_ts, EstimatorKind::mimic};
    if (name == "mimic_cmts") return {Strategy::fts_cmts, EstimatorKind::mimic};
    if (name == "fts") return {Strategy::fts_ts, EstimatorKind::plain};
    if (name == "fcmts") return {Strategy::fts_cmts, EstimatorKind::plain};
    if (name == "random") return {Strategy::random, EstimatorKind::plain};
    if (name == "modiste_knn") return {Strategy::modiste_knn, EstimatorKind::plain};
    if (name == "modiste_uknn") return {Strategy::modiste_uknn, EstimatorKind::plain};
    throw std::invalid_argument("strategies: unknown strategy name '" + name + "'");
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> errors;
    auto check = [&](bool ok, const std::string& message) {
        if (!ok) errors.push_back(message);
    };

    check(cfg.dataset.kind == "synthetic" || cfg.dataset.kind == "csv",
          "dataset.kind: must be 'synthetic' or 'csv', got '" + cfg.dataset.kind + "'");
    if (cfg.dataset.kind == "csv") {
        check(!cfg.dataset.path.empty(), "dataset.path: required for csv datasets");
        if (!cfg.dataset.path.empty()) {
            check(std::filesystem::exists(cfg.dataset.path),
                  "dataset.path: file does not exist: " + cfg.dataset.path);
        }
        check(cfg.dataset.label_column.is_string() || cfg.dataset.label_column.is_number_integer(),
              "dataset.label_column: must be a column name or index");
    } else {
        check(cfg.dataset.synthetic.n >= 2, "dataset.synthetic.n: must be >= 2");
        check(cfg.dataset.synthetic.d >= 1, "dataset.synthetic.d: must be >= 1");
        for (auto f : cfg.dataset.synthetic.informative) {
            check(f < cfg.dataset.synthetic.d,
                  "dataset.synthetic.informative: index " + std::to_string(f) + " out of range");
        }
    }
    check(cfg.dataset.test_fraction > 0.0 && cfg.dataset.test_fraction < 1.0,
          "dataset.test_fraction: must be in (0,1)");

    const std::vector<std::string> env_kinds{"plain",        "overload",     "risk_averse",
                                             "simplicity",   "multi_expert", "local_linear",
                                             "llm"};
    check(std::find(env_kinds.begin(), env_kinds.end(), cfg.environment.kind) != env_kinds.end(),
          "environment.kind: unknown kind '" + cfg.environment.kind + "'");
    check(cfg.environment.bandwidth > 0.0, "environment.bandwidth: must be > 0");
    check(cfg.environment.bias_level >= 0.0 && cfg.environment.bias_level <= 1.0,
          "environment.bias_level: must be in [0,1]");
    check(cfg.environment.min_temp >= 0.0, "environment.min_temp: must be >= 0");
    check(cfg.environment.bias_mult >= 0.0, "environment.bias_mult: must be >= 0");
    check(cfg.environment.clusters >= 1, "environment.clusters: must be >= 1");
    check(cfg.environment.k_neighbors >= 2, "environment.k_neighbors: must be >= 2");
    check(cfg.environment.ridge >= 0.0, "environment.ridge: must be >= 0");
    check(cfg.environment.poison_feature_index >= 0,
          "environment.poison_feature_index: must be >= 0");
    if (cfg.environment.kind == "llm") {
        check(!cfg.environment.llm.prompt_styles.empty(),
              "environment.llm.prompt_styles: at least one style is required");
        check(cfg.environment.llm.mock || !cfg.environment.llm.endpoint_url.empty(),
              "environment.llm.endpoint_url: required unless mock is enabled");
    }

    check(cfg.reward.lambda >= 0.0, "reward.lambda: must be >= 0");
    check(cfg.reward.epsilon > 0.0 && cfg.reward.epsilon < 0.5,
          "reward.epsilon: must be in (0, 0.5)");

    check(cfg.acquisition.warmup >= 1, "acquisition.warmup: must be >= 1");
    check(cfg.acquisition.warmup <= cfg.acquisition.budget,
          "acquisition.warmup: exceeds acquisition.budget");
    check(cfg.acquisition.batch_size >= 1, "acquisition.batch_size: must be >= 1");
    check(cfg.acquisition.refit_interval >= 1, "acquisition.refit_interval: must be >= 1");
    check(cfg.acquisition.action_cap >= 1, "acquisition.action_cap: must be >= 1");
    check(cfg.acquisition.ensemble_size >= 1, "acquisition.ensemble_size: must be >= 1");
    check(cfg.acquisition.boost.n_trees >= 0, "acquisition.n_trees: must be >= 0");
    check(cfg.acquisition.boost.max_depth >= 1, "acquisition.max_depth: must be >= 1");
    check(cfg.acquisition.boost.learning_rate > 0.0, "acquisition.learning_rate: must be > 0");
    check(cfg.acquisition.modiste_k >= 1, "acquisition.modiste_k: must be >= 1");
    check(cfg.acquisition.modiste_nu >= 0.0, "acquisition.modiste_nu: must be >= 0");

    check(!cfg.strategies.empty(), "strategies: at least one strategy is required");
    for (const auto& s : cfg.strategies) {
        try {
            resolve_strategy_preset(s);
        } catch (const std::invalid_argument& e) {
            errors.emplace_back(e.what());
        }
    }
    check(!cfg.seeds.empty(), "seeds: at least one seed is required");
    check(!cfg.output_dir.empty(), "output_dir: must not be empty");
    return errors;
}

Environment assemble_environment(const ExperimentConfig& cfg) {
    Dataset raw;
    if (cfg.dataset.kind == "csv") {
        LabelColumn label = cfg.dataset.label_column.is_string()
                                ? LabelColumn(cfg.dataset.label_column.get<std::string>())
                                : LabelColumn(cfg.dataset.label_column.get<int>());
        raw = load_csv(cfg.dataset.path, label, cfg.dataset.has_header);
    } else {
        raw = make_synthetic(cfg.dataset.synthetic);
    }
    raw = subsample(raw, cfg.dataset.subsample_cap, mix_seed(cfg.dataset.split_seed, 0x5ab5));

    auto [train_raw, test_raw] =
        split(raw, SplitSpec{cfg.dataset.test_fraction, cfg.dataset.split_seed});
    auto [train, stats] = standardize(train_raw);
    Dataset test = apply_standardize(test_raw, stats);

    Environment env;
    env.reward_spec.lambda = cfg.reward.lambda;
    env.reward_spec.epsilon = cfg.reward.epsilon;
    env.reward_spec.kind = cfg.reward.lambda > 0.0
                               ? RewardKind::log_likelihood_with_cardinality_penalty
                               : RewardKind::log_likelihood;
    env.name = raw.name + ":" + cfg.environment.kind;
    env.option_count = 1;

    const auto& e = cfg.environment;
    if (e.kind == "plain") {
        env.expert = std::make_shared<NWExpert>(train, e.bandwidth);
    } else if (e.kind == "overload" || e.kind == "risk_averse" || e.kind == "simplicity") {
        auto base = std::make_shared<NWExpert>(train, e.bandwidth);
        BiasConfig bias;
        bias.bias_level = e.bias_level;
        bias.min_temp = e.min_temp;
        bias.bias_mult = e.bias_mult;
        bias.prob_clamp = cfg.reward.epsilon;
        if (e.kind == "overload") {
            bias.kind = BiasKind::overload;
        } else if (e.kind == "risk_averse") {
            bias.kind = BiasKind::risk_averse;
        } else {
            bias.kind = BiasKind::simplicity;
            if (e.poison_feature_index >= static_cast<int>(train.dim())) {
                throw std::invalid_argument(
                    "environment.poison_feature_index: out of range for dataset dimensionality");
            }
            bias.poison_feature_index = e.poison_feature_index;
            std::vector<double> xs(train.size());
            std::vector<int> ys(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) {
                xs[i] = train.features(i)[static_cast<std::size_t>(e.poison_feature_index)];
                ys[i] = train.label(i);
            }
            bias.poison_model = fit_univariate_logistic(xs, ys);
        }
        env.expert = std::make_shared<BiasedExpert>(base, bias);
    } else if (e.kind == "multi_expert") {
        const auto clustering =
            kmeans(train, e.clusters, mix_seed(cfg.dataset.split_seed, 0x1377));
        std::vector<Dataset> supports(static_cast<std::size_t>(e.clusters));
        for (auto& s : supports) {
            s.name = train.name;
            s.feature_names = train.feature_names;
        }
        for (std::size_t i = 0; i < train.size(); ++i) {
            supports[static_cast<std::size_t>(clustering.assignments[i])].instances.push_back(
                train.instances[i]);
        }
        std::vector<std::shared_ptr<const DecisionMaker>> experts;
        for (auto& s : supports) {
            experts.push_back(std::make_shared<NWExpert>(std::move(s), e.bandwidth));
        }
        env.expert = std::make_shared<ExpertPool>(std::move(experts));
        env.option_count = e.clusters;
    } else if (e.kind == "local_linear") {
        env.expert = std::make_shared<LocalLinearExpert>(train, e.k_neighbors, e.ridge,
                                                         cfg.reward.epsilon);
    } else if (e.kind == "llm") {
        LlmExpertConfig lcfg;
        lcfg.endpoint_url = e.llm.endpoint_url;
        lcfg.model_name = e.llm.model_name;
        lcfg.temperature = e.llm.temperature;
        lcfg.prompt_styles = e.llm.prompt_styles;
        lcfg.feature_names = train.feature_names;
        lcfg.feature_descriptions = e.llm.feature_descriptions.empty()
                                        ? train.feature_names
                                        : e.llm.feature_descriptions;
        lcfg.positive_meaning = e.llm.positive_meaning;
        lcfg.timeout_seconds = e.llm.timeout_seconds;
        lcfg.max_retries = e.llm.max_retries;
        lcfg.max_concurrent = e.llm.max_concurrent;
        lcfg.api_key_env = e.llm.api_key_env;
        lcfg.mock = e.llm.mock;
        lcfg.mock_reply = e.llm.mock_reply;
        env.expert = std::make_shared<LlmExpert>(std::move(lcfg));
        env.option_count = static_cast<int>(e.llm.prompt_styles.size());
    } else {
        throw std::invalid_argument("environment.kind: unknown kind '" + e.kind + "'");
    }

    env.train = std::move(train);
    env.test = std::move(test);
    return env;
}

AcquisitionConfig acquisition_for_strategy(const ExperimentConfig& cfg, const std::string& preset) {
    AcquisitionConfig acq = cfg.acquisition;
    const auto [strategy, estimator] = resolve_strategy_preset(preset);
    acq.strategy = strategy;
    acq.estimator_kind = estimator;
    return acq;
}

std::uint64_t config_hash(const nlohmann::json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace diss
