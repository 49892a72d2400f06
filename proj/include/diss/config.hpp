#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diss/acquisition.hpp"
#include "diss/environment.hpp"

#include "json.hpp"

namespace diss {

struct DatasetConfig {
    std::string kind = "synthetic";  // synthetic | csv
    std::string path;
    nlohmann::json label_column = 0;  // header name (string) or index (int)
    bool has_header = true;
    SyntheticSpec synthetic;
    std::size_t subsample_cap = 20000;
    double test_fraction = 0.2;
    std::uint64_t split_seed = 13;
};

struct LlmConfig {
    std::string endpoint_url;
    std::string model_name;
    double temperature = 0.7;
    bool mock = true;
    std::string mock_reply =
        "1. Prediction: Positive, Moderate\n2. Confidence: 0.5\n3. Explanation: mock.";
    std::vector<PromptStyle> prompt_styles;
    std::vector<std::string> feature_descriptions;
    std::string positive_meaning = "the positive class";
    int timeout_seconds = 30;
    int max_retries = 3;
    int max_concurrent = 4;
    std::string api_key_env = "DISS_LLM_API_KEY";
};

struct EnvironmentConfig {
    std::string kind = "plain";
    double bandwidth = 1.0;
    double bias_level = 0.5;
    double min_temp = 1.0;
    double bias_mult = 5.0;
    int poison_feature_index = 0;
    int clusters = 4;
    std::size_t k_neighbors = 32;
    double ridge = 1e-2;
    LlmConfig llm;
};

struct RewardConfig {
    double lambda = 0.0;
    double epsilon = 1e-6;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    EnvironmentConfig environment;
    RewardConfig reward;
    AcquisitionConfig acquisition;
    std::vector<std::string> strategies{"mimic", "fcmts", "random"};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t eval_action_cap = 0;  // 0 inherits acquisition.action_cap
    std::size_t eval_max_test_instances = 0;
    std::string output_dir = "out";
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// Field-named validation messages; empty means the config is runnable.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// Preset strategy name ("mimic", "fcmts", ...) -> strategy + estimator pair.
std::pair<Strategy, EstimatorKind> resolve_strategy_preset(const std::string& name);
const std::vector<std::string>& known_strategy_presets();

/// Dataset pipeline (load/generate, subsample, split, standardize) plus expert
/// assembly for the configured environment kind.
Environment assemble_environment(const ExperimentConfig& cfg);

AcquisitionConfig acquisition_for_strategy(const ExperimentConfig& cfg, const std::string& preset);

std::uint64_t config_hash(const nlohmann::json& j);

}  // namespace diss
