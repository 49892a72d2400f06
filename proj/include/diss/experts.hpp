#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "diss/core.hpp"
#include "diss/data.hpp"

namespace diss {

/// Black-box decision-maker: (masked features, mask, option) -> DecisionOutput.
class DecisionMaker {
public:
    virtual ~DecisionMaker() = default;
    virtual DecisionOutput decide(const std::vector<double>& x_masked,
                                  const std::vector<std::uint8_t>& mask, int option) const = 0;
};

/// Nadaraya-Watson label smoother over a fixed support set. Gaussian kernel on
/// the selected features, normalized by the mask cardinality; the all-zeros
/// mask degrades to the support's mean label.
class NWExpert : public DecisionMaker {
public:
    NWExpert(Dataset support, double bandwidth);

    DecisionOutput decide(const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int option) const override;

    const Dataset& support() const { return support_; }
    double bandwidth() const { return bandwidth_; }

private:
    Dataset support_;
    double bandwidth_;
};

/// Univariate logistic model; the simplicity-bias poison predictor.
struct UnivariateLogistic {
    double weight = 0.0;
    double bias = 0.0;

    double predict(double xj) const { return sigmoid(weight * xj + bias); }
};

UnivariateLogistic fit_univariate_logistic(const std::vector<double>& xs,
                                           const std::vector<int>& ys, int max_iter = 500);

enum class BiasKind { overload, risk_averse, simplicity };

struct BiasConfig {
    BiasKind kind = BiasKind::overload;
    double bias_level = 0.5;
    double min_temp = 1.0;      // overload
    double bias_mult = 5.0;     // overload
    int poison_feature_index = 0;   // simplicity
    UnivariateLogistic poison_model;  // simplicity
    double prob_clamp = 1e-6;
};

/// Temperature-softmax flattening over the two class logits; the temperature
/// grows with the mask's 2-norm: T(b) = min_temp + level * mult * |b|_2 / sqrt(d).
double apply_overload(double prob, const std::vector<std::uint8_t>& mask, const BiasConfig& cfg);

/// eta' = (1 - alpha) * eta + alpha.
double apply_risk_aversion(double prob, const BiasConfig& cfg);

/// Blends in the poison model's prediction when the poison feature is selected.
double apply_simplicity_bias(double prob, const std::vector<double>& x_masked,
                             const std::vector<std::uint8_t>& mask, const BiasConfig& cfg);

/// Base decision-maker with one cognitive-bias wrapper applied to its output.
class BiasedExpert : public DecisionMaker {
public:
    BiasedExpert(std::shared_ptr<const DecisionMaker> base, BiasConfig cfg)
        : base_(std::move(base)), cfg_(std::move(cfg)) {}

    DecisionOutput decide(const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int option) const override;

private:
    std::shared_ptr<const DecisionMaker> base_;
    BiasConfig cfg_;
};

/// Routes the option index to one of J member decision-makers.
class ExpertPool : public DecisionMaker {
public:
    explicit ExpertPool(std::vector<std::shared_ptr<const DecisionMaker>> experts);

    DecisionOutput decide(const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int option) const override;

    std::size_t size() const { return experts_.size(); }

private:
    std::vector<std::shared_ptr<const DecisionMaker>> experts_;
};

/// Logistic model fitted on the k nearest support rows in the selected-feature
/// subspace; single-class neighborhoods short-circuit to the clamped class rate.
class LocalLinearExpert : public DecisionMaker {
public:
    LocalLinearExpert(Dataset support, std::size_t k_neighbors = 32, double ridge = 1e-2,
                      double prob_clamp = 1e-6);

    DecisionOutput decide(const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int option) const override;

private:
    Dataset support_;
    std::size_t k_neighbors_;
    double ridge_;
    double prob_clamp_;
};

// ---------------------------------------------------------------------------
// LLM decision-maker
// ---------------------------------------------------------------------------

struct PromptStyle {
    std::string name;
    std::string preamble;
};

struct LlmExpertConfig {
    std::string endpoint_url;
    std::string model_name;
    double temperature = 0.7;
    std::vector<PromptStyle> prompt_styles;
    std::vector<std::string> feature_names;
    std::vector<std::string> feature_descriptions;
    std::string positive_meaning = "the positive class";
    int timeout_seconds = 30;
    int max_retries = 3;
    int max_concurrent = 4;
    std::string api_key_env = "DISS_LLM_API_KEY";
    bool mock = false;
    std::string mock_reply = "1. Prediction: Positive, Moderate\n2. Confidence: 0.5\n3. Explanation: mock.";
};

struct LlmTransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LlmParseError : std::runtime_error {
    LlmParseError(const std::string& what, std::string raw_text)
        : std::runtime_error(what), raw(std::move(raw_text)) {}
    std::string raw;
};

/// Completion backend: prompt text in, reply text out.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const std::string& prompt) const = 0;
};

/// Deterministic in-process stand-in; replies are a pure function of the prompt.
class MockLlmBackend : public LlmBackend {
public:
    explicit MockLlmBackend(std::string fixed_reply);
    explicit MockLlmBackend(std::function<std::string(const std::string&)> fn)
        : fn_(std::move(fn)) {}

    std::string complete(const std::string& prompt) const override { return fn_(prompt); }

private:
    std::function<std::string(const std::string&)> fn_;
};

/// Chat-completion HTTP client with bounded retries.
class HttpLlmBackend : public LlmBackend {
public:
    explicit HttpLlmBackend(const LlmExpertConfig& cfg);

    std::string complete(const std::string& prompt) const override;

private:
    std::string endpoint_url_;
    std::string model_;
    double temperature_;
    int timeout_seconds_;
    int max_retries_;
    std::string api_key_;
};

std::string render_prompt(const LlmExpertConfig& cfg, const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int style_index);

/// Extracts the Prediction/Confidence pair; eta = confidence for Positive,
/// 1 - confidence for Negative. Throws LlmParseError with the raw text attached.
double parse_llm_reply(const std::string& reply);

class LlmExpert : public DecisionMaker {
public:
    LlmExpert(LlmExpertConfig cfg, std::shared_ptr<const LlmBackend> backend = nullptr);

    DecisionOutput decide(const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int option) const override;

    const LlmExpertConfig& config() const { return cfg_; }

private:
    LlmExpertConfig cfg_;
    std::shared_ptr<const LlmBackend> backend_;
    mutable std::mutex gate_mutex_;
    mutable std::condition_variable gate_cv_;
    mutable int in_flight_ = 0;
};

}  // namespace diss
