#include "diss/experts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace diss {

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct LogisticFit {
    std::vector<double> weights;
    double bias = 0.0;
};

// Full-batch gradient descent with backtracking on the ridge-regularized
// cross-entropy; stops at gradient inf-norm < tol or max_iter.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                         double ridge, int max_iter, double tol = 1e-6) {
    const std::size_t n = X.size();
    const std::size_t d = n == 0 ? 0 : X[0].size();
    LogisticFit fit;
    fit.weights.assign(d, 0.0);

    auto loss_at = [&](const std::vector<double>& w, double b) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * X[i][j];
            const double p = sigmoid(z);
            const double pc = clamp_prob(p, 1e-12);
            loss -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
        }
        loss /= static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) loss += 0.5 * ridge * w[j] * w[j];
        return loss;
    };

    double step = 1.0;
    double loss = loss_at(fit.weights, fit.bias);
    std::vector<double> grad_w(d);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = fit.bias;
            for (std::size_t j = 0; j < d; ++j) z += fit.weights[j] * X[i][j];
            const double err = sigmoid(z) - y[i];
            for (std::size_t j = 0; j < d; ++j) grad_w[j] += err * X[i][j];
            grad_b += err;
        }
        grad_b /= static_cast<double>(n);
        double inf_norm = std::abs(grad_b);
        for (std::size_t j = 0; j < d; ++j) {
            grad_w[j] = grad_w[j] / static_cast<double>(n) + ridge * fit.weights[j];
            inf_norm = std::max(inf_norm, std::abs(grad_w[j]));
        }
        if (inf_norm < tol) break;

        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving) {
            std::vector<double> w_new = fit.weights;
            for (std::size_t j = 0; j < d; ++j) w_new[j] -= step * grad_w[j];
            const double b_new = fit.bias - step * grad_b;
            const double loss_new = loss_at(w_new, b_new);
            if (loss_new <= loss) {
                fit.weights = std::move(w_new);
                fit.bias = b_new;
                loss = loss_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        step = std::min(step * 2.0, 1.0);
    }
    return fit;
}

}  // namespace

// ---------------------------------------------------------------------------
// Nadaraya-Watson expert
// ---------------------------------------------------------------------------

NWExpert::NWExpert(Dataset support, double bandwidth)
    : support_(std::move(support)), bandwidth_(bandwidth) {
    if (support_.size() == 0) throw std::invalid_argument("NW support is empty");
    if (bandwidth_ <= 0.0) throw std::invalid_argument("NW bandwidth must be > 0");
}

DecisionOutput NWExpert::decide(const std::vector<double>& x_masked,
                                const std::vector<std::uint8_t>& mask, int /*option*/) const {
    if (mask.size() != support_.dim()) throw std::invalid_argument("mask dimension mismatch");
    const std::size_t card = [&] {
        std::size_t c = 0;
        for (auto b : mask) c += b;
        return c;
    }();
    const double denom = 2.0 * bandwidth_ * bandwidth_ *
                         static_cast<double>(std::max<std::size_t>(card, 1));

    const std::size_t n = support_.size();
    std::vector<double> exponents(n, 0.0);
    double max_exp = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& xi = support_.features(i);
        double sq = 0.0;
        for (std::size_t j = 0; j < mask.size(); ++j) {
            if (!mask[j]) continue;
            const double diff = x_masked[j] - xi[j];
            sq += diff * diff;
        }
        exponents[i] = -sq / denom;
        max_exp = std::max(max_exp, exponents[i]);
    }

    double wsum = 0.0;
    double wy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(exponents[i] - max_exp);
        wsum += w;
        wy += w * support_.label(i);
    }
    return DecisionOutput{wy / wsum, {}};
}

// ---------------------------------------------------------------------------
// Bias wrappers
// ---------------------------------------------------------------------------

UnivariateLogistic fit_univariate_logistic(const std::vector<double>& xs,
                                           const std::vector<int>& ys, int max_iter) {
    std::vector<std::vector<double>> X(xs.size(), std::vector<double>(1));
    std::vector<double> y(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        X[i][0] = xs[i];
        y[i] = ys[i];
    }
    const auto fit = fit_logistic(X, y, 0.0, max_iter);
    return UnivariateLogistic{fit.weights[0], fit.bias};
}

double apply_overload(double prob, const std::vector<std::uint8_t>& mask, const BiasConfig& cfg) {
    double l2 = 0.0;
    for (auto b : mask) l2 += b;
    l2 = std::sqrt(l2);
    const double temp =
        cfg.min_temp + cfg.bias_level * cfg.bias_mult * l2 / std::sqrt(static_cast<double>(mask.size()));
    const double eta = clamp_prob(prob, cfg.prob_clamp);
    return sigmoid(logit(eta) / temp);
}

double apply_risk_aversion(double prob, const BiasConfig& cfg) {
    return (1.0 - cfg.bias_level) * prob + cfg.bias_level;
}

double apply_simplicity_bias(double prob, const std::vector<double>& x_masked,
                             const std::vector<std::uint8_t>& mask, const BiasConfig& cfg) {
    const auto j = static_cast<std::size_t>(cfg.poison_feature_index);
    if (j >= mask.size()) throw std::invalid_argument("poison feature index out of range");
    if (!mask[j]) return prob;
    return (1.0 - cfg.bias_level) * prob + cfg.bias_level * cfg.poison_model.predict(x_masked[j]);
}

DecisionOutput BiasedExpert::decide(const std::vector<double>& x_masked,
                                    const std::vector<std::uint8_t>& mask, int option) const {
    DecisionOutput out = base_->decide(x_masked, mask, option);
    switch (cfg_.kind) {
        case BiasKind::overload:
            out.prob_positive = apply_overload(out.prob_positive, mask, cfg_);
            break;
        case BiasKind::risk_averse:
            out.prob_positive = apply_risk_aversion(out.prob_positive, cfg_);
            break;
        case BiasKind::simplicity:
            out.prob_positive = apply_simplicity_bias(out.prob_positive, x_masked, mask, cfg_);
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Expert pool
// ---------------------------------------------------------------------------

ExpertPool::ExpertPool(std::vector<std::shared_ptr<const DecisionMaker>> experts)
    : experts_(std::move(experts)) {
    if (experts_.empty()) throw std::invalid_argument("expert pool is empty");
}

DecisionOutput ExpertPool::decide(const std::vector<double>& x_masked,
                                  const std::vector<std::uint8_t>& mask, int option) const {
    if (option < 0 || static_cast<std::size_t>(option) >= experts_.size()) {
        throw std::out_of_range("expert option index " + std::to_string(option) +
                                " out of range for pool of " + std::to_string(experts_.size()));
    }
    return experts_[static_cast<std::size_t>(option)]->decide(x_masked, mask, 0);
}

// ---------------------------------------------------------------------------
// Local linear (KNN + logistic regression) expert
// ---------------------------------------------------------------------------

LocalLinearExpert::LocalLinearExpert(Dataset support, std::size_t k_neighbors, double ridge,
                                     double prob_clamp)
    : support_(std::move(support)),
      k_neighbors_(k_neighbors),
      ridge_(ridge),
      prob_clamp_(prob_clamp) {
    if (k_neighbors_ < 2) throw std::invalid_argument("k_neighbors must be >= 2");
    if (k_neighbors_ > support_.size()) throw std::invalid_argument("k_neighbors exceeds support");
}

DecisionOutput LocalLinearExpert::decide(const std::vector<double>& x_masked,
                                         const std::vector<std::uint8_t>& mask,
                                         int /*option*/) const {
    std::vector<std::size_t> selected;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) selected.push_back(j);
    }

    std::vector<std::size_t> neighbors;
    if (selected.empty()) {
        neighbors.resize(k_neighbors_);
        std::iota(neighbors.begin(), neighbors.end(), 0);
        double mean = 0.0;
        for (auto i : neighbors) mean += support_.label(i);
        mean /= static_cast<double>(neighbors.size());
        return DecisionOutput{clamp_prob(mean, prob_clamp_), {}};
    }

    std::vector<std::pair<double, std::size_t>> dist(support_.size());
    for (std::size_t i = 0; i < support_.size(); ++i) {
        const auto& xi = support_.features(i);
        double sq = 0.0;
        for (auto j : selected) {
            const double diff = x_masked[j] - xi[j];
            sq += diff * diff;
        }
        dist[i] = {sq, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors_),
                      dist.end());
    for (std::size_t i = 0; i < k_neighbors_; ++i) neighbors.push_back(dist[i].second);

    int positives = 0;
    for (auto i : neighbors) positives += support_.label(i);
    if (positives == 0 || static_cast<std::size_t>(positives) == neighbors.size()) {
        return DecisionOutput{clamp_prob(positives == 0 ? 0.0 : 1.0, prob_clamp_), {}};
    }

    std::vector<std::vector<double>> X(neighbors.size(), std::vector<double>(selected.size()));
    std::vector<double> y(neighbors.size());
    for (std::size_t r = 0; r < neighbors.size(); ++r) {
        const auto& xi = support_.features(neighbors[r]);
        for (std::size_t c = 0; c < selected.size(); ++c) X[r][c] = xi[selected[c]];
        y[r] = support_.label(neighbors[r]);
    }
    const auto fit = fit_logistic(X, y, ridge_, 500);

    double z = fit.bias;
    for (std::size_t c = 0; c < selected.size(); ++c) z += fit.weights[c] * x_masked[selected[c]];
    return DecisionOutput{clamp_prob(sigmoid(z), prob_clamp_), {}};
}

// ---------------------------------------------------------------------------
// LLM expert
// ---------------------------------------------------------------------------

MockLlmBackend::MockLlmBackend(std::string fixed_reply)
    : fn_([reply = std::move(fixed_reply)](const std::string&) { return reply; }) {}

HttpLlmBackend::HttpLlmBackend(const LlmExpertConfig& cfg)
    : endpoint_url_(cfg.endpoint_url),
      model_(cfg.model_name),
      temperature_(cfg.temperature),
      timeout_seconds_(cfg.timeout_seconds),
      max_retries_(cfg.max_retries) {
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) api_key_ = key;
    }
}

std::string HttpLlmBackend::complete(const std::string& prompt) const {
    const auto scheme_end = endpoint_url_.find("://");
    if (scheme_end == std::string::npos) {
        throw LlmTransportError("endpoint url has no scheme: " + endpoint_url_);
    }
    const auto path_start = endpoint_url_.find('/', scheme_end + 3);
    const std::string origin =
        path_start == std::string::npos ? endpoint_url_ : endpoint_url_.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : endpoint_url_.substr(path_start);

    nlohmann::json body = {
        {"model", model_},
        {"temperature", temperature_},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50L * attempt));
        }
        httplib::Client client(origin);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        client.set_write_timeout(timeout_seconds_, 0);

        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            const auto reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed completion body: ") + e.what();
        }
    }
    throw LlmTransportError("chat completion failed after " + std::to_string(max_retries_ + 1) +
                            " attempts: " + last_error);
}

std::string render_prompt(const LlmExpertConfig& cfg, const std::vector<double>& x_masked,
                          const std::vector<std::uint8_t>& mask, int style_index) {
    if (style_index < 0 || static_cast<std::size_t>(style_index) >= cfg.prompt_styles.size()) {
        throw std::out_of_range("prompt style index out of range");
    }
    std::string prompt = cfg.prompt_styles[static_cast<std::size_t>(style_index)].preamble;
    prompt +=
        "\nSome important notes: Not all features may be provided for every prediction. "
        "Please interpret these as best as you can and state the explanation behind your "
        "prediction.\n";
    prompt += "You will be given the following features: ";
    for (std::size_t j = 0; j < cfg.feature_descriptions.size(); ++j) {
        if (j > 0) prompt += ", ";
        prompt += cfg.feature_descriptions[j];
    }
    prompt += "\nStrictly follow this output format:\n";
    prompt += "1. Prediction: State whether the instance is likely \"Positive\" or \"Negative\" for " +
              cfg.positive_meaning + ", and mention how confident you are [Low, Moderate, High]\n";
    prompt +=
        "2. Confidence: Express your confidence as a probability strictly in this format: the "
        "scores should range from 0 to 1.\n";
    prompt += "3. Provide explanation for your predictions\n";
    prompt += "Please provide your prediction for the following: ";
    bool first = true;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (!mask[j]) continue;
        if (!first) prompt += ", ";
        first = false;
        prompt += cfg.feature_names[j] + " is " + format_value(x_masked[j]);
    }
    if (first) prompt += "(no features provided)";
    return prompt;
}

double parse_llm_reply(const std::string& reply) {
    const std::string lower = lowercase(reply);

    const auto pred_pos = lower.find("prediction:");
    if (pred_pos == std::string::npos) throw LlmParseError("reply has no 'Prediction:' field", reply);
    auto line_end = lower.find('\n', pred_pos);
    if (line_end == std::string::npos) line_end = lower.size();
    const std::string pred_line = lower.substr(pred_pos, line_end - pred_pos);
    const auto positive_at = pred_line.find("positive");
    const auto negative_at = pred_line.find("negative");
    if (positive_at == std::string::npos && negative_at == std::string::npos) {
        throw LlmParseError("prediction is neither Positive nor Negative", reply);
    }
    const bool positive = positive_at != std::string::npos &&
                          (negative_at == std::string::npos || positive_at < negative_at);

    const auto conf_pos = lower.find("confidence:", pred_pos);
    if (conf_pos == std::string::npos) throw LlmParseError("reply has no 'Confidence:' field", reply);
    std::size_t num_start = conf_pos + std::string("confidence:").size();
    while (num_start < reply.size() &&
           !(std::isdigit(static_cast<unsigned char>(reply[num_start])) || reply[num_start] == '.')) {
        ++num_start;
    }
    if (num_start >= reply.size()) throw LlmParseError("confidence has no numeric value", reply);
    double confidence = 0.0;
    const auto [ptr, ec] =
        std::from_chars(reply.data() + num_start, reply.data() + reply.size(), confidence);
    if (ec != std::errc{}) throw LlmParseError("confidence is not parseable", reply);
    (void)ptr;
    if (confidence < 0.0 || confidence > 1.0) {
        throw LlmParseError("confidence " + std::to_string(confidence) + " outside [0,1]", reply);
    }
    return positive ? confidence : 1.0 - confidence;
}

LlmExpert::LlmExpert(LlmExpertConfig cfg, std::shared_ptr<const LlmBackend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
    if (cfg_.prompt_styles.empty()) throw std::invalid_argument("prompt_styles must be non-empty");
    if (cfg_.feature_names.size() != cfg_.feature_descriptions.size()) {
        throw std::invalid_argument("feature names/descriptions size mismatch");
    }
    if (!backend_) {
        if (cfg_.mock) {
            backend_ = std::make_shared<MockLlmBackend>(cfg_.mock_reply);
        } else {
            backend_ = std::make_shared<HttpLlmBackend>(cfg_);
        }
    }
}

DecisionOutput LlmExpert::decide(const std::vector<double>& x_masked,
                                 const std::vector<std::uint8_t>& mask, int option) const {
    {
        std::unique_lock lock(gate_mutex_);
        gate_cv_.wait(lock, [&] { return in_flight_ < cfg_.max_concurrent; });
        ++in_flight_;
    }
    std::string reply;
    try {
        reply = backend_->complete(render_prompt(cfg_, x_masked, mask, option));
    } catch (...) {
        std::lock_guard lock(gate_mutex_);
        --in_flight_;
        gate_cv_.notify_one();
        throw;
    }
    {
        std::lock_guard lock(gate_mutex_);
        --in_flight_;
        gate_cv_.notify_one();
    }
    DecisionOutput out;
    out.prob_positive = parse_llm_reply(reply);
    out.metadata["raw"] = reply;
    return out;
}

}  // namespace diss
