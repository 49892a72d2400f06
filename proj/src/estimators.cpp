#include "diss/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace diss {

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

std::vector<double> ActionEncoder::encode(const std::vector<double>& x,
                                          const Action& action) const {
    std::vector<double> out;
    encode_into(x, action, out);
    return out;
}

void ActionEncoder::encode_into(const std::vector<double>& x, const Action& action,
                                std::vector<double>& out) const {
    if (x.size() != d || action.mask.size() != d) {
        throw std::invalid_argument("encoder dimension mismatch");
    }
    out.assign(input_dim(), 0.0);
    for (std::size_t j = 0; j < d; ++j) out[j] = x[j];
    for (std::size_t j = 0; j < d; ++j) out[d + j] = action.mask[j];
    if (n_options > 1) {
        if (action.option < 0 || action.option >= n_options) {
            throw std::invalid_argument("option index out of range");
        }
        out[2 * d + static_cast<std::size_t>(action.option)] = 1.0;
    }
}

// ---------------------------------------------------------------------------
// Regression trees / boosting
// ---------------------------------------------------------------------------

double RegressionTree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

namespace {

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<double>& targets;
    const BoostConfig& cfg;
    RegressionTree tree;

    int build(std::vector<std::size_t>& indices, int depth) {
        const auto node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double sum = 0.0;
        for (auto i : indices) sum += targets[i];
        const double mean = sum / static_cast<double>(indices.size());
        tree.nodes.back().value = mean;

        if (depth >= cfg.max_depth ||
            indices.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
            return node_id;
        }

        const std::size_t d = X[0].size();
        int best_feature = -1;
        std::size_t best_pos = 0;
        double best_threshold = 0.0;
        double best_gain = 1e-12;

        double parent_sse = 0.0;
        double total_sum = 0.0, total_sq = 0.0;
        for (auto i : indices) {
            const double diff = targets[i] - mean;
            parent_sse += diff * diff;
            total_sum += targets[i];
            total_sq += targets[i] * targets[i];
        }

        std::vector<std::size_t> order(indices.size());
        auto sort_by_feature = [&](std::size_t f) {
            order = indices;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (X[a][f] != X[b][f]) return X[a][f] < X[b][f];
                return a < b;
            });
        };

        for (std::size_t f = 0; f < d; ++f) {
            sort_by_feature(f);
            double left_sum = 0.0, left_sq = 0.0;
            const auto n = order.size();
            for (std::size_t pos = 1; pos < n; ++pos) {
                const double t = targets[order[pos - 1]];
                left_sum += t;
                left_sq += t * t;
                if (pos < static_cast<std::size_t>(cfg.min_leaf) ||
                    n - pos < static_cast<std::size_t>(cfg.min_leaf)) {
                    continue;
                }
                if (X[order[pos - 1]][f] >= X[order[pos]][f]) continue;
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse_left = left_sq - left_sum * left_sum / static_cast<double>(pos);
                const double sse_right =
                    right_sq - right_sum * right_sum / static_cast<double>(n - pos);
                const double gain = parent_sse - sse_left - sse_right;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_pos = pos;
                    best_threshold = 0.5 * (X[order[pos - 1]][f] + X[order[pos]][f]);
                }
            }
        }

        if (best_feature < 0) return node_id;

        sort_by_feature(static_cast<std::size_t>(best_feature));
        std::vector<std::size_t> left_idx(order.begin(),
                                          order.begin() + static_cast<std::ptrdiff_t>(best_pos));
        std::vector<std::size_t> right_idx(order.begin() + static_cast<std::ptrdiff_t>(best_pos),
                                           order.end());
        const int left = build(left_idx, depth + 1);
        const int right = build(right_idx, depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        return node_id;
    }
};

}  // namespace

BoostedTreeModel BoostedTreeModel::fit(const std::vector<std::vector<double>>& X,
                                       const std::vector<double>& y, const BoostConfig& cfg,
                                       std::uint64_t seed) {
    (void)seed;  // splits are exhaustive; kept for interface stability
    if (X.empty()) throw std::invalid_argument("no training samples");
    if (X.size() != y.size()) throw std::invalid_argument("X/y size mismatch");

    BoostedTreeModel model;
    model.cfg = cfg;

    const std::size_t n = X.size();
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (cfg.loss == BoostLoss::squared) {
        model.base_score = mean_y;
    } else {
        model.base_score = logit(clamp_prob(mean_y, cfg.prob_clamp));
    }

    std::vector<double> score(n, model.base_score);
    std::vector<double> residual(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    model.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
    for (int t = 0; t < cfg.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = cfg.loss == BoostLoss::squared ? y[i] - score[i]
                                                         : y[i] - sigmoid(score[i]);
        }
        TreeBuilder builder{X, residual, cfg, {}};
        auto indices = all;
        builder.build(indices, 0);
        for (std::size_t i = 0; i < n; ++i) {
            score[i] += cfg.learning_rate * builder.tree.predict(X[i]);
        }
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

double BoostedTreeModel::predict_score(const std::vector<double>& x) const {
    return predict_score_partial(x, static_cast<int>(trees.size()));
}

double BoostedTreeModel::predict_score_partial(const std::vector<double>& x, int n_trees) const {
    double s = base_score;
    const auto limit = std::min<std::size_t>(trees.size(), static_cast<std::size_t>(n_trees));
    for (std::size_t t = 0; t < limit; ++t) s += cfg.learning_rate * trees[t].predict(x);
    return s;
}

double BoostedTreeModel::predict_prob(const std::vector<double>& x) const {
    return clamp_prob(sigmoid(predict_score(x)), cfg.prob_clamp);
}

// ---------------------------------------------------------------------------
// Bootstrap ensemble
// ---------------------------------------------------------------------------

BootstrapEnsemble BootstrapEnsemble::fit(const std::vector<std::vector<double>>& X,
                                         const std::vector<double>& y, const EnsembleConfig& cfg,
                                         std::uint64_t fit_seed) {
    if (cfg.members < 1) throw std::invalid_argument("ensemble needs >= 1 member");
    if (X.empty()) throw std::invalid_argument("no training samples");

    BootstrapEnsemble ens;
    ens.seed = fit_seed;
    ens.members.reserve(static_cast<std::size_t>(cfg.members));
    const std::size_t n = X.size();
    for (int j = 0; j < cfg.members; ++j) {
        const std::uint64_t member_seed = mix_seed(fit_seed, static_cast<std::uint64_t>(j));
        if (cfg.resample) {
            Rng rng(member_seed);
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::vector<std::vector<double>> Xj;
            std::vector<double> yj;
            Xj.reserve(n);
            yj.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto r = pick(rng);
                Xj.push_back(X[r]);
                yj.push_back(y[r]);
            }
            ens.members.push_back(BoostedTreeModel::fit(Xj, yj, cfg.base, member_seed));
        } else {
            ens.members.push_back(BoostedTreeModel::fit(X, y, cfg.base, member_seed));
        }
    }
    return ens;
}

double BootstrapEnsemble::mean_score(const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& m : members) s += m.predict_score(x);
    return s / static_cast<double>(members.size());
}

double BootstrapEnsemble::mean_prob(const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& m : members) s += m.predict_prob(x);
    return s / static_cast<double>(members.size());
}

int ensemble_draw(const BootstrapEnsemble& ens, Rng& rng) {
    if (ens.member_count() < 1) throw std::logic_error("ensemble is empty");
    std::uniform_int_distribution<int> pick(0, ens.member_count() - 1);
    return pick(rng);
}

double ensemble_mean(const BootstrapEnsemble& ens, const std::vector<double>& input) {
    return ens.mean_score(input);
}

// ---------------------------------------------------------------------------
// Fit entry points
// ---------------------------------------------------------------------------

namespace {

void encode_observations(const std::vector<Observation>& observations, const Dataset& train,
                         const ActionEncoder& encoder, std::vector<std::vector<double>>& X) {
    X.clear();
    X.reserve(observations.size());
    for (const auto& obs : observations) {
        X.push_back(encoder.encode(train.features(obs.instance_index), obs.action));
    }
}

}  // namespace

BootstrapEnsemble ensemble_fit(const std::vector<Observation>& observations, const Dataset& train,
                               const ActionEncoder& encoder, const EnsembleConfig& cfg,
                               std::uint64_t seed) {
    if (observations.empty()) throw std::invalid_argument("no observations to fit on");
    std::vector<std::vector<double>> X;
    encode_observations(observations, train, encoder, X);
    std::vector<double> y;
    y.reserve(observations.size());
    for (const auto& obs : observations) y.push_back(obs.reward);
    return BootstrapEnsemble::fit(X, y, cfg, seed);
}

BootstrapEnsemble mimic_fit_label_model(const Dataset& dataset, const EnsembleConfig& cfg,
                                        std::uint64_t seed) {
    EnsembleConfig classifier_cfg = cfg;
    classifier_cfg.base.loss = BoostLoss::logistic;
    std::vector<std::vector<double>> X;
    X.reserve(dataset.size());
    std::vector<double> y;
    y.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        X.push_back(dataset.features(i));
        y.push_back(dataset.label(i));
    }
    return BootstrapEnsemble::fit(X, y, classifier_cfg, seed);
}

BootstrapEnsemble mimic_fit_expert_model(const std::vector<Observation>& observations,
                                         const Dataset& train, const ActionEncoder& encoder,
                                         const EnsembleConfig& cfg, std::uint64_t seed) {
    if (observations.empty()) throw std::invalid_argument("no observations to fit on");
    EnsembleConfig classifier_cfg = cfg;
    classifier_cfg.base.loss = BoostLoss::logistic;
    std::vector<std::vector<double>> X;
    encode_observations(observations, train, encoder, X);
    std::vector<double> y;
    y.reserve(observations.size());
    for (const auto& obs : observations) y.push_back(obs.output.prob_positive);
    return BootstrapEnsemble::fit(X, y, classifier_cfg, seed);
}

// ---------------------------------------------------------------------------
// Reward models
// ---------------------------------------------------------------------------

ActionScorer RewardModel::member_scorer(int member, const std::vector<double>& x) const {
    return [this, member, &x](const Action& a) { return member_estimate(member, x, a); };
}

ActionScorer RewardModel::mean_scorer(const std::vector<double>& x) const {
    return [this, &x](const Action& a) { return mean_estimate(x, a); };
}

int RewardModel::draw_member(Rng& rng) const {
    if (member_count() < 1) throw std::logic_error("reward model is not fitted");
    std::uniform_int_distribution<int> pick(0, member_count() - 1);
    return pick(rng);
}

double PlainRewardModel::member_estimate(int member, const std::vector<double>& x,
                                         const Action& action) const {
    return ensemble_.member(member).predict_score(encoder_.encode(x, action));
}

double PlainRewardModel::mean_estimate(const std::vector<double>& x, const Action& action) const {
    return ensemble_.mean_score(encoder_.encode(x, action));
}

void PlainRewardModel::refit(const std::vector<Observation>& observations, const Dataset& train,
                             std::uint64_t seed) {
    ensemble_ = ensemble_fit(observations, train, encoder_, cfg_, seed);
}

std::unique_ptr<RewardModel> PlainRewardModel::clone() const {
    return std::make_unique<PlainRewardModel>(*this);
}

namespace {

double expected_reward(double p_positive, double eta_hat, const Action& action,
                       const RewardSpec& spec) {
    const DecisionOutput out{eta_hat, {}};
    return p_positive * compute_reward(spec, 1, action, out) +
           (1.0 - p_positive) * compute_reward(spec, 0, action, out);
}

}  // namespace

double MimicEstimator::member_estimate(int member, const std::vector<double>& x,
                                       const Action& action) const {
    const double p = label_model_.member(member).predict_prob(x);
    const double eta = mimic_model_.member(member).predict_prob(encoder_.encode(x, action));
    return expected_reward(p, eta, action, reward_spec_);
}

double MimicEstimator::mean_estimate(const std::vector<double>& x, const Action& action) const {
    const double p = label_model_.mean_prob(x);
    const double eta = mimic_model_.mean_prob(encoder_.encode(x, action));
    return expected_reward(p, eta, action, reward_spec_);
}

ActionScorer MimicEstimator::member_scorer(int member, const std::vector<double>& x) const {
    const double p = label_model_.member(member).predict_prob(x);
    return [this, member, p, &x](const Action& a) {
        const double eta = mimic_model_.member(member).predict_prob(encoder_.encode(x, a));
        return expected_reward(p, eta, a, reward_spec_);
    };
}

ActionScorer MimicEstimator::mean_scorer(const std::vector<double>& x) const {
    const double p = label_model_.mean_prob(x);
    return [this, p, &x](const Action& a) {
        const double eta = mimic_model_.mean_prob(encoder_.encode(x, a));
        return expected_reward(p, eta, a, reward_spec_);
    };
}

void MimicEstimator::refit(const std::vector<Observation>& observations, const Dataset& train,
                           std::uint64_t seed) {
    mimic_model_ = mimic_fit_expert_model(observations, train, encoder_, mimic_cfg_, seed);
}

std::unique_ptr<RewardModel> MimicEstimator::clone() const {
    return std::make_unique<MimicEstimator>(*this);
}

double mimic_estimate(const MimicEstimator& est, const std::vector<double>& x,
                      const Action& action, int member_index) {
    return est.member_estimate(member_index, x, action);
}

double mimic_estimate_mean(const MimicEstimator& est, const std::vector<double>& x,
                           const Action& action) {
    return est.mean_estimate(x, action);
}

// ---------------------------------------------------------------------------
// KNN helper
// ---------------------------------------------------------------------------

double knn_mean(const std::vector<double>& targets,
                const std::function<double(std::size_t)>& distance_to, std::size_t k) {
    if (targets.empty()) throw std::invalid_argument("knn_mean over empty set");
    std::vector<std::pair<double, std::size_t>> dist(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) dist[i] = {distance_to(i), i};
    const std::size_t use = std::min(k, targets.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(use), dist.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < use; ++i) sum += targets[dist[i].second];
    return sum / static_cast<double>(use);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kModelMagic = "DISS-MODEL-1";

nlohmann::json tree_to_json(const RegressionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        nodes.push_back({{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right},
                         {"v", n.value}});
    }
    return {{"nodes", nodes}};
}

RegressionTree tree_from_json(const nlohmann::json& j) {
    RegressionTree tree;
    for (const auto& n : j.at("nodes")) {
        tree.nodes.push_back({n.at("f").get<int>(), n.at("t").get<double>(), n.at("l").get<int>(),
                              n.at("r").get<int>(), n.at("v").get<double>()});
    }
    return tree;
}

nlohmann::json boost_to_json(const BoostedTreeModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
    return {{"n_trees", model.cfg.n_trees},
            {"max_depth", model.cfg.max_depth},
            {"learning_rate", model.cfg.learning_rate},
            {"min_leaf", model.cfg.min_leaf},
            {"loss", model.cfg.loss == BoostLoss::squared ? "squared" : "logistic"},
            {"prob_clamp", model.cfg.prob_clamp},
            {"base_score", model.base_score},
            {"trees", trees}};
}

BoostedTreeModel boost_from_json(const nlohmann::json& j) {
    BoostedTreeModel model;
    model.cfg.n_trees = j.at("n_trees").get<int>();
    model.cfg.max_depth = j.at("max_depth").get<int>();
    model.cfg.learning_rate = j.at("learning_rate").get<double>();
    model.cfg.min_leaf = j.at("min_leaf").get<int>();
    model.cfg.loss = j.at("loss").get<std::string>() == "squared" ? BoostLoss::squared
                                                                  : BoostLoss::logistic;
    model.cfg.prob_clamp = j.at("prob_clamp").get<double>();
    model.base_score = j.at("base_score").get<double>();
    for (const auto& t : j.at("trees")) model.trees.push_back(tree_from_json(t));
    return model;
}

nlohmann::json ensemble_to_json(const BootstrapEnsemble& ens) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : ens.members) members.push_back(boost_to_json(m));
    return {{"seed", ens.seed}, {"members", members}};
}

BootstrapEnsemble ensemble_from_json(const nlohmann::json& j) {
    BootstrapEnsemble ens;
    ens.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("members")) ens.members.push_back(boost_from_json(m));
    return ens;
}

void write_snapshot(const nlohmann::json& payload, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << payload.dump(2) << '\n';
}

nlohmann::json read_snapshot(const std::string& path, const std::string& kind) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read model file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != kModelMagic) {
        throw std::runtime_error("bad model format magic in " + path);
    }
    if (j.value("kind", "") != kind) {
        throw std::runtime_error("model file " + path + " holds kind '" + j.value("kind", "") +
                                 "', expected '" + kind + "'");
    }
    return j;
}

}  // namespace

void save_model(const BoostedTreeModel& model, const std::string& path) {
    nlohmann::json j = {{"format", kModelMagic}, {"kind", "boosted_tree"},
                        {"model", boost_to_json(model)}};
    write_snapshot(j, path);
}

void save_model(const BootstrapEnsemble& ens, const std::string& path) {
    nlohmann::json j = {{"format", kModelMagic}, {"kind", "ensemble"},
                        {"model", ensemble_to_json(ens)}};
    write_snapshot(j, path);
}

void save_model(const MimicEstimator& est, const std::string& path) {
    nlohmann::json j = {
        {"format", kModelMagic},
        {"kind", "mimic"},
        {"label_model", ensemble_to_json(est.label_model())},
        {"mimic_model", ensemble_to_json(est.mimic_model())},
        {"encoder", {{"d", est.encoder().d}, {"n_options", est.encoder().n_options}}},
        {"reward",
         {{"kind", est.reward_spec().kind == RewardKind::log_likelihood ? "log_likelihood"
                                                                        : "penalized"},
          {"lambda", est.reward_spec().lambda},
          {"epsilon", est.reward_spec().epsilon}}},
        {"mimic_cfg",
         {{"members", est.mimic_cfg().members}, {"resample", est.mimic_cfg().resample}}},
    };
    write_snapshot(j, path);
}

BoostedTreeModel load_boosted_tree(const std::string& path) {
    return boost_from_json(read_snapshot(path, "boosted_tree").at("model"));
}

BootstrapEnsemble load_ensemble(const std::string& path) {
    return ensemble_from_json(read_snapshot(path, "ensemble").at("model"));
}

MimicEstimator load_mimic(const std::string& path) {
    const auto j = read_snapshot(path, "mimic");
    ActionEncoder encoder{j.at("encoder").at("d").get<std::size_t>(),
                          j.at("encoder").at("n_options").get<int>()};
    RewardSpec spec;
    spec.kind = j.at("reward").at("kind").get<std::string>() == "log_likelihood"
                    ? RewardKind::log_likelihood
                    : RewardKind::log_likelihood_with_cardinality_penalty;
    spec.lambda = j.at("reward").at("lambda").get<double>();
    spec.epsilon = j.at("reward").at("epsilon").get<double>();
    EnsembleConfig cfg;
    cfg.members = j.at("mimic_cfg").at("members").get<int>();
    cfg.resample = j.at("mimic_cfg").at("resample").get<bool>();
    MimicEstimator est(ensemble_from_json(j.at("label_model")), encoder, spec, cfg);
    est.mutable_mimic_model() = ensemble_from_json(j.at("mimic_model"));
    return est;
}

}  // namespace diss
