#pragma once

#include <memory>
#include <string>
#include <vector>

#include "diss/core.hpp"
#include "diss/data.hpp"

namespace diss {

/// Maps (x, action) to the regression input [x | mask bits | one-hot option];
/// the option block is omitted for a single-option space.
struct ActionEncoder {
    std::size_t d = 0;
    int n_options = 1;

    std::size_t input_dim() const {
        return 2 * d + (n_options > 1 ? static_cast<std::size_t>(n_options) : 0);
    }

    std::vector<double> encode(const std::vector<double>& x, const Action& action) const;
    void encode_into(const std::vector<double>& x, const Action& action,
                     std::vector<double>& out) const;
};

enum class BoostLoss { squared, logistic };

struct BoostConfig {
    int n_trees = 64;
    int max_depth = 4;
    double learning_rate = 0.3;
    int min_leaf = 2;
    BoostLoss loss = BoostLoss::squared;
    double prob_clamp = 1e-6;
};

struct TreeNode {
    int feature = -1;  // negative marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(const std::vector<double>& x) const;
};

/// Gradient-boosted regression trees; squared loss for regression targets,
/// logistic loss for hard or soft probability targets.
struct BoostedTreeModel {
    BoostConfig cfg;
    double base_score = 0.0;
    std::vector<RegressionTree> trees;

    static BoostedTreeModel fit(const std::vector<std::vector<double>>& X,
                                const std::vector<double>& y, const BoostConfig& cfg,
                                std::uint64_t seed);

    double predict_score(const std::vector<double>& x) const;
    double predict_score_partial(const std::vector<double>& x, int n_trees) const;
    /// sigmoid(score) clamped to [prob_clamp, 1 - prob_clamp].
    double predict_prob(const std::vector<double>& x) const;
};

struct EnsembleConfig {
    int members = 2;
    bool resample = true;
    BoostConfig base;
};

/// Bootstrap ensemble of boosted-tree models; member j is fitted on a
/// with-replacement resample of the training pairs (or the full set when
/// resampling is disabled).
struct BootstrapEnsemble {
    std::vector<BoostedTreeModel> members;
    std::uint64_t seed = 0;

    static BootstrapEnsemble fit(const std::vector<std::vector<double>>& X,
                                 const std::vector<double>& y, const EnsembleConfig& cfg,
                                 std::uint64_t fit_seed);

    int member_count() const { return static_cast<int>(members.size()); }
    const BoostedTreeModel& member(int j) const { return members.at(static_cast<std::size_t>(j)); }

    double mean_score(const std::vector<double>& x) const;
    double mean_prob(const std::vector<double>& x) const;
};

/// Uniform member draw; the frequentist stand-in for a posterior function draw.
int ensemble_draw(const BootstrapEnsemble& ens, Rng& rng);

/// Mean member prediction at an encoded input.
double ensemble_mean(const BootstrapEnsemble& ens, const std::vector<double>& input);

/// Regression ensemble on reward targets over encoded (x, b, o) inputs.
BootstrapEnsemble ensemble_fit(const std::vector<Observation>& observations, const Dataset& train,
                               const ActionEncoder& encoder, const EnsembleConfig& cfg,
                               std::uint64_t seed);

/// Classifier ensemble for p(y=1|x), fitted on the supervised dataset only.
BootstrapEnsemble mimic_fit_label_model(const Dataset& dataset, const EnsembleConfig& cfg,
                                        std::uint64_t seed);

/// Classifier ensemble mimicking the decision-maker's probability outputs
/// (soft targets) over encoded (x, b, o) inputs.
BootstrapEnsemble mimic_fit_expert_model(const std::vector<Observation>& observations,
                                         const Dataset& train, const ActionEncoder& encoder,
                                         const EnsembleConfig& cfg, std::uint64_t seed);

/// Estimator with member (draw) and mean views, refit from the replay data;
/// acquisition draws members, evaluation uses the mean. `estimate` is the mean.
class RewardModel : public RewardEstimator {
public:
    virtual int member_count() const = 0;
    virtual double member_estimate(int member, const std::vector<double>& x,
                                   const Action& action) const = 0;
    virtual double mean_estimate(const std::vector<double>& x, const Action& action) const = 0;

    virtual ActionScorer member_scorer(int member, const std::vector<double>& x) const;
    virtual ActionScorer mean_scorer(const std::vector<double>& x) const;

    virtual void refit(const std::vector<Observation>& observations, const Dataset& train,
                       std::uint64_t seed) = 0;
    virtual std::unique_ptr<RewardModel> clone() const = 0;
    virtual bool fitted() const = 0;

    double estimate(const std::vector<double>& x, const Action& action) const override {
        return mean_estimate(x, action);
    }

    int draw_member(Rng& rng) const;
};

/// Plain route: one bootstrap ensemble regressing the reward directly.
class PlainRewardModel final : public RewardModel {
public:
    PlainRewardModel(ActionEncoder encoder, EnsembleConfig cfg)
        : encoder_(encoder), cfg_(cfg) {}

    int member_count() const override { return ensemble_.member_count(); }
    double member_estimate(int member, const std::vector<double>& x,
                           const Action& action) const override;
    double mean_estimate(const std::vector<double>& x, const Action& action) const override;
    void refit(const std::vector<Observation>& observations, const Dataset& train,
               std::uint64_t seed) override;
    std::unique_ptr<RewardModel> clone() const override;
    bool fitted() const override { return ensemble_.member_count() > 0; }

    const BootstrapEnsemble& ensemble() const { return ensemble_; }

private:
    ActionEncoder encoder_;
    EnsembleConfig cfg_;
    BootstrapEnsemble ensemble_;
};

/// Mimic-structured route: a label ensemble p(y=1|x) fitted once on the
/// supervised data, an expert-mimic ensemble fitted on observations, and the
/// known reward function combining them.
class MimicEstimator final : public RewardModel {
public:
    MimicEstimator(BootstrapEnsemble label_model, ActionEncoder encoder, RewardSpec reward_spec,
                   EnsembleConfig mimic_cfg)
        : label_model_(std::move(label_model)),
          encoder_(encoder),
          reward_spec_(reward_spec),
          mimic_cfg_(mimic_cfg) {}

    int member_count() const override { return label_model_.member_count(); }
    double member_estimate(int member, const std::vector<double>& x,
                           const Action& action) const override;
    double mean_estimate(const std::vector<double>& x, const Action& action) const override;
    ActionScorer member_scorer(int member, const std::vector<double>& x) const override;
    ActionScorer mean_scorer(const std::vector<double>& x) const override;
    void refit(const std::vector<Observation>& observations, const Dataset& train,
               std::uint64_t seed) override;
    std::unique_ptr<RewardModel> clone() const override;
    bool fitted() const override { return mimic_model_.member_count() > 0; }

    const BootstrapEnsemble& label_model() const { return label_model_; }
    const BootstrapEnsemble& mimic_model() const { return mimic_model_; }
    BootstrapEnsemble& mutable_mimic_model() { return mimic_model_; }
    const RewardSpec& reward_spec() const { return reward_spec_; }
    const ActionEncoder& encoder() const { return encoder_; }
    const EnsembleConfig& mimic_cfg() const { return mimic_cfg_; }

private:
    BootstrapEnsemble label_model_;
    BootstrapEnsemble mimic_model_;
    ActionEncoder encoder_;
    RewardSpec reward_spec_;
    EnsembleConfig mimic_cfg_;
};

/// Expected reward over y ~ p_hat combined with the mimicked expert output.
double mimic_estimate(const MimicEstimator& est, const std::vector<double>& x,
                      const Action& action, int member_index);
double mimic_estimate_mean(const MimicEstimator& est, const std::vector<double>& x,
                           const Action& action);

/// Mean target of the k nearest points under a caller-supplied distance.
double knn_mean(const std::vector<double>& targets,
                const std::function<double(std::size_t)>& distance_to, std::size_t k);

// Snapshot format, versioned with the "DISS-MODEL-1" magic string.
void save_model(const BoostedTreeModel& model, const std::string& path);
void save_model(const BootstrapEnsemble& ens, const std::string& path);
void save_model(const MimicEstimator& est, const std::string& path);
BoostedTreeModel load_boosted_tree(const std::string& path);
BootstrapEnsemble load_ensemble(const std::string& path);
MimicEstimator load_mimic(const std::string& path);

}  // namespace diss
