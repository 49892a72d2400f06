#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "diss/core.hpp"
#include "diss/environment.hpp"
#include "diss/estimators.hpp"

namespace diss {

enum class Strategy { fts_ts, fts_cmts, random, modiste_knn, modiste_uknn };
enum class EstimatorKind { plain, mimic };

struct AcquisitionConfig {
    std::size_t budget = 8000;
    std::size_t warmup = 500;
    int ensemble_size = 2;
    int batch_size = 32;             // CMTS candidate instances
    std::size_t refit_interval = 25;
    std::size_t action_cap = 5000;
    Strategy strategy = Strategy::fts_ts;
    EstimatorKind estimator_kind = EstimatorKind::plain;
    BoostConfig boost;
    bool resample = true;
    int modiste_k = 10;
    double modiste_nu = 1.0;
    double modiste_ucb_c = 1.0;
    std::size_t checkpoint_every = 250;
    int max_consecutive_failures = 10;

    EnsembleConfig ensemble_config() const {
        return EnsembleConfig{ensemble_size, resample, boost};
    }
    void validate() const;
};

struct StrategyMeta {
    int drawn_member = -1;
    double improvement = std::numeric_limits<double>::quiet_NaN();
};

/// Append-only log of acquired observations plus per-query strategy metadata.
struct ReplayBuffer {
    std::vector<Observation> observations;
    std::vector<StrategyMeta> meta;

    std::size_t size() const { return observations.size(); }
    void append(Observation obs, StrategyMeta m = {});
};

std::string buffer_to_ndjson(const ReplayBuffer& buffer);
ReplayBuffer buffer_from_ndjson(const std::string& text);
void save_buffer(const ReplayBuffer& buffer, const std::string& path);
ReplayBuffer load_buffer(const std::string& path);

/// t_init uniformly random queries: instance uniform, mask bits fair coins,
/// option uniform.
ReplayBuffer run_warmup(const Environment& env, std::size_t t_init, Rng& rng);

/// One frequentist Thompson-sampling step; appends the new observation.
/// TS picks the instance uniformly; CMTS picks the candidate instance with the
/// largest draw-over-mean improvement at its mean-optimal action.
Observation fts_step(ReplayBuffer& buffer, const RewardModel& model, bool cmts,
                     const Environment& env, int batch_size, std::size_t action_cap, Rng& rng);

/// Mean reward of the k nearest same-action entries by context distance;
/// actions never observed fall back to the buffer's minimum reward.
double modiste_knn_estimate(const ReplayBuffer& buffer, const Dataset& train,
                            const std::vector<double>& x, const Action& action, std::size_t k);

/// KNN regression under distance(x,a ; x',a') = |x - x'| + nu * |a - a'| over
/// (context, mask + option one-hot) pairs.
double modiste_uknn_estimate(const ReplayBuffer& buffer, const Dataset& train,
                             const std::vector<double>& x, const Action& action, std::size_t k,
                             double nu);

/// Concatenated mask bits and option one-hot used by the unified distance.
std::vector<double> action_vector(const Action& action, int n_options);

double uknn_distance(const std::vector<double>& x_a, const std::vector<double>& av_a,
                     const std::vector<double>& x_b, const std::vector<double>& av_b, double nu);

/// One KNN-UCB step: uniform instance, candidate actions scored as
/// estimate + c * sqrt(log t / max(1, n_match)); appends the new observation.
Observation modiste_acquire_step(ReplayBuffer& buffer, Strategy variant, const Environment& env,
                                 std::size_t k, double nu, std::size_t action_cap, double ucb_c,
                                 Rng& rng);

/// Called at every evaluation checkpoint; `model` is null for buffer-backed
/// strategies (modiste), freshly fitted otherwise.
using CheckpointFn =
    std::function<void(std::size_t queries, const ReplayBuffer& buffer, const RewardModel* model)>;

struct AcquisitionResult {
    ReplayBuffer buffer;
    std::unique_ptr<RewardModel> model;  // final fit; null for modiste strategies
    std::vector<std::size_t> checkpoints;
};

std::vector<std::size_t> checkpoint_schedule(const AcquisitionConfig& cfg);

/// Warmup plus the configured strategy up to the budget, refitting estimators
/// on the configured cadence and reporting checkpoints.
AcquisitionResult run_acquisition(const AcquisitionConfig& cfg, const Environment& env,
                                  std::uint64_t seed, const CheckpointFn& on_checkpoint = {});

Strategy strategy_from_string(const std::string& s);
std::string strategy_to_string(Strategy s);

}  // namespace diss
