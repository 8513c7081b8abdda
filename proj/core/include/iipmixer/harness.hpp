#pragma once

#include "iipmixer/config.hpp"
#include "iipmixer/dataset.hpp"
#include "iipmixer/forest.hpp"
#include "iipmixer/metrics.hpp"
#include "iipmixer/model.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace iipm {

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

//! Everything derived from the data section of a config: the fleet, the
//! importance-based feature selection, scaling fitted on training cycles
//! only, and the train/val/test windows in scaled+selected space.
struct PreparedData {
    std::vector<BatterySeries> batteries;       // raw values, derived features appended
    std::vector<BatterySeries> model_batteries; // scaled, restricted to selected features
    SplitPolicy policy;                         // test battery resolved
    DatasetSplit split;
    Scaler scaler;                              // fitted over all features
    std::vector<double> importances;            // per raw feature, sums to 1
    std::vector<std::size_t> selected;          // raw feature indices, ascending
    std::vector<std::string> selected_names;
    FeatureWeights alpha = FeatureWeights::uniform(1);  // over selected channels
    std::size_t capacity_feature = 0;           // index into raw features
    std::size_t capacity_channel = 0;           // index into selected channels

    std::size_t channels() const { return selected.size(); }
};

PreparedData prepare_data(const ExperimentConfig& cfg);

//! Fresh model of the configured architecture; init drawn from a stream
//! derived from `seed`.
std::unique_ptr<Forecaster> make_model(const ExperimentConfig& cfg, std::size_t channels,
                                       std::uint64_t seed);

//! Loss weights a run actually trains with: forest alpha when weighted,
//! uniform otherwise (or when alpha_source is uniform).
FeatureWeights effective_weights(const ExperimentConfig& cfg, const PreparedData& data);

struct TrainResult {
    std::unique_ptr<Forecaster> model;  // best-validation-loss checkpoint
    std::vector<EpochStats> history;
    std::uint64_t seed = 0;
};

//! Minibatch SGD on the weighted MSE with best-val checkpointing. When
//! `live_history` is given it grows epoch by epoch, so a divergence abort
//! still leaves the partial history with the caller.
TrainResult train_model(const ExperimentConfig& cfg, const PreparedData& data,
                        std::uint64_t seed, std::vector<EpochStats>* live_history = nullptr);

struct Evaluation {
    //! One-step metrics on the capacity channel in Ah, plus rollout RUL/ARE.
    EvalRow row;
    //! Rollout-trajectory metrics over the same span, method "<m>@rollout".
    EvalRow rollout_row;
    std::vector<EvalRow> per_battery;
    bool rul_flagged = false;  // threshold never crossed; ARE omitted

    //! Capacity trajectory of the first test battery for plot emission.
    std::vector<std::size_t> traj_cycles;
    std::vector<double> traj_true;  // NaN once past the recorded series
    std::vector<double> traj_pred;
};

Evaluation evaluate_model(const Forecaster& model, const PreparedData& data,
                          const std::string& method_label);

struct RunResult {
    std::string config_hash;
    std::uint64_t data_hash = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<Evaluation> per_seed;
    std::vector<std::vector<EpochStats>> histories;
    EvalRow mean_row;
    EvalRow mean_rollout_row;
};

//! Trains and evaluates all configured seeds. When out_root is non-empty,
//! artifacts land in <out_root>/<config-hash>/: config.cfg, history.csv,
//! checkpoint(_seed*) and report.csv; a divergence persists the partial
//! history before the abort propagates.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_root = "");

//! Reruns the base config along one ablation axis: "heads", "serial",
//! "weighted", "features" or "arch"; every cell shares the data split.
struct AblationCell {
    std::string variant;
    RunResult result;
};
std::vector<AblationCell> run_ablation_axis(const ExperimentConfig& base,
                                            const std::string& axis);
const std::vector<std::string>& ablation_axes();

//! report.csv body for a finished run: per-seed rows, the mean row and the
//! rollout mean row.
EvalReport run_report(const RunResult& run, std::string_view method);
//! One row per variant, Table-4..7 shaped.
EvalReport ablation_report(std::span<const AblationCell> cells);

void write_history_csv(std::ostream& out,
                       std::span<const std::pair<std::uint64_t, std::vector<EpochStats>>> runs);
void write_importance_csv(std::ostream& out, std::span<const std::string> feature_names,
                          std::span<const double> importances,
                          std::span<const std::size_t> selected);
void write_trajectory_csv(std::ostream& out, const Evaluation& eval);

//! Mean of the per-seed evaluation rows; ARE/MAPE averaged only when every
//! seed reports them.
EvalRow mean_rows(std::span<const EvalRow> rows, std::string method);

} // namespace iipm
