#pragma once

#include "iipmixer/matrix.hpp"
#include "iipmixer/rng.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iipm {

//! Fixed order of the cycle-level CSV feature columns (battery_id and cycle
//! come first and are not features).
inline constexpr const char* kCycleFeatureNames[] = {
    "capacity_ah",  "voltage_min", "voltage_max", "voltage_mean", "current_min",
    "current_max",  "current_mean", "temp_min",    "temp_max",     "temp_mean",
};
inline constexpr std::size_t kCycleFeatureCount = 10;
inline constexpr const char* kAccCapMeanName = "acc_cap_mean";

//! One aggregated charge-discharge cycle.
struct CycleRecord {
    std::string battery_id;
    std::size_t cycle = 0;
    double capacity_ah = 0.0;
    double voltage_min = 0.0, voltage_max = 0.0, voltage_mean = 0.0;
    double current_min = 0.0, current_max = 0.0, current_mean = 0.0;
    double temp_min = 0.0, temp_max = 0.0, temp_mean = 0.0;

    double feature(std::size_t index) const;
};

//! Raw per-sample measurements for one cycle, before aggregation.
struct RawCycle {
    std::string battery_id;
    std::size_t cycle = 0;
    double capacity_ah = 0.0;
    std::vector<double> voltage;
    std::vector<double> current;
    std::vector<double> temperature;
};

//! min/max/mean per signal per cycle. A cycle with an empty signal vector is
//! rejected naming the cycle.
std::vector<CycleRecord> aggregate_cycles(std::span<const RawCycle> raw);

//! The full multivariate series of one battery: features x cycles.
struct BatterySeries {
    std::string battery_id;
    std::vector<std::string> feature_names;
    Matrix values;  // C x M

    std::size_t feature_count() const { return values.rows(); }
    std::size_t cycles() const { return values.cols(); }
    std::optional<std::size_t> feature_index(std::string_view name) const;
    std::span<const double> feature_row(std::size_t index) const { return values.row(index); }
};

BatterySeries series_from_records(std::span<const CycleRecord> records);

//! Appends the running mean of capacity over cycles as feature
//! "acc_cap_mean". Re-deriving recomputes in place instead of duplicating
//! the column.
void derive_features(BatterySeries& series);

//! Keeps only the named feature rows, in the given index order.
BatterySeries select_features(const BatterySeries& series, std::span<const std::size_t> indices);

// ---- cycle-level CSV -------------------------------------------------------

//! Reads the documented cycle-level schema. Header is required, rows must be
//! sorted by (battery_id, cycle), capacities must be positive.
std::vector<BatterySeries> load_cycle_csv(const std::string& path);
std::vector<BatterySeries> read_cycle_csv(std::istream& in);

//! Writes the raw schema columns only; derived features are never emitted.
void write_cycle_csv(std::ostream& out, std::span<const BatterySeries> batteries);
void save_cycle_csv(const std::string& path, std::span<const BatterySeries> batteries);

// ---- scaling ---------------------------------------------------------------

//! Per-feature z-score fitted on training cycles only. Constant features
//! scale by a fallback std of 1.
class Scaler {
public:
    //! `train_cycles[i]` limits fitting to the first k cycles of
    //! batteries[i]; empty means every cycle of every series.
    static Scaler fit(std::span<const BatterySeries> batteries,
                      std::span<const std::size_t> train_cycles = {});

    BatterySeries transform(const BatterySeries& series) const;
    BatterySeries inverse(const BatterySeries& series) const;

    double transform_value(std::size_t feature, double value) const;
    double inverse_value(std::size_t feature, double value) const;

    std::size_t feature_count() const { return means_.size(); }
    double mean(std::size_t feature) const { return means_[feature]; }
    double stddev(std::size_t feature) const { return stds_[feature]; }

private:
    std::vector<double> means_;
    std::vector<double> stds_;
};

// ---- windowing -------------------------------------------------------------

//! One supervised sample: y immediately follows x in cycle order.
struct WindowSample {
    Matrix x;  // C x L
    Matrix y;  // C x N
    std::string battery_id;
    std::size_t anchor = 0;  // cycle index of the first lookback step
};

//! floor((M - L - N)/stride) + 1 windows when M >= L + N, otherwise an empty
//! result (short batteries are skipped by callers, with a warning).
std::vector<WindowSample> make_windows(const BatterySeries& series, std::size_t lookback,
                                       std::size_t horizon, std::size_t stride = 1);

// ---- dataset splits --------------------------------------------------------

struct SplitPolicy {
    enum class Kind { LeaveOneBatteryOut, Chronological };
    Kind kind = Kind::LeaveOneBatteryOut;
    std::string test_battery;  // empty -> last battery by id order
    std::size_t lookback = 16;
    std::size_t horizon = 1;
    std::size_t stride = 1;
    double val_fraction = 0.2;      // trailing share of each training battery
    double train_fraction = 0.6;    // chronological only
    double test_fraction = 0.2;     // chronological only
};

struct DatasetSplit {
    std::vector<WindowSample> train, val, test;
    std::vector<std::string> train_batteries, test_batteries;
};

DatasetSplit split_dataset(std::span<const BatterySeries> batteries, const SplitPolicy& policy);

//! The held-out battery id under a leave-one-battery-out policy; an empty
//! policy field defaults to the last battery by id order.
std::string resolve_test_battery(std::span<const BatterySeries> batteries,
                                 const SplitPolicy& policy);

//! How many leading cycles of this battery may be used for fitting scalers
//! and feature importances under the policy (0 for a held-out battery).
//! The policy's test_battery must already be resolved.
std::size_t training_cycles(const SplitPolicy& policy, const BatterySeries& series);

// ---- synthetic degradation -------------------------------------------------

//! capacity[c] = c0 * (1 - fade_rate * c) + regeneration + gaussian noise,
//! with voltage/current/temperature channels generated alongside. Fully
//! determined by the seed.
struct SynthConfig {
    double c0 = 2.0;             // Ah at cycle 0
    double fade_rate = 0.001;    // linear fade per cycle, as a fraction of c0
    double regen_amp = 0.0;      // Ah boost at each regeneration event
    std::size_t regen_period = 50;
    double noise_std = 0.002;    // Ah
    std::size_t cycles = 300;
};

BatterySeries synth_degradation(const SynthConfig& cfg, std::uint64_t seed,
                                const std::string& battery_id = "SYN0");

//! A small fleet with per-battery fade jitter; battery i uses the derived
//! seed (seed, i) and id "SYN<i>".
std::vector<BatterySeries> synth_fleet(const SynthConfig& base, std::size_t batteries,
                                       std::uint64_t seed, double fade_jitter = 0.1);

} // namespace iipm
