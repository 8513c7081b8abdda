#include "iipmixer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace iipm {

double CycleRecord::feature(std::size_t index) const {
    switch (index) {
        case 0: return capacity_ah;
        case 1: return voltage_min;
        case 2: return voltage_max;
        case 3: return voltage_mean;
        case 4: return current_min;
        case 5: return current_max;
        case 6: return current_mean;
        case 7: return temp_min;
        case 8: return temp_max;
        case 9: return temp_mean;
        default: throw std::out_of_range("CycleRecord::feature: index " + std::to_string(index));
    }
}

namespace {

struct Stats {
    double min, max, mean;
};

Stats stats_of(std::span<const double> samples, const RawCycle& cycle, const char* signal) {
    if (samples.empty()) {
        throw std::invalid_argument("aggregate_cycles: cycle " + std::to_string(cycle.cycle) +
                                    " of battery '" + cycle.battery_id + "' has no " + signal +
                                    " samples");
    }
    Stats s{samples[0], samples[0], 0.0};
    double sum = 0.0;
    for (double v : samples) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
    }
    s.mean = sum / static_cast<double>(samples.size());
    return s;
}

} // namespace

std::vector<CycleRecord> aggregate_cycles(std::span<const RawCycle> raw) {
    std::vector<CycleRecord> out;
    out.reserve(raw.size());
    for (const RawCycle& rc : raw) {
        const Stats v = stats_of(rc.voltage, rc, "voltage");
        const Stats i = stats_of(rc.current, rc, "current");
        const Stats t = stats_of(rc.temperature, rc, "temperature");
        CycleRecord rec;
        rec.battery_id = rc.battery_id;
        rec.cycle = rc.cycle;
        rec.capacity_ah = rc.capacity_ah;
        rec.voltage_min = v.min;
        rec.voltage_max = v.max;
        rec.voltage_mean = v.mean;
        rec.current_min = i.min;
        rec.current_max = i.max;
        rec.current_mean = i.mean;
        rec.temp_min = t.min;
        rec.temp_max = t.max;
        rec.temp_mean = t.mean;
        out.push_back(std::move(rec));
    }
    return out;
}

std::optional<std::size_t> BatterySeries::feature_index(std::string_view name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        if (feature_names[i] == name) return i;
    }
    return std::nullopt;
}

BatterySeries series_from_records(std::span<const CycleRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("series_from_records: no records");
    }
    BatterySeries s;
    s.battery_id = records[0].battery_id;
    s.feature_names.assign(std::begin(kCycleFeatureNames), std::end(kCycleFeatureNames));
    s.values = Matrix(kCycleFeatureCount, records.size());
    for (std::size_t m = 0; m < records.size(); ++m) {
        const CycleRecord& r = records[m];
        if (r.battery_id != s.battery_id) {
            throw std::invalid_argument("series_from_records: mixed battery ids '" +
                                        s.battery_id + "' and '" + r.battery_id + "'");
        }
        if (m > 0 && r.cycle <= records[m - 1].cycle) {
            throw std::invalid_argument("series_from_records: cycle indices not strictly "
                                        "increasing for battery '" + s.battery_id + "'");
        }
        if (!(r.capacity_ah > 0.0)) {
            throw std::invalid_argument("series_from_records: non-positive capacity at cycle " +
                                        std::to_string(r.cycle) + " of '" + s.battery_id + "'");
        }
        for (std::size_t f = 0; f < kCycleFeatureCount; ++f) s.values(f, m) = r.feature(f);
    }
    return s;
}

void derive_features(BatterySeries& series) {
    const auto cap_idx = series.feature_index("capacity_ah");
    if (!cap_idx) {
        throw std::invalid_argument("derive_features: series '" + series.battery_id +
                                    "' has no capacity_ah feature");
    }
    const std::size_t m = series.cycles();
    std::vector<double> acc(m);
    double running = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        running += series.values(*cap_idx, c);
        acc[c] = running / static_cast<double>(c + 1);
    }
    if (auto existing = series.feature_index(kAccCapMeanName)) {
        series.values.set_row(*existing, acc);
        return;
    }
    Matrix grown(series.feature_count() + 1, m);
    for (std::size_t f = 0; f < series.feature_count(); ++f) {
        for (std::size_t c = 0; c < m; ++c) grown(f, c) = series.values(f, c);
    }
    for (std::size_t c = 0; c < m; ++c) grown(series.feature_count(), c) = acc[c];
    series.values = std::move(grown);
    series.feature_names.push_back(kAccCapMeanName);
}

BatterySeries select_features(const BatterySeries& series,
                              std::span<const std::size_t> indices) {
    BatterySeries out;
    out.battery_id = series.battery_id;
    out.values = Matrix(indices.size(), series.cycles());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= series.feature_count()) {
            throw std::out_of_range("select_features: index " + std::to_string(indices[i]));
        }
        out.feature_names.push_back(series.feature_names[indices[i]]);
        for (std::size_t c = 0; c < series.cycles(); ++c) {
            out.values(i, c) = series.values(indices[i], c);
        }
    }
    return out;
}

// ---- CSV -------------------------------------------------------------------

namespace {

const std::string kCsvHeader =
    "battery_id,cycle,capacity_ah,voltage_min,voltage_max,voltage_mean,"
    "current_min,current_max,current_mean,temp_min,temp_max,temp_mean";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

std::vector<BatterySeries> read_cycle_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("cycle csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw std::runtime_error("cycle csv: unexpected header '" + line + "'");
    }
    std::vector<CycleRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 12) {
            throw std::runtime_error("cycle csv: line " + std::to_string(line_no) + " has " +
                                     std::to_string(f.size()) + " fields, expected 12");
        }
        CycleRecord r;
        try {
            r.battery_id = f[0];
            r.cycle = static_cast<std::size_t>(std::stoull(f[1]));
            r.capacity_ah = std::stod(f[2]);
            r.voltage_min = std::stod(f[3]);
            r.voltage_max = std::stod(f[4]);
            r.voltage_mean = std::stod(f[5]);
            r.current_min = std::stod(f[6]);
            r.current_max = std::stod(f[7]);
            r.current_mean = std::stod(f[8]);
            r.temp_min = std::stod(f[9]);
            r.temp_max = std::stod(f[10]);
            r.temp_mean = std::stod(f[11]);
        } catch (const std::exception&) {
            throw std::runtime_error("cycle csv: malformed number on line " +
                                     std::to_string(line_no));
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw std::runtime_error("cycle csv: no data rows");

    // Rows must arrive sorted by (battery_id, cycle); reused ids after a
    // different battery started would silently merge, so reject them.
    std::vector<BatterySeries> out;
    std::vector<std::string> seen;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= records.size(); ++i) {
        if (i == records.size() || records[i].battery_id != records[start].battery_id) {
            const std::string& id = records[start].battery_id;
            if (std::find(seen.begin(), seen.end(), id) != seen.end()) {
                throw std::runtime_error("cycle csv: rows for battery '" + id +
                                         "' are not contiguous");
            }
            seen.push_back(id);
            out.push_back(series_from_records(
                std::span<const CycleRecord>(records.data() + start, i - start)));
            start = i;
        }
    }
    for (std::size_t i = 1; i < seen.size(); ++i) {
        if (seen[i] < seen[i - 1]) {
            throw std::runtime_error("cycle csv: batteries not sorted by id ('" + seen[i] +
                                     "' after '" + seen[i - 1] + "')");
        }
    }
    return out;
}

std::vector<BatterySeries> load_cycle_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cycle csv: cannot open '" + path + "'");
    return read_cycle_csv(in);
}

void write_cycle_csv(std::ostream& out, std::span<const BatterySeries> batteries) {
    out << kCsvHeader << '\n';
    for (const BatterySeries& b : batteries) {
        std::vector<std::size_t> idx(kCycleFeatureCount);
        for (std::size_t f = 0; f < kCycleFeatureCount; ++f) {
            const auto found = b.feature_index(kCycleFeatureNames[f]);
            if (!found) {
                throw std::invalid_argument("write_cycle_csv: series '" + b.battery_id +
                                            "' lacks feature " + kCycleFeatureNames[f]);
            }
            idx[f] = *found;
        }
        for (std::size_t c = 0; c < b.cycles(); ++c) {
            out << b.battery_id << ',' << c;
            for (std::size_t f = 0; f < kCycleFeatureCount; ++f) {
                out << ',' << double_repr(b.values(idx[f], c));
            }
            out << '\n';
        }
    }
}

void save_cycle_csv(const std::string& path, std::span<const BatterySeries> batteries) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cycle csv: cannot open '" + path + "' for writing");
    write_cycle_csv(out, batteries);
    if (!out) throw std::runtime_error("cycle csv: write to '" + path + "' failed");
}

// ---- scaling ---------------------------------------------------------------

Scaler Scaler::fit(std::span<const BatterySeries> batteries,
                   std::span<const std::size_t> train_cycles) {
    if (batteries.empty()) throw std::invalid_argument("Scaler::fit: no training series");
    if (!train_cycles.empty() && train_cycles.size() != batteries.size()) {
        throw std::invalid_argument("Scaler::fit: train_cycles misaligned with batteries");
    }
    const std::size_t features = batteries[0].feature_count();
    Scaler s;
    s.means_.assign(features, 0.0);
    s.stds_.assign(features, 0.0);

    std::size_t total = 0;
    for (std::size_t b = 0; b < batteries.size(); ++b) {
        const std::size_t use = train_cycles.empty()
                                    ? batteries[b].cycles()
                                    : std::min(train_cycles[b], batteries[b].cycles());
        if (batteries[b].feature_count() != features) {
            throw std::invalid_argument("Scaler::fit: inconsistent feature counts");
        }
        for (std::size_t f = 0; f < features; ++f) {
            for (std::size_t c = 0; c < use; ++c) s.means_[f] += batteries[b].values(f, c);
        }
        total += use;
    }
    if (total == 0) throw std::invalid_argument("Scaler::fit: no training cycles");
    for (double& m : s.means_) m /= static_cast<double>(total);

    for (std::size_t b = 0; b < batteries.size(); ++b) {
        const std::size_t use = train_cycles.empty()
                                    ? batteries[b].cycles()
                                    : std::min(train_cycles[b], batteries[b].cycles());
        for (std::size_t f = 0; f < features; ++f) {
            for (std::size_t c = 0; c < use; ++c) {
                const double d = batteries[b].values(f, c) - s.means_[f];
                s.stds_[f] += d * d;
            }
        }
    }
    for (double& v : s.stds_) {
        v = std::sqrt(v / static_cast<double>(total));
        if (!(v > 0.0)) v = 1.0;  // constant feature fallback
    }
    return s;
}

BatterySeries Scaler::transform(const BatterySeries& series) const {
    if (series.feature_count() != means_.size()) {
        throw std::invalid_argument("Scaler::transform: feature count mismatch");
    }
    BatterySeries out = series;
    for (std::size_t f = 0; f < means_.size(); ++f) {
        for (std::size_t c = 0; c < out.cycles(); ++c) {
            out.values(f, c) = (out.values(f, c) - means_[f]) / stds_[f];
        }
    }
    return out;
}

BatterySeries Scaler::inverse(const BatterySeries& series) const {
    if (series.feature_count() != means_.size()) {
        throw std::invalid_argument("Scaler::inverse: feature count mismatch");
    }
    BatterySeries out = series;
    for (std::size_t f = 0; f < means_.size(); ++f) {
        for (std::size_t c = 0; c < out.cycles(); ++c) {
            out.values(f, c) = out.values(f, c) * stds_[f] + means_[f];
        }
    }
    return out;
}

double Scaler::transform_value(std::size_t feature, double value) const {
    return (value - means_.at(feature)) / stds_.at(feature);
}

double Scaler::inverse_value(std::size_t feature, double value) const {
    return value * stds_.at(feature) + means_.at(feature);
}

// ---- windowing -------------------------------------------------------------

std::vector<WindowSample> make_windows(const BatterySeries& series, std::size_t lookback,
                                       std::size_t horizon, std::size_t stride) {
    if (lookback == 0 || horizon == 0 || stride == 0) {
        throw std::invalid_argument("make_windows: lookback, horizon and stride must be >= 1");
    }
    std::vector<WindowSample> out;
    const std::size_t m = series.cycles();
    if (m < lookback + horizon) return out;  // short battery: caller warns and skips

    const std::size_t c = series.feature_count();
    for (std::size_t start = 0; start + lookback + horizon <= m; start += stride) {
        WindowSample w;
        w.battery_id = series.battery_id;
        w.anchor = start;
        w.x = Matrix(c, lookback);
        w.y = Matrix(c, horizon);
        for (std::size_t f = 0; f < c; ++f) {
            for (std::size_t j = 0; j < lookback; ++j) w.x(f, j) = series.values(f, start + j);
            for (std::size_t j = 0; j < horizon; ++j) {
                w.y(f, j) = series.values(f, start + lookback + j);
            }
        }
        out.push_back(std::move(w));
    }
    return out;
}

// ---- splits ----------------------------------------------------------------

std::string resolve_test_battery(std::span<const BatterySeries> batteries,
                                 const SplitPolicy& policy) {
    if (batteries.empty()) throw std::invalid_argument("resolve_test_battery: no batteries");
    if (!policy.test_battery.empty()) return policy.test_battery;
    std::string id = batteries[0].battery_id;
    for (const BatterySeries& b : batteries) id = std::max(id, b.battery_id);
    return id;
}

std::size_t training_cycles(const SplitPolicy& policy, const BatterySeries& series) {
    if (policy.kind == SplitPolicy::Kind::Chronological) {
        return static_cast<std::size_t>(policy.train_fraction *
                                        static_cast<double>(series.cycles()));
    }
    if (policy.test_battery.empty()) {
        throw std::invalid_argument("training_cycles: unresolved test battery");
    }
    return series.battery_id == policy.test_battery ? 0 : series.cycles();
}

DatasetSplit split_dataset(std::span<const BatterySeries> batteries, const SplitPolicy& policy) {
    if (batteries.empty()) throw std::invalid_argument("split_dataset: no batteries");

    DatasetSplit split;
    if (policy.kind == SplitPolicy::Kind::LeaveOneBatteryOut) {
        const std::string test_id = resolve_test_battery(batteries, policy);
        bool found = false;
        for (const BatterySeries& b : batteries) found |= (b.battery_id == test_id);
        if (!found) {
            throw std::invalid_argument("split_dataset: test battery '" + test_id +
                                        "' not found");
        }
        for (const BatterySeries& b : batteries) {
            auto windows = make_windows(b, policy.lookback, policy.horizon, policy.stride);
            if (b.battery_id == test_id) {
                split.test_batteries.push_back(b.battery_id);
                for (auto& w : windows) split.test.push_back(std::move(w));
                continue;
            }
            split.train_batteries.push_back(b.battery_id);
            const std::size_t n_val =
                static_cast<std::size_t>(policy.val_fraction * static_cast<double>(windows.size()));
            const std::size_t n_train = windows.size() - n_val;
            for (std::size_t i = 0; i < windows.size(); ++i) {
                (i < n_train ? split.train : split.val).push_back(std::move(windows[i]));
            }
        }
        return split;
    }

    // Chronological: each battery is cut by cycle index into train / val /
    // test segments and windowed within each segment.
    for (const BatterySeries& b : batteries) {
        const std::size_t m = b.cycles();
        const std::size_t train_end =
            static_cast<std::size_t>(policy.train_fraction * static_cast<double>(m));
        const std::size_t val_end =
            m - static_cast<std::size_t>(policy.test_fraction * static_cast<double>(m));
        split.train_batteries.push_back(b.battery_id);
        split.test_batteries.push_back(b.battery_id);

        auto segment_windows = [&](std::size_t begin, std::size_t end,
                                   std::vector<WindowSample>& sink) {
            if (end <= begin) return;
            std::vector<std::size_t> idx(b.feature_count());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            BatterySeries seg;
            seg.battery_id = b.battery_id;
            seg.feature_names = b.feature_names;
            seg.values = Matrix(b.feature_count(), end - begin);
            for (std::size_t f = 0; f < b.feature_count(); ++f) {
                for (std::size_t c = begin; c < end; ++c) seg.values(f, c - begin) = b.values(f, c);
            }
            for (WindowSample& w : make_windows(seg, policy.lookback, policy.horizon,
                                                policy.stride)) {
                w.anchor += begin;
                sink.push_back(std::move(w));
            }
        };
        segment_windows(0, train_end, split.train);
        segment_windows(train_end, val_end, split.val);
        segment_windows(val_end, m, split.test);
    }
    return split;
}

// ---- synthetic generator ---------------------------------------------------

BatterySeries synth_degradation(const SynthConfig& cfg, std::uint64_t seed,
                                const std::string& battery_id) {
    if (!(cfg.c0 > 0.0)) throw std::invalid_argument("synth_degradation: c0 must be > 0");
    if (cfg.cycles == 0) throw std::invalid_argument("synth_degradation: cycles must be >= 1");

    Rng rng(seed);
    std::vector<CycleRecord> records;
    records.reserve(cfg.cycles);
    for (std::size_t c = 0; c < cfg.cycles; ++c) {
        const double fade_line = cfg.c0 * (1.0 - cfg.fade_rate * static_cast<double>(c));
        double regen = 0.0;
        if (cfg.regen_amp > 0.0 && cfg.regen_period > 0 && c >= cfg.regen_period) {
            // Boost at each regeneration event, decaying over a few cycles.
            const double phase = static_cast<double>(c % cfg.regen_period);
            regen = cfg.regen_amp * std::exp(-phase / 3.0);
        }
        const double noise = cfg.noise_std > 0.0 ? cfg.noise_std * rng.normal() : 0.0;
        const double capacity = fade_line + regen + noise;

        const double health = capacity / cfg.c0;  // ~1 fresh, ~0.7 near end
        const double v_noise = cfg.noise_std > 0.0 ? 0.01 * rng.normal() : 0.0;
        const double i_noise = cfg.noise_std > 0.0 ? 0.01 * rng.normal() : 0.0;
        const double t_noise = cfg.noise_std > 0.0 ? 0.05 * rng.normal() : 0.0;

        CycleRecord r;
        r.battery_id = battery_id;
        r.cycle = c;
        r.capacity_ah = capacity;
        r.voltage_mean = 3.6 + 0.2 * health + v_noise;
        r.voltage_min = r.voltage_mean - 0.6 - 0.1 * (1.0 - health);
        r.voltage_max = r.voltage_mean + 0.5;
        r.current_mean = -1.0 - 0.2 * (1.0 - health) + i_noise;
        r.current_min = r.current_mean - 0.5;
        r.current_max = 1.5;
        r.temp_mean = 25.0 + 6.0 * (1.0 - health) + t_noise;
        r.temp_min = r.temp_mean - 2.0;
        r.temp_max = r.temp_mean + 3.0;
        records.push_back(std::move(r));
    }
    return series_from_records(records);
}

std::vector<BatterySeries> synth_fleet(const SynthConfig& base, std::size_t batteries,
                                       std::uint64_t seed, double fade_jitter) {
    if (batteries == 0) throw std::invalid_argument("synth_fleet: batteries must be >= 1");
    std::vector<BatterySeries> out;
    out.reserve(batteries);
    Rng jitter_rng(Rng::derive(seed, 0x666C656574ULL));
    for (std::size_t i = 0; i < batteries; ++i) {
        SynthConfig cfg = base;
        cfg.fade_rate = base.fade_rate * (1.0 + fade_jitter * jitter_rng.uniform(-1.0, 1.0));
        out.push_back(synth_degradation(cfg, Rng::derive(seed, i + 1), "SYN" + std::to_string(i)));
    }
    return out;
}

} // namespace iipm
