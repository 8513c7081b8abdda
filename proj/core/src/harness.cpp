#include "iipmixer/harness.hpp"

#include "iipmixer/nn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace iipm {

namespace {

SplitPolicy policy_from_config(const ExperimentConfig& cfg) {
    SplitPolicy p;
    p.kind = cfg.data.split == "chronological" ? SplitPolicy::Kind::Chronological
                                               : SplitPolicy::Kind::LeaveOneBatteryOut;
    p.test_battery = cfg.data.test_battery;
    p.lookback = cfg.model.lookback;
    p.horizon = cfg.model.horizon;
    p.stride = cfg.data.stride;
    return p;
}

std::vector<BatterySeries> load_fleet(const ExperimentConfig& cfg) {
    std::vector<BatterySeries> batteries;
    if (cfg.data.source.empty()) {
        SynthConfig synth;
        synth.c0 = cfg.data.synth_c0;
        synth.fade_rate = cfg.data.synth_fade;
        synth.noise_std = cfg.data.synth_noise;
        synth.regen_amp = cfg.data.synth_regen_amp;
        synth.regen_period = cfg.data.synth_regen_period;
        synth.cycles = cfg.data.synth_cycles;
        batteries = synth_fleet(synth, cfg.data.synth_batteries, cfg.data.synth_seed,
                                cfg.data.synth_fade_jitter);
    } else {
        batteries = load_cycle_csv(cfg.data.source);
    }
    for (BatterySeries& b : batteries) derive_features(b);
    return batteries;
}

void assert_no_test_leak(const DatasetSplit& split) {
    std::set<std::pair<std::string, std::size_t>> test_keys;
    for (const WindowSample& w : split.test) test_keys.emplace(w.battery_id, w.anchor);
    for (const WindowSample& w : split.val) {
        if (test_keys.count({w.battery_id, w.anchor})) {
            throw std::logic_error("split leak: validation window overlaps test set (battery " +
                                   w.battery_id + ", anchor " + std::to_string(w.anchor) + ")");
        }
    }
    for (const WindowSample& w : split.train) {
        if (test_keys.count({w.battery_id, w.anchor})) {
            throw std::logic_error("split leak: training window overlaps test set (battery " +
                                   w.battery_id + ", anchor " + std::to_string(w.anchor) + ")");
        }
    }
}

} // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    PreparedData data;
    data.batteries = load_fleet(cfg);

    data.policy = policy_from_config(cfg);
    if (data.policy.kind == SplitPolicy::Kind::LeaveOneBatteryOut) {
        data.policy.test_battery = resolve_test_battery(data.batteries, data.policy);
    }

    const std::size_t features = data.batteries[0].feature_count();
    const auto cap_idx = data.batteries[0].feature_index("capacity_ah");
    if (!cap_idx) throw std::logic_error("prepare_data: capacity feature missing");
    data.capacity_feature = *cap_idx;

    // Importance fitting: predict next-cycle capacity from the current
    // cycle's features, training batteries/cycles only.
    std::vector<double> xs, ys;
    std::size_t samples = 0;
    for (const BatterySeries& b : data.batteries) {
        const std::size_t tc = training_cycles(data.policy, b);
        if (tc < 2) continue;
        for (std::size_t c = 0; c + 1 < tc; ++c) {
            for (std::size_t f = 0; f < features; ++f) xs.push_back(b.values(f, c));
            ys.push_back(b.values(data.capacity_feature, c + 1));
            ++samples;
        }
    }
    if (samples < 2) throw std::runtime_error("prepare_data: not enough training cycles");
    ForestConfig forest_cfg;
    forest_cfg.n_trees = cfg.data.forest_trees;
    const RandomForest forest =
        RandomForest::fit(Matrix(samples, features, std::move(xs)), ys, forest_cfg,
                          cfg.data.forest_seed);
    data.importances.assign(forest.importances().begin(), forest.importances().end());

    const std::size_t k = std::min(cfg.data.k_principal, features);
    FeatureSelection sel = importance_and_selection(forest, k);

    // The pipeline needs the capacity channel for loss weighting, RUL and
    // every reported metric; if top-k misses it, swap out the weakest pick.
    if (std::find(sel.indices.begin(), sel.indices.end(), data.capacity_feature) ==
        sel.indices.end()) {
        std::size_t weakest = 0;
        for (std::size_t i = 1; i < sel.indices.size(); ++i) {
            if (data.importances[sel.indices[i]] < data.importances[sel.indices[weakest]]) {
                weakest = i;
            }
        }
        sel.indices[weakest] = data.capacity_feature;
        std::sort(sel.indices.begin(), sel.indices.end());
        std::vector<double> raw;
        for (std::size_t i : sel.indices) raw.push_back(data.importances[i]);
        sel.alpha = FeatureWeights(std::move(raw));
    }
    data.selected = sel.indices;
    data.alpha = sel.alpha;
    for (std::size_t i : data.selected) {
        data.selected_names.push_back(data.batteries[0].feature_names[i]);
    }
    data.capacity_channel = static_cast<std::size_t>(
        std::find(data.selected.begin(), data.selected.end(), data.capacity_feature) -
        data.selected.begin());

    // Scale on training cycles only, then restrict to the selected features.
    std::vector<std::size_t> fit_cycles;
    for (const BatterySeries& b : data.batteries) {
        fit_cycles.push_back(training_cycles(data.policy, b));
    }
    data.scaler = Scaler::fit(data.batteries, fit_cycles);
    for (const BatterySeries& b : data.batteries) {
        data.model_batteries.push_back(select_features(data.scaler.transform(b), data.selected));
    }

    data.split = split_dataset(data.model_batteries, data.policy);
    if (data.split.train.empty()) {
        throw std::runtime_error("prepare_data: empty training split (batteries too short?)");
    }
    assert_no_test_leak(data.split);
    return data;
}

std::unique_ptr<Forecaster> make_model(const ExperimentConfig& cfg, std::size_t channels,
                                       std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 0xA11CE));
    switch (cfg.model.arch) {
        case Arch::IipMixer: {
            MixerConfig mc;
            mc.channels = channels;
            mc.lookback = cfg.model.lookback;
            mc.horizon = cfg.model.horizon;
            mc.patch_len = cfg.model.patch_len;
            mc.n_blocks = cfg.model.n_blocks;
            mc.expansion = cfg.model.expansion;
            mc.dropout = cfg.model.dropout;
            mc.mode = cfg.model.head_mode;
            mc.shared_channels = cfg.model.shared_channels;
            return std::make_unique<MixerModel>(mc, rng);
        }
        case Arch::Mlp:
            return std::make_unique<MlpBaseline>(channels, cfg.model.lookback, cfg.model.horizon,
                                                 std::vector<std::size_t>{cfg.model.mlp_hidden},
                                                 rng);
        case Arch::Dlinear:
            return std::make_unique<DLinearModel>(channels, cfg.model.lookback,
                                                  cfg.model.horizon, cfg.model.ma_window, rng);
    }
    throw std::logic_error("make_model: unknown arch");
}

FeatureWeights effective_weights(const ExperimentConfig& cfg, const PreparedData& data) {
    if (!cfg.loss.weighted || cfg.loss.alpha_source == AlphaSource::Uniform) {
        return FeatureWeights::uniform(data.channels());
    }
    return data.alpha;
}

namespace {

double validation_loss(const Forecaster& model, const std::vector<WindowSample>& windows,
                       const FeatureWeights& weights) {
    if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const WindowSample& w : windows) {
        sum += wmse_loss(model.predict(w.x), w.y, weights);
    }
    return sum / static_cast<double>(windows.size());
}

} // namespace

TrainResult train_model(const ExperimentConfig& cfg, const PreparedData& data,
                        std::uint64_t seed, std::vector<EpochStats>* live_history) {
    cfg.validate();
    TrainResult result;
    result.seed = seed;
    result.model = make_model(cfg, data.channels(), seed);
    Forecaster& model = *result.model;

    const FeatureWeights weights = effective_weights(cfg, data);
    const std::vector<Matrix*> params = model.parameters();

    Rng shuffle_rng(Rng::derive(seed, 0x50FF1E));
    Rng dropout_rng(Rng::derive(seed, 0xD20));

    SgdState sgd(cfg.train.lr);
    AdamState adam(cfg.train.lr);

    std::vector<Matrix> best_params;
    double best_val = std::numeric_limits<double>::infinity();

    const std::vector<WindowSample>& train = data.split.train;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto record = [&](const EpochStats& stats) {
        result.history.push_back(stats);
        if (live_history) live_history->push_back(stats);
    };

    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        // Fisher-Yates, one fresh permutation per epoch.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.train.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.train.batch);
            Tape tape;
            Tape::NodeId batch_loss = -1;
            for (std::size_t i = start; i < end; ++i) {
                const WindowSample& w = train[order[i]];
                auto preds = model.forward_channels(tape, w.x, /*training=*/true, &dropout_rng);
                Tape::NodeId sample_loss = wmse_loss_node(tape, preds, w.y, weights);
                batch_loss = (batch_loss < 0) ? sample_loss : tape.add(batch_loss, sample_loss);
            }
            batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(end - start));
            const double loss_value = tape.value(batch_loss)(0, 0);
            if (!std::isfinite(loss_value)) {
                throw TrainingDiverged("train_model: non-finite loss in epoch " +
                                       std::to_string(epoch) + " (seed " + std::to_string(seed) +
                                       ")");
            }
            tape.backward(batch_loss);
            std::vector<Matrix> grads;
            grads.reserve(params.size());
            for (const Matrix* p : params) grads.push_back(tape.grad_for(p));
            if (cfg.train.optimizer == Optimizer::Adam) {
                adam.step(params, grads);
            } else {
                sgd_step(sgd, params, grads);
            }
            epoch_loss += loss_value;
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
        const double val = validation_loss(model, data.split.val, weights);
        stats.val_loss = std::isnan(val) ? stats.train_loss : val;
        record(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            best_params.clear();
            for (const Matrix* p : params) best_params.push_back(*p);
        }
    }

    if (!best_params.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];
    }
    return result;
}

Evaluation evaluate_model(const Forecaster& model, const PreparedData& data,
                          const std::string& method_label) {
    if (data.split.test.empty()) {
        throw std::invalid_argument("evaluate_model: empty test split");
    }

    Evaluation eval;
    const std::size_t cap = data.capacity_channel;
    const std::size_t cap_feature = data.capacity_feature;

    // One-step predictions, pooled over every test window and horizon step,
    // in denormalized Ah.
    std::vector<double> pred_ah, truth_ah;
    for (const WindowSample& w : data.split.test) {
        const Matrix pred = model.predict(w.x);
        for (std::size_t j = 0; j < pred.cols(); ++j) {
            pred_ah.push_back(data.scaler.inverse_value(cap_feature, pred(cap, j)));
            truth_ah.push_back(data.scaler.inverse_value(cap_feature, w.y(cap, j)));
        }
    }
    const RegressionMetrics one_step = regression_metrics(pred_ah, truth_ah);

    // Rollout per test battery: anchor at the battery's first test window,
    // forecast recursively to (and past) the end of the recorded series.
    std::vector<double> roll_pred_ah, roll_truth_ah;
    std::vector<std::optional<double>> battery_ares;
    std::optional<double> first_rul_true, first_rul_pred;

    bool first_battery = true;
    for (const std::string& battery_id : data.split.test_batteries) {
        const BatterySeries* raw = nullptr;
        const BatterySeries* scaled = nullptr;
        for (std::size_t i = 0; i < data.batteries.size(); ++i) {
            if (data.batteries[i].battery_id == battery_id) {
                raw = &data.batteries[i];
                scaled = &data.model_batteries[i];
            }
        }
        if (!raw) continue;

        std::size_t anchor = std::numeric_limits<std::size_t>::max();
        for (const WindowSample& w : data.split.test) {
            if (w.battery_id == battery_id) anchor = std::min(anchor, w.anchor);
        }
        if (anchor == std::numeric_limits<std::size_t>::max()) continue;

        const std::size_t lookback = model.lookback();
        const std::size_t m = raw->cycles();
        const std::size_t forecast_start = anchor + lookback;
        if (forecast_start >= m) continue;

        Matrix window(data.channels(), lookback);
        for (std::size_t c = 0; c < data.channels(); ++c) {
            for (std::size_t j = 0; j < lookback; ++j) {
                window(c, j) = scaled->values(c, anchor + j);
            }
        }

        // Keep predicting past the recorded end so a late crossing is still
        // observable; 3x the battery life is plenty for the 0.8 threshold.
        const std::size_t horizon_steps = 3 * m - forecast_start;
        const Matrix rolled = rollout_forecast(model, window, horizon_steps);

        std::vector<double> rolled_cap(horizon_steps);
        for (std::size_t j = 0; j < horizon_steps; ++j) {
            rolled_cap[j] = data.scaler.inverse_value(cap_feature, rolled(cap, j));
        }

        for (std::size_t j = 0; j + forecast_start < m; ++j) {
            roll_pred_ah.push_back(rolled_cap[j]);
            roll_truth_ah.push_back(raw->values(cap_feature, forecast_start + j));
        }

        const double initial = raw->values(cap_feature, 0);
        const auto true_capacity = raw->feature_row(cap_feature);
        const std::vector<double> future_true(true_capacity.begin() + forecast_start,
                                              true_capacity.end());
        const auto rul_true = rul_from_capacity(future_true, initial);
        const auto rul_pred = rul_from_capacity(rolled_cap, initial);

        EvalRow battery_row;
        battery_row.method = method_label + "@" + battery_id;
        if (rul_true && rul_pred) {
            const double t = static_cast<double>(*rul_true + 1);
            const double p = static_cast<double>(*rul_pred + 1);
            battery_row.rul_true = t;
            battery_row.rul_pred = p;
            battery_row.are_pct = are_metric(p, t);
            battery_ares.push_back(battery_row.are_pct);
            if (first_battery) {
                first_rul_true = t;
                first_rul_pred = p;
            }
        } else {
            eval.rul_flagged = true;
            battery_ares.push_back(std::nullopt);
        }

        std::vector<double> batt_pred, batt_truth;
        for (std::size_t j = 0; j + forecast_start < m; ++j) {
            batt_pred.push_back(rolled_cap[j]);
            batt_truth.push_back(raw->values(cap_feature, forecast_start + j));
        }
        if (!batt_pred.empty()) {
            const RegressionMetrics rm = regression_metrics(batt_pred, batt_truth);
            battery_row.mae_ah = rm.mae;
            battery_row.rmse_ah = rm.rmse;
            battery_row.mape_pct = rm.mape_pct;
        }
        eval.per_battery.push_back(battery_row);

        if (first_battery) {
            const std::size_t traj_len = std::min(horizon_steps, (m - forecast_start) + m / 2);
            for (std::size_t j = 0; j < traj_len; ++j) {
                eval.traj_cycles.push_back(forecast_start + j);
                eval.traj_pred.push_back(rolled_cap[j]);
                eval.traj_true.push_back(forecast_start + j < m
                                             ? raw->values(cap_feature, forecast_start + j)
                                             : std::numeric_limits<double>::quiet_NaN());
            }
            first_battery = false;
        }
    }

    eval.row.method = method_label;
    eval.row.mae_ah = one_step.mae;
    eval.row.rmse_ah = one_step.rmse;
    eval.row.mape_pct = one_step.mape_pct;

    // ARE over batteries: mean of the defined per-battery values; absent if
    // any battery never crossed the threshold.
    bool all_defined = !battery_ares.empty();
    double are_sum = 0.0;
    for (const auto& a : battery_ares) {
        if (!a) {
            all_defined = false;
            break;
        }
        are_sum += *a;
    }
    if (all_defined) {
        eval.row.are_pct = are_sum / static_cast<double>(battery_ares.size());
        eval.row.rul_true = first_rul_true;
        eval.row.rul_pred = first_rul_pred;
    }

    eval.rollout_row.method = method_label + "@rollout";
    if (!roll_pred_ah.empty()) {
        const RegressionMetrics rm = regression_metrics(roll_pred_ah, roll_truth_ah);
        eval.rollout_row.mae_ah = rm.mae;
        eval.rollout_row.rmse_ah = rm.rmse;
        eval.rollout_row.mape_pct = rm.mape_pct;
    }
    eval.rollout_row.are_pct = eval.row.are_pct;
    eval.rollout_row.rul_true = eval.row.rul_true;
    eval.rollout_row.rul_pred = eval.row.rul_pred;
    return eval;
}

EvalRow mean_rows(std::span<const EvalRow> rows, std::string method) {
    EvalRow mean;
    mean.method = std::move(method);
    if (rows.empty()) return mean;
    const double n = static_cast<double>(rows.size());
    double mape = 0.0, are = 0.0, rul_t = 0.0, rul_p = 0.0;
    bool has_mape = true, has_are = true, has_rul = true;
    for (const EvalRow& r : rows) {
        mean.mae_ah += r.mae_ah / n;
        mean.rmse_ah += r.rmse_ah / n;
        if (r.mape_pct) mape += *r.mape_pct / n; else has_mape = false;
        if (r.are_pct) are += *r.are_pct / n; else has_are = false;
        if (r.rul_true && r.rul_pred) {
            rul_t += *r.rul_true / n;
            rul_p += *r.rul_pred / n;
        } else {
            has_rul = false;
        }
    }
    if (has_mape) mean.mape_pct = mape;
    if (has_are) mean.are_pct = are;
    if (has_rul) {
        mean.rul_true = rul_t;
        mean.rul_pred = rul_p;
    }
    return mean;
}

EvalReport run_report(const RunResult& run, std::string_view method) {
    EvalReport report;
    for (std::size_t i = 0; i < run.per_seed.size(); ++i) {
        EvalRow row = run.per_seed[i].row;
        const std::string seed = i < run.seeds.size() ? std::to_string(run.seeds[i])
                                                      : std::to_string(i);
        row.method = std::string(method) + "@seed" + seed;
        report.rows.push_back(std::move(row));
    }
    report.rows.push_back(run.mean_row);
    report.rows.push_back(run.mean_rollout_row);
    return report;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_root) {
    cfg.validate();
    RunResult run;
    run.config_hash = cfg.hash_hex();
    run.data_hash = cfg.data_hash();

    namespace fs = std::filesystem;
    fs::path run_dir;
    const bool persist = !out_root.empty();
    if (persist) {
        run_dir = fs::path(out_root) / run.config_hash;
        fs::create_directories(run_dir);
        std::ofstream cfg_out(run_dir / "config.cfg");
        write_config(cfg_out, cfg);
    }

    const PreparedData data = prepare_data(cfg);

    if (persist) {
        std::ofstream imp(run_dir / "importance.csv");
        write_importance_csv(imp, data.batteries[0].feature_names, data.importances,
                             data.selected);
    }

    std::vector<std::pair<std::uint64_t, std::vector<EpochStats>>> histories;
    auto flush_history = [&]() {
        if (!persist) return;
        std::ofstream out(run_dir / "history.csv");
        write_history_csv(out, histories);
    };

    std::vector<EvalRow> seed_rows, seed_rollout_rows;
    double best_seed_val = std::numeric_limits<double>::infinity();
    const std::string method(to_string(cfg.model.arch));

    for (std::uint64_t seed : cfg.train.seeds) {
        run.seeds.push_back(seed);
        histories.push_back({seed, {}});
        TrainResult trained;
        try {
            trained = train_model(cfg, data, seed, &histories.back().second);
        } catch (const TrainingDiverged&) {
            flush_history();  // keep the partial history on disk
            throw;
        }
        run.histories.push_back(trained.history);

        Evaluation eval = evaluate_model(*trained.model, data, method);
        seed_rows.push_back(eval.row);
        seed_rollout_rows.push_back(eval.rollout_row);

        if (persist) {
            save_checkpoint(*trained.model,
                            (run_dir / ("checkpoint_seed" + std::to_string(seed) + ".bin"))
                                .string());
            double final_val = trained.history.empty()
                                   ? std::numeric_limits<double>::infinity()
                                   : trained.history.back().val_loss;
            for (const EpochStats& e : trained.history) final_val = std::min(final_val, e.val_loss);
            if (final_val <= best_seed_val) {
                best_seed_val = final_val;
                save_checkpoint(*trained.model, (run_dir / "checkpoint").string());
                std::ofstream traj(run_dir / "trajectory.csv");
                write_trajectory_csv(traj, eval);
            }
        }
        run.per_seed.push_back(std::move(eval));
    }

    run.mean_row = mean_rows(seed_rows, method);
    run.mean_rollout_row = mean_rows(seed_rollout_rows, method + "@rollout");

    if (persist) {
        flush_history();
        std::ofstream report_out(run_dir / "report.csv");
        run_report(run, method).write_csv(report_out);
    }
    return run;
}

const std::vector<std::string>& ablation_axes() {
    static const std::vector<std::string> axes = {"heads", "serial", "weighted", "features",
                                                  "arch"};
    return axes;
}

std::vector<AblationCell> run_ablation_axis(const ExperimentConfig& base,
                                            const std::string& axis) {
    std::vector<std::pair<std::string, ExperimentConfig>> cells;
    auto with_mode = [&](HeadMode mode) {
        ExperimentConfig c = base;
        c.model.head_mode = mode;
        return c;
    };

    if (axis == "heads") {
        cells = {{"intra_only", with_mode(HeadMode::IntraOnly)},
                 {"inter_only", with_mode(HeadMode::InterOnly)},
                 {"parallel", with_mode(HeadMode::Parallel)}};
    } else if (axis == "serial") {
        cells = {{"serial_intra_first", with_mode(HeadMode::SerialIntraFirst)},
                 {"serial_inter_first", with_mode(HeadMode::SerialInterFirst)},
                 {"parallel", with_mode(HeadMode::Parallel)}};
    } else if (axis == "weighted") {
        ExperimentConfig on = base;
        on.loss.weighted = true;
        ExperimentConfig off = base;
        off.loss.weighted = false;
        cells = {{"weighted", on}, {"unweighted", off}};
    } else if (axis == "features") {
        ExperimentConfig uni = base;
        uni.data.k_principal = 1;
        ExperimentConfig full = base;
        full.data.k_principal = kCycleFeatureCount + 1;  // every feature incl. derived
        ExperimentConfig principal = base;
        cells = {{"univariate", uni},
                 {"multivariate_full", full},
                 {"multivariate_principal", principal}};
    } else if (axis == "arch") {
        ExperimentConfig mixer = base;
        mixer.model.arch = Arch::IipMixer;
        ExperimentConfig mlp = base;
        mlp.model.arch = Arch::Mlp;
        ExperimentConfig dlinear = base;
        dlinear.model.arch = Arch::Dlinear;
        cells = {{"iip_mixer", mixer}, {"mlp", mlp}, {"dlinear", dlinear}};
    } else {
        throw std::invalid_argument("run_ablation_axis: unknown axis '" + axis +
                                    "' (expected heads|serial|weighted|features|arch)");
    }

    std::vector<AblationCell> results;
    const std::uint64_t split_hash = base.data_hash();
    for (auto& [name, cfg] : cells) {
        if (cfg.data_hash() != split_hash) {
            throw std::logic_error("run_ablation_axis: cell '" + name +
                                   "' changed the data split");
        }
        AblationCell cell;
        cell.variant = name;
        cell.result = run_experiment(cfg);
        results.push_back(std::move(cell));
    }
    return results;
}

EvalReport ablation_report(std::span<const AblationCell> cells) {
    EvalReport report;
    for (const AblationCell& cell : cells) {
        EvalRow row = cell.result.mean_row;
        row.method = cell.variant;
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_history_csv(std::ostream& out,
                       std::span<const std::pair<std::uint64_t, std::vector<EpochStats>>> runs) {
    out << "seed,epoch,train_loss,val_loss\n";
    for (const auto& [seed, history] : runs) {
        for (const EpochStats& e : history) {
            out << seed << ',' << e.epoch << ',' << double_repr(e.train_loss) << ','
                << double_repr(e.val_loss) << '\n';
        }
    }
}

void write_importance_csv(std::ostream& out, std::span<const std::string> feature_names,
                          std::span<const double> importances,
                          std::span<const std::size_t> selected) {
    out << "feature,importance,selected\n";
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        const bool is_selected =
            std::find(selected.begin(), selected.end(), f) != selected.end();
        out << feature_names[f] << ',' << double_repr(importances[f]) << ','
            << (is_selected ? 1 : 0) << '\n';
    }
}

void write_trajectory_csv(std::ostream& out, const Evaluation& eval) {
    out << "cycle,true_capacity_ah,predicted_capacity_ah\n";
    for (std::size_t i = 0; i < eval.traj_cycles.size(); ++i) {
        out << eval.traj_cycles[i] << ',';
        if (!std::isnan(eval.traj_true[i])) out << double_repr(eval.traj_true[i]);
        out << ',' << double_repr(eval.traj_pred[i]) << '\n';
    }
}

} // namespace iipm
