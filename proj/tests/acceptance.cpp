// Acceptance suite: one printed PASS/FAIL line per criterion.
//
// Hard criteria fail the binary; criterion 9 is an empirical tendency and
// only warns; criterion 8 is gated on a real dataset (set IIPM_NASA_CSV to a
// cycle-level CSV to enable it). Criterion 10 drives the installed CLI
// (IIPM_CLI, set by ctest) end to end.

#include "iipmixer/harness.hpp"
#include "iipmixer/nn.hpp"
#include "iipmixer/patching.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

using namespace iipm;
namespace fs = std::filesystem;

namespace {

int g_pass = 0, g_fail = 0, g_skip = 0, g_warn = 0;

void report(const char* id, bool pass, const std::string& detail) {
    (pass ? g_pass : g_fail) += 1;
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
}

void report_skip(const char* id, const std::string& detail) {
    ++g_skip;
    std::printf("[SKIP] %s: %s\n", id, detail.c_str());
}

void report_soft(const char* id, bool pass, const std::string& detail) {
    (pass ? g_pass : g_warn) += 1;
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "WARN", id, detail.c_str());
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

// The frozen desk-scale fleet: 4 batteries, 300 cycles, linear fade of
// 0.001 * c0 per cycle with 2% per-battery jitter, 0.0015 Ah gaussian noise.
ExperimentConfig desk_config() {
    ExperimentConfig cfg;
    cfg.data.synth_batteries = 4;
    cfg.data.synth_cycles = 300;
    cfg.data.synth_c0 = 2.0;
    cfg.data.synth_fade = 0.001;
    cfg.data.synth_noise = 0.0015;
    cfg.data.synth_regen_amp = 0.0;
    cfg.data.synth_fade_jitter = 0.02;
    cfg.data.synth_seed = 7;
    cfg.data.k_principal = 2;
    cfg.model.lookback = 16;
    cfg.model.patch_len = 4;
    cfg.model.n_blocks = 2;
    cfg.model.dropout = 0.05;
    cfg.train.lr = 0.001;
    cfg.train.batch = 16;
    cfg.train.epochs = 500;
    return cfg;
}

// ---- criterion 1: gradient correctness --------------------------------------

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    MixerConfig cfg;
    cfg.channels = 2;
    cfg.lookback = 16;
    cfg.patch_len = 4;
    cfg.n_blocks = 2;
    cfg.horizon = 1;
    cfg.dropout = 0.0;  // disabled for the check
    MixerModel model(cfg, rng);
    for (Matrix* p : model.parameters()) {
        for (double& v : p->values()) v = rng.uniform(-0.5, 0.5);
    }
    const Matrix window = oracle::random_matrix(2, 16, rng, -1.0, 1.0);
    const Matrix truth = oracle::random_matrix(2, 1, rng, -1.0, 1.0);
    const FeatureWeights weights({0.7, 0.3});

    auto loss = [&]() { return wmse_loss(model.predict(window), truth, weights); };
    auto grads = [&]() {
        Tape tape;
        auto preds = model.forward_channels(tape, window, false, nullptr);
        tape.backward(wmse_loss_node(tape, preds, truth, weights));
        std::vector<Matrix> out;
        for (const Matrix* p : std::as_const(model).parameters()) {
            out.push_back(tape.grad_for(p));
        }
        return out;
    };
    const auto params = model.parameters();
    const double err = grad_check(params, loss, grads, 1e-5);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report("C1 gradient-correctness", err < 1e-5,
           "finite-difference max relative error " + fmt(err) + " over " +
               std::to_string(model.parameter_count()) + " parameters (< 1e-5), " +
               fmt(secs, 3) + "s");
}

// ---- criterion 2: oracle equivalence -----------------------------------------

void criterion2() {
    const HeadMode modes[] = {HeadMode::Parallel, HeadMode::SerialIntraFirst,
                              HeadMode::SerialInterFirst, HeadMode::IntraOnly,
                              HeadMode::InterOnly};
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(1000 + seed);
        // Blocks in every mode against the scalar-loop oracle.
        for (HeadMode mode : modes) {
            const MixerBlock block = oracle::random_block(4, 4, mode, rng);
            const Matrix x = oracle::random_matrix(4, 4, rng);
            worst = std::max(worst, oracle::max_abs_diff(
                                        oracle::mixer_block(block, oracle::from_matrix(x)),
                                        mixer_block_forward(block, x)));
        }
        // Full model against the compositional oracle.
        MixerConfig cfg;
        cfg.channels = 2;
        cfg.lookback = 16;
        cfg.patch_len = 4;
        cfg.n_blocks = 2;
        cfg.horizon = 1;
        MixerModel model(cfg, rng);
        for (Matrix* p : model.parameters()) {
            for (double& v : p->values()) v = rng.uniform(-0.5, 0.5);
        }
        const Matrix window = oracle::random_matrix(2, 16, rng);
        const Matrix pred = model.predict(window);
        const auto params = std::as_const(model).parameters();
        const std::size_t per_channel = params.size() / 2;
        for (std::size_t c = 0; c < 2; ++c) {
            std::vector<MixerBlock> blocks;
            for (std::size_t blk = 0; blk < cfg.n_blocks; ++blk) {
                MixerBlock b;
                const std::size_t base = c * per_channel + blk * 8;
                b.intra.w_in = *params[base + 0];
                b.intra.b_in = *params[base + 1];
                b.intra.w_out = *params[base + 2];
                b.intra.b_out = *params[base + 3];
                b.inter.w_in = *params[base + 4];
                b.inter.b_in = *params[base + 5];
                b.inter.w_out = *params[base + 6];
                b.inter.b_out = *params[base + 7];
                b.mode = cfg.mode;
                blocks.push_back(std::move(b));
            }
            const auto row = window.row(c);
            const std::vector<double> expected = oracle::mixer_channel(
                blocks, *params[c * per_channel + per_channel - 2],
                *params[c * per_channel + per_channel - 1], {row.begin(), row.end()},
                cfg.patch_len);
            worst = std::max(worst, std::abs(pred(c, 0) - expected[0]));
        }
    }
    report("C2 oracle-equivalence", worst < 1e-12,
           "20 seeded fixtures, all 5 head modes + full model, max |diff| " + fmt(worst) +
               " (< 1e-12)");
}

// ---- criterion 3: loss identity ----------------------------------------------

void criterion3() {
    Rng rng(33);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t channels = 1 + rng.uniform_index(6);
        const std::size_t horizon = 1 + rng.uniform_index(4);
        const Matrix pred = oracle::random_matrix(channels, horizon, rng, -2.0, 2.0);
        const Matrix truth = oracle::random_matrix(channels, horizon, rng, -2.0, 2.0);
        double mse = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred.data()[i] - truth.data()[i];
            mse += d * d;
        }
        mse /= static_cast<double>(pred.size());
        worst = std::max(worst,
                         std::abs(wmse_loss(pred, truth, FeatureWeights::uniform(channels)) -
                                  mse));
    }

    // Table-6-shaped ablation with uniform weights: the rows must coincide.
    ExperimentConfig cfg = desk_config();
    cfg.data.synth_batteries = 3;
    cfg.data.synth_cycles = 60;
    cfg.train.epochs = 2;
    cfg.loss.alpha_source = AlphaSource::Uniform;
    const auto cells = run_ablation_axis(cfg, "weighted");
    const EvalRow& on = cells[0].result.mean_row;
    const EvalRow& off = cells[1].result.mean_row;
    const bool rows_coincide = on.mae_ah == off.mae_ah && on.rmse_ah == off.rmse_ah &&
                               on.mape_pct == off.mape_pct && on.are_pct == off.are_pct;

    report("C3 loss-identity", worst < 1e-12 && rows_coincide,
           "uniform WMSE vs MSE max |diff| " + fmt(worst) +
               " (< 1e-12); uniform-alpha weighted/unweighted ablation rows " +
               (rows_coincide ? "coincide bitwise" : "DIFFER"));
}

// ---- criterion 4: linear complexity ------------------------------------------

void criterion4() {
    auto config_for = [](std::size_t lookback) {
        MixerConfig cfg;
        cfg.channels = 2;
        cfg.lookback = lookback;
        cfg.patch_len = static_cast<std::size_t>(std::sqrt(double(lookback)) + 0.5);
        cfg.n_blocks = 2;
        cfg.expansion = 2;
        cfg.horizon = 1;
        return cfg;
    };

    Rng rng(4);
    const MixerConfig c16 = config_for(16), c64 = config_for(64);
    const MixerModel m16(c16, rng), m64(c64, rng);

    const bool formula16 = mixer_param_count(c16).mixing_weights ==
                               m16.enumerated_mixing_weight_count() &&
                           mixer_param_count(c16).total() == m16.parameter_count();
    const bool formula64 = mixer_param_count(c64).mixing_weights ==
                               m64.enumerated_mixing_weight_count() &&
                           mixer_param_count(c64).total() == m64.parameter_count();

    // W = H = sqrt(L): mixing weights are 8L per block, i.e. linear in L, so
    // the per-sqrt(L) count at L=64 is exactly twice the one at L=16.
    const std::size_t w16 = m16.enumerated_mixing_weight_count();
    const std::size_t w64 = m64.enumerated_mixing_weight_count();
    const bool linear = (w64 == 4 * w16) && (w64 / 8 == 2 * (w16 / 4));

    // Single-step inference: one forward call yields the whole horizon.
    MixerConfig multi = c16;
    multi.horizon = 4;
    const MixerModel mh(multi, rng);
    const Matrix pred = mh.predict(oracle::random_matrix(2, 16, rng));
    const bool one_call = pred.rows() == 2 && pred.cols() == 4;

    report("C4 linear-complexity", formula16 && formula64 && linear && one_call,
           "mixing weights " + std::to_string(w16) + " @L=16 vs " + std::to_string(w64) +
               " @L=64 (enumerated == formula, per-sqrt(L) ratio exactly 2); one forward "
               "call predicts all N steps");
}

// ---- criterion 5: patch round trip -------------------------------------------

void criterion5() {
    Rng rng(5);
    std::size_t checked = 0;
    bool ok = true;
    for (std::size_t len = 1; len <= 64 && ok; ++len) {
        std::vector<double> series(len);
        for (double& v : series) v = rng.uniform(-5.0, 5.0);
        for (std::size_t w = 1; w <= len && ok; ++w) {
            if (len % w != 0) continue;
            ok = flatten_patches(to_patches(series, w)) == series;
            ++checked;
        }
    }
    report("C5 patch-round-trip", ok,
           std::to_string(checked) + " (L, w) pairs with w | L, L <= 64, all exact");
}

// ---- criterion 6: DLinear decomposition identity ------------------------------

void criterion6() {
    Rng rng(6);
    bool ok = true;
    std::size_t checked = 0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t len = 8 + rng.uniform_index(57);
        std::vector<double> series(len);
        for (double& v : series) v = rng.uniform(1.0, 2.0);  // capacity-like range
        const std::size_t window = clip_ma_window(25, len);
        auto [trend, remainder] = decompose_series(series, window);
        for (std::size_t i = 0; i < len; ++i) {
            ok = ok && (trend[i] + remainder[i] == series[i]);
            ++checked;
        }
    }
    report("C6 dlinear-decomposition", ok,
           std::to_string(checked) + " entries across 100 random series, trend + remainder "
                                     "== input bitwise");
}

// ---- criterion 7: end-to-end desk scale ---------------------------------------

void criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = desk_config();
    const PreparedData data = prepare_data(cfg);

    const PersistenceModel persistence(data.channels(), cfg.model.lookback,
                                       cfg.model.horizon);
    const Evaluation pe = evaluate_model(persistence, data, "persistence");

    // Closed-form persistence error on the fade line: one-step differences
    // are N(-c0*fade, 2*noise^2), so E|X| has an explicit form.
    const double mu = cfg.data.synth_c0 * cfg.data.synth_fade;
    const double s = cfg.data.synth_noise * std::sqrt(2.0);
    const double closed_form = s * std::sqrt(2.0 / 3.14159265358979323846) *
                                   std::exp(-mu * mu / (2.0 * s * s)) +
                               mu * std::erf(mu / (s * std::sqrt(2.0)));
    const double deviation = std::abs(pe.row.mae_ah - closed_form) / closed_form;

    double mae_sum = 0.0, are_sum = 0.0;
    bool are_defined = true;
    for (std::uint64_t seed : cfg.train.seeds) {
        const TrainResult run = train_model(cfg, data, seed);
        const Evaluation eval = evaluate_model(*run.model, data, "iip_mixer");
        mae_sum += eval.row.mae_ah / 3.0;
        if (eval.row.are_pct) {
            are_sum += *eval.row.are_pct / 3.0;
        } else {
            are_defined = false;
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const bool calibrated = deviation < 0.10;
    const bool beats = mae_sum <= 0.8 * pe.row.mae_ah;
    const bool are_ok = are_defined && are_sum < 10.0;
    report("C7 end-to-end-desk-scale", calibrated && beats && are_ok,
           "persistence MAE " + fmt(pe.row.mae_ah) + " Ah (closed form " + fmt(closed_form) +
               ", deviation " + fmt(100.0 * deviation, 3) + "%); mixer mean MAE " +
               fmt(mae_sum) + " Ah = " + fmt(100.0 * mae_sum / pe.row.mae_ah, 3) +
               "% of persistence (needs <= 80%); mean ARE " +
               (are_defined ? fmt(are_sum, 3) : std::string("undefined")) +
               "% (needs < 10%); " + fmt(secs, 3) + "s (< 300s)");
}

// ---- criterion 8: data-gated paper-scale check ---------------------------------

void criterion8() {
    const char* path = std::getenv("IIPM_NASA_CSV");
    if (path == nullptr || *path == '\0') {
        report_skip("C8 nasa-dataset",
                    "IIPM_NASA_CSV not set; supply a cycle-level CSV to enable the "
                    "leave-one-battery-out comparison");
        return;
    }
    ExperimentConfig cfg;
    cfg.data.source = path;
    cfg.data.k_principal = 4;
    cfg.model.n_blocks = 2;
    cfg.model.dropout = 0.05;
    cfg.train.lr = 0.001;
    cfg.train.batch = 16;
    cfg.train.epochs = 500;

    const auto cells = run_ablation_axis(cfg, "arch");
    const EvalReport table = ablation_report(cells);
    std::printf("%s", table.to_table().c_str());
    const fs::path out = fs::temp_directory_path() / "iipm_nasa_comparison.csv";
    std::ofstream os(out);
    table.write_csv(os);
    std::printf("        comparison written to %s\n", out.string().c_str());

    double mixer_mae = -1.0;
    for (const AblationCell& cell : cells) {
        if (cell.variant == "iip_mixer") mixer_mae = cell.result.mean_row.mae_ah;
    }
    report("C8 nasa-dataset", mixer_mae >= 0.0 && mixer_mae <= 0.06,
           "IIP-Mixer mean one-step MAE " + fmt(mixer_mae) +
               " Ah on the held-out battery (needs <= 0.06)");
}

// ---- criterion 9: ablation direction (soft) ------------------------------------

void criterion9() {
    ExperimentConfig cfg = desk_config();
    cfg.model.n_blocks = 1;
    cfg.train.epochs = 300;

    const auto cells = run_ablation_axis(cfg, "heads");
    double intra = 0.0, inter = 0.0, parallel = 0.0;
    for (const AblationCell& cell : cells) {
        if (cell.variant == "intra_only") intra = cell.result.mean_row.mae_ah;
        if (cell.variant == "inter_only") inter = cell.result.mean_row.mae_ah;
        if (cell.variant == "parallel") parallel = cell.result.mean_row.mae_ah;
    }
    const bool inter_beats_intra = inter < intra;
    const bool parallel_no_worse = parallel <= intra && parallel <= inter;
    report_soft("C9 ablation-direction", inter_beats_intra && parallel_no_worse,
                "mean-over-3-seeds MAE: intra_only " + fmt(intra) + ", inter_only " +
                    fmt(inter) + ", parallel " + fmt(parallel) +
                    " (expect inter < intra and parallel <= both; empirical tendency, "
                    "warning only)");
}

// ---- criterion 10: CLI determinism ----------------------------------------------

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str();
}

void criterion10() {
    const char* cli = std::getenv("IIPM_CLI");
    if (cli == nullptr || *cli == '\0') {
        report_skip("C10 cli-determinism", "IIPM_CLI not set (run through ctest)");
        return;
    }
    const fs::path root = fs::temp_directory_path() / "iipm_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);

    // synth twice -> byte-identical CSVs
    const std::string synth_args = "synth --cycles 80 --batteries 2 --seed 7 --out ";
    bool ok = run_cli(cli, synth_args + (root / "a.csv").string()) == 0 &&
              run_cli(cli, synth_args + (root / "b.csv").string()) == 0 &&
              same_bytes(root / "a.csv", root / "b.csv");

    // train twice from one config -> byte-identical reports and histories
    ExperimentConfig cfg = desk_config();
    cfg.data.synth_batteries = 3;
    cfg.data.synth_cycles = 60;
    cfg.train.epochs = 2;
    {
        std::ofstream os(root / "exp.cfg");
        write_config(os, cfg);
    }
    const std::string hash = cfg.hash_hex();
    ok = ok &&
         run_cli(cli, "train --config " + (root / "exp.cfg").string() + " --out " +
                          (root / "runs1").string()) == 0 &&
         run_cli(cli, "train --config " + (root / "exp.cfg").string() + " --out " +
                          (root / "runs2").string()) == 0;
    for (const char* name : {"report.csv", "history.csv", "importance.csv", "checkpoint",
                             "trajectory.csv"}) {
        ok = ok && same_bytes(root / "runs1" / hash / name, root / "runs2" / hash / name);
    }

    // missing config file: nonzero exit, no partial run directory
    const int bad = run_cli(cli, "train --config " + (root / "missing.cfg").string() +
                                     " --out " + (root / "runs3").string());
    ok = ok && bad != 0 && !fs::exists(root / "runs3");

    // the saved checkpoint loads back through evaluate
    ok = ok && run_cli(cli, "evaluate --config " + (root / "exp.cfg").string() +
                                " --checkpoint " + (root / "runs1" / hash / "checkpoint").string() +
                                " --out " + (root / "eval.csv").string()) == 0;
    ok = ok && fs::exists(root / "eval.csv");

    // ablate emits a table-shaped CSV per axis
    ok = ok && run_cli(cli, "ablate --config " + (root / "exp.cfg").string() +
                                " --axis heads --out " + (root / "ablations").string()) == 0;
    {
        std::ifstream heads(root / "ablations" / "heads.csv");
        std::string line;
        ok = ok && std::getline(heads, line) &&
             line == "method,mae_ah,rmse_ah,mape_pct,are_pct,rul_true,rul_pred";
        std::size_t rows = 0;
        while (std::getline(heads, line)) rows += !line.empty();
        ok = ok && rows == 3;
    }

    report("C10 cli-determinism", ok,
           "synth and train reruns byte-identical (report, history, importance, checkpoint, "
           "trajectory); missing config exits nonzero with no partial outputs; ablate "
           "writes the 3-row heads table");
    fs::remove_all(root);
}

} // namespace

int main() {
    std::printf("==== acceptance criteria ====\n");
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("==== %d passed, %d failed, %d warnings, %d skipped ====\n", g_pass, g_fail,
                g_warn, g_skip);
    return g_fail == 0 ? 0 : 1;
}
