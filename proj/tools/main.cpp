// Command-line front end: synthetic fleets, feature importances, training
// runs, ablation sweeps and report emission over the iipmixer core library.

#include "iipmixer/harness.hpp"
#include "iipmixer/nn.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace iipm;

namespace {

ExperimentConfig load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = load_config_file(path);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

int cmd_synth(const std::string& out, std::size_t cycles, std::size_t batteries,
              std::uint64_t seed, double c0, double fade, double noise, double regen_amp,
              std::size_t regen_period, double fade_jitter) {
    SynthConfig cfg;
    cfg.c0 = c0;
    cfg.fade_rate = fade;
    cfg.noise_std = noise;
    cfg.regen_amp = regen_amp;
    cfg.regen_period = regen_period;
    cfg.cycles = cycles;
    const auto fleet = synth_fleet(cfg, batteries, seed, fade_jitter);
    save_cycle_csv(out, fleet);
    std::cout << "wrote " << batteries << " batteries x " << cycles << " cycles to " << out
              << "\n";
    return 0;
}

int cmd_importance(const ExperimentConfig& cfg, const std::string& out) {
    const PreparedData data = prepare_data(cfg);
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open '" + out + "' for writing");
    write_importance_csv(os, data.batteries[0].feature_names, data.importances, data.selected);
    std::cout << "feature importances (" << data.selected.size() << " selected):\n";
    for (std::size_t f = 0; f < data.importances.size(); ++f) {
        const bool sel =
            std::find(data.selected.begin(), data.selected.end(), f) != data.selected.end();
        std::cout << "  " << (sel ? "*" : " ") << " " << data.batteries[0].feature_names[f]
                  << " " << data.importances[f] << "\n";
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& out_root) {
    const RunResult run = run_experiment(cfg, out_root);
    std::cout << "run " << run.config_hash << " complete\n";
    std::cout << run_report(run, to_string(cfg.model.arch)).to_table();
    if (!out_root.empty()) {
        std::cout << "artifacts in " << (fs::path(out_root) / run.config_hash).string() << "\n";
    }
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint,
                 const std::string& out) {
    const PreparedData data = prepare_data(cfg);
    const auto model = load_checkpoint(checkpoint);
    if (model->channels() != data.channels() || model->lookback() != cfg.model.lookback) {
        throw std::runtime_error("checkpoint shape does not match the configured data");
    }
    const Evaluation eval = evaluate_model(*model, data, std::string(model->arch()));
    EvalReport report;
    report.rows.push_back(eval.row);
    report.rows.push_back(eval.rollout_row);
    for (const EvalRow& r : eval.per_battery) report.rows.push_back(r);
    std::cout << report.to_table();
    if (eval.rul_flagged) {
        std::cout << "note: capacity never crossed the failure threshold; ARE omitted\n";
    }
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot open '" + out + "' for writing");
        report.write_csv(os);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, const std::string& axis,
               const std::string& out_dir) {
    std::vector<std::string> axes;
    if (axis == "all") {
        axes = ablation_axes();
    } else {
        axes = {axis};
    }
    fs::create_directories(out_dir);
    for (const std::string& a : axes) {
        const auto cells = run_ablation_axis(cfg, a);
        const EvalReport report = ablation_report(cells);
        const fs::path out = fs::path(out_dir) / (a + ".csv");
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot open '" + out.string() + "' for writing");
        report.write_csv(os);
        std::cout << "axis " << a << ":\n" << report.to_table();
        std::cout << "wrote " << out.string() << "\n";
    }
    return 0;
}

int cmd_report(const ExperimentConfig& cfg, const std::string& checkpoint,
               const std::string& out_dir) {
    const PreparedData data = prepare_data(cfg);
    const auto model = load_checkpoint(checkpoint);
    const Evaluation eval = evaluate_model(*model, data, std::string(model->arch()));

    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "report.csv");
        EvalReport report;
        report.rows.push_back(eval.row);
        report.rows.push_back(eval.rollout_row);
        report.write_csv(os);
    }
    {
        std::ofstream os(fs::path(out_dir) / "trajectory.csv");
        write_trajectory_csv(os, eval);
    }
    EvalReport table;
    table.rows.push_back(eval.row);
    table.rows.push_back(eval.rollout_row);
    std::cout << table.to_table();
    std::cout << "wrote report.csv and trajectory.csv to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IIP-Mixer battery RUL forecasting harness"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic degradation fleet CSV");
    std::string synth_out;
    std::size_t synth_cycles = 300, synth_batteries = 4, regen_period = 50;
    std::uint64_t synth_seed = 7;
    double c0 = 2.0, fade = 0.001, noise = 0.002, regen_amp = 0.0, fade_jitter = 0.1;
    synth->add_option("--out", synth_out, "output CSV path")->required();
    synth->add_option("--cycles", synth_cycles, "cycles per battery");
    synth->add_option("--batteries", synth_batteries, "fleet size");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--c0", c0, "initial capacity (Ah)");
    synth->add_option("--fade", fade, "linear fade per cycle");
    synth->add_option("--noise", noise, "capacity noise std (Ah)");
    synth->add_option("--regen-amp", regen_amp, "regeneration boost (Ah)");
    synth->add_option("--regen-period", regen_period, "cycles between regenerations");
    synth->add_option("--fade-jitter", fade_jitter, "per-battery fade jitter fraction");

    // shared config options
    std::string config_path;
    std::vector<std::string> overrides;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--set", overrides, "override a config key (section.key=value)");
    };

    // importance
    auto* importance = app.add_subcommand("importance",
                                          "fit the random forest and emit importances");
    add_config(importance);
    std::string importance_out = "importance.csv";
    importance->add_option("--out", importance_out, "output CSV path");

    // train
    auto* train = app.add_subcommand("train", "train and evaluate all configured seeds");
    add_config(train);
    std::string train_out = "runs";
    bool grid_mode = false;
    train->add_option("--out", train_out, "artifact directory root");
    train->add_flag("--grid", grid_mode, "enforce the hyperparameter grid ranges");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved checkpoint");
    add_config(evaluate);
    std::string eval_checkpoint, eval_out;
    evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint path")->required();
    evaluate->add_option("--out", eval_out, "optional report CSV path");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run one ablation axis");
    add_config(ablate);
    std::string axis = "heads", ablate_out = "ablations";
    ablate->add_option("--axis", axis, "heads|serial|weighted|features|arch|all");
    ablate->add_option("--out", ablate_out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "emit report and trajectory CSVs");
    add_config(report);
    std::string report_checkpoint, report_out = "report";
    report->add_option("--checkpoint", report_checkpoint, "checkpoint path")->required();
    report->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run '" << (argc > 0 ? argv[0] : "iipmixer") << " --help' for usage\n";
        return 2;
    }

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_out, synth_cycles, synth_batteries, synth_seed, c0, fade,
                             noise, regen_amp, regen_period, fade_jitter);
        }
        const ExperimentConfig cfg = load_with_overrides(config_path, overrides);
        if (grid_mode) cfg.validate_grid();
        if (importance->parsed()) return cmd_importance(cfg, importance_out);
        if (train->parsed()) return cmd_train(cfg, train_out);
        if (evaluate->parsed()) return cmd_evaluate(cfg, eval_checkpoint, eval_out);
        if (ablate->parsed()) return cmd_ablate(cfg, axis, ablate_out);
        if (report->parsed()) return cmd_report(cfg, report_checkpoint, report_out);
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
