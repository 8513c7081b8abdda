#pragma once

#include "iipmixer/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace iipm {

enum class Arch { IipMixer, Mlp, Dlinear };
enum class Optimizer { Sgd, Adam };
enum class AlphaSource { Forest, Uniform };

std::string_view to_string(Arch a);
std::string_view to_string(Optimizer o);
std::string_view to_string(AlphaSource s);

//! Everything a run needs, loadable from a flat key-value config file with
//! [model] / [train] / [data] / [loss] sections (see the README for the key
//! list). Command-line --set overrides map onto the same keys.
struct ExperimentConfig {
    struct Model {
        Arch arch = Arch::IipMixer;
        std::size_t lookback = 16;   // L
        std::size_t horizon = 1;     // N
        std::size_t patch_len = 4;   // W
        std::size_t n_blocks = 2;
        std::size_t expansion = 2;
        double dropout = 0.05;
        HeadMode head_mode = HeadMode::Parallel;
        bool shared_channels = false;
        std::size_t mlp_hidden = 128;  // MLP baseline hidden width
        std::size_t ma_window = 25;    // DLinear, clipped to lookback
    } model;

    struct Train {
        double lr = 0.001;
        std::size_t epochs = 500;
        std::size_t batch = 32;
        std::vector<std::uint64_t> seeds = {0, 1, 2};
        Optimizer optimizer = Optimizer::Sgd;
    } train;

    struct Data {
        std::string source;  // cycle-level CSV; empty -> synthetic fleet
        std::size_t synth_batteries = 4;
        std::size_t synth_cycles = 300;
        double synth_c0 = 2.0;
        double synth_fade = 0.001;
        double synth_noise = 0.002;
        double synth_regen_amp = 0.0;
        std::size_t synth_regen_period = 50;
        double synth_fade_jitter = 0.1;
        std::uint64_t synth_seed = 7;
        std::string split = "leave_one_out";  // or "chronological"
        std::string test_battery;             // empty -> last by id
        std::size_t k_principal = 4;
        std::size_t stride = 1;
        std::uint64_t forest_seed = 13;
        std::size_t forest_trees = 100;
    } data;

    struct Loss {
        bool weighted = true;
        AlphaSource alpha_source = AlphaSource::Forest;
    } loss;

    void validate() const;
    //! Enforces the hyperparameter grid ranges on top of validate().
    void validate_grid() const;

    //! Canonical text form: every key on its own line, fixed order. Equal
    //! configs hash equal; the hash names the run directory.
    std::string canonical_string() const;
    std::string data_canonical_string() const;
    std::uint64_t hash() const;
    std::uint64_t data_hash() const;
    std::string hash_hex() const;

    void set(const std::string& dotted_key, const std::string& value);
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view text);

} // namespace iipm
