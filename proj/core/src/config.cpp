#include "iipmixer/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace iipm {

std::string_view to_string(Arch a) {
    switch (a) {
        case Arch::IipMixer: return "iip_mixer";
        case Arch::Mlp: return "mlp";
        case Arch::Dlinear: return "dlinear";
    }
    return "iip_mixer";
}

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

std::string_view to_string(AlphaSource s) {
    return s == AlphaSource::Forest ? "forest" : "uniform";
}

namespace {

Arch arch_from_string(const std::string& s) {
    if (s == "iip_mixer") return Arch::IipMixer;
    if (s == "mlp") return Arch::Mlp;
    if (s == "dlinear") return Arch::Dlinear;
    throw std::invalid_argument("config: unknown arch '" + s + "'");
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::Sgd;
    if (s == "adam") return Optimizer::Adam;
    throw std::invalid_argument("config: unknown optimizer '" + s + "'");
}

AlphaSource alpha_source_from_string(const std::string& s) {
    if (s == "forest") return AlphaSource::Forest;
    if (s == "uniform") return AlphaSource::Uniform;
    throw std::invalid_argument("config: unknown alpha_source '" + s + "'");
}

bool bool_from_string(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("config: expected a boolean, got '" + s + "'");
}

std::size_t size_from_string(const std::string& s) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("config: bad integer '" + s + "'");
    return static_cast<std::size_t>(v);
}

double double_from_string(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("config: bad number '" + s + "'");
    return v;
}

std::vector<std::uint64_t> seeds_from_string(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) {
        if (cur.empty()) continue;
        seeds.push_back(std::stoull(cur));
    }
    if (seeds.empty()) throw std::invalid_argument("config: empty seed list");
    return seeds;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) { return double_repr(v); }

} // namespace

void ExperimentConfig::set(const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) {
        throw std::invalid_argument("config: key '" + dotted_key +
                                    "' is not of the form section.key");
    }
    const std::string section = dotted_key.substr(0, dot);
    const std::string key = dotted_key.substr(dot + 1);

    if (section == "model") {
        if (key == "arch") model.arch = arch_from_string(value);
        else if (key == "lookback") model.lookback = size_from_string(value);
        else if (key == "horizon") model.horizon = size_from_string(value);
        else if (key == "patch_len") model.patch_len = size_from_string(value);
        else if (key == "blocks") model.n_blocks = size_from_string(value);
        else if (key == "expansion") model.expansion = size_from_string(value);
        else if (key == "dropout") model.dropout = double_from_string(value);
        else if (key == "head_mode") model.head_mode = head_mode_from_string(value);
        else if (key == "shared_channels") model.shared_channels = bool_from_string(value);
        else if (key == "mlp_hidden") model.mlp_hidden = size_from_string(value);
        else if (key == "ma_window") model.ma_window = size_from_string(value);
        else throw std::invalid_argument("config: unknown key model." + key);
    } else if (section == "train") {
        if (key == "lr") train.lr = double_from_string(value);
        else if (key == "epochs") train.epochs = size_from_string(value);
        else if (key == "batch") train.batch = size_from_string(value);
        else if (key == "seeds") train.seeds = seeds_from_string(value);
        else if (key == "optimizer") train.optimizer = optimizer_from_string(value);
        else throw std::invalid_argument("config: unknown key train." + key);
    } else if (section == "data") {
        if (key == "source") data.source = value;
        else if (key == "synth_batteries") data.synth_batteries = size_from_string(value);
        else if (key == "synth_cycles") data.synth_cycles = size_from_string(value);
        else if (key == "synth_c0") data.synth_c0 = double_from_string(value);
        else if (key == "synth_fade") data.synth_fade = double_from_string(value);
        else if (key == "synth_noise") data.synth_noise = double_from_string(value);
        else if (key == "synth_regen_amp") data.synth_regen_amp = double_from_string(value);
        else if (key == "synth_regen_period") data.synth_regen_period = size_from_string(value);
        else if (key == "synth_fade_jitter") data.synth_fade_jitter = double_from_string(value);
        else if (key == "synth_seed") data.synth_seed = std::stoull(value);
        else if (key == "split") data.split = value;
        else if (key == "test_battery") data.test_battery = value;
        else if (key == "k_principal") data.k_principal = size_from_string(value);
        else if (key == "stride") data.stride = size_from_string(value);
        else if (key == "forest_seed") data.forest_seed = std::stoull(value);
        else if (key == "forest_trees") data.forest_trees = size_from_string(value);
        else throw std::invalid_argument("config: unknown key data." + key);
    } else if (section == "loss") {
        if (key == "weighted") loss.weighted = bool_from_string(value);
        else if (key == "alpha_source") loss.alpha_source = alpha_source_from_string(value);
        else throw std::invalid_argument("config: unknown key loss." + key);
    } else {
        throw std::invalid_argument("config: unknown section '" + section + "'");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw std::invalid_argument("config: malformed section header on line " +
                                            std::to_string(line_no));
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: expected key = value on line " +
                                        std::to_string(line_no));
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty()) {
            throw std::invalid_argument("config: key '" + key + "' before any [section]");
        }
        cfg.set(section + "." + key, value);
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    return parse_config(in);
}

void ExperimentConfig::validate() const {
    if (model.lookback == 0 || model.horizon == 0) {
        throw std::invalid_argument("config: lookback and horizon must be >= 1");
    }
    if (model.arch == Arch::IipMixer) {
        if (model.patch_len == 0 || model.lookback % model.patch_len != 0) {
            throw std::invalid_argument("config: lookback " + std::to_string(model.lookback) +
                                        " not divisible by patch_len " +
                                        std::to_string(model.patch_len));
        }
    }
    if (model.dropout < 0.0 || model.dropout >= 1.0) {
        throw std::invalid_argument("config: dropout must lie in [0, 1)");
    }
    if (!(train.lr > 0.0)) throw std::invalid_argument("config: lr must be > 0");
    if (train.batch == 0) throw std::invalid_argument("config: batch must be >= 1");
    if (train.seeds.size() != 3) {
        throw std::invalid_argument("config: exactly 3 seeds required, got " +
                                    std::to_string(train.seeds.size()));
    }
    if (data.split != "leave_one_out" && data.split != "chronological") {
        throw std::invalid_argument("config: split must be leave_one_out or chronological");
    }
    if (data.k_principal == 0) throw std::invalid_argument("config: k_principal must be >= 1");
    if (data.stride == 0) throw std::invalid_argument("config: stride must be >= 1");
    if (data.source.empty() && data.synth_batteries == 0) {
        throw std::invalid_argument("config: synthetic fleet needs at least 1 battery");
    }
}

void ExperimentConfig::validate_grid() const {
    validate();
    auto in_set = [](auto v, std::initializer_list<decltype(v)> allowed) {
        return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    };
    if (model.lookback != 16) {
        throw std::invalid_argument("grid: paper-comparison runs use lookback 16");
    }
    if (!in_set(model.patch_len, {std::size_t{2}, std::size_t{4}, std::size_t{8}})) {
        throw std::invalid_argument("grid: patch_len must be one of {2, 4, 8}");
    }
    const std::size_t h = model.lookback / model.patch_len;
    if (!in_set(h, {std::size_t{2}, std::size_t{4}, std::size_t{8}})) {
        throw std::invalid_argument("grid: patch count must be one of {2, 4, 8}");
    }
    if (!in_set(model.n_blocks, {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{4}})) {
        throw std::invalid_argument("grid: blocks must lie in {1, 2, 3, 4}");
    }
    if (!in_set(train.lr, {0.0001, 0.0005, 0.001})) {
        throw std::invalid_argument("grid: lr must be one of {0.0001, 0.0005, 0.001}");
    }
    if (!in_set(model.dropout, {0.05, 0.1, 0.2})) {
        throw std::invalid_argument("grid: dropout must be one of {0.05, 0.1, 0.2}");
    }
    if (!in_set(data.k_principal, {std::size_t{1}, std::size_t{2}, std::size_t{4}, std::size_t{6},
                                   std::size_t{8}, std::size_t{10}, std::size_t{12},
                                   std::size_t{14}, std::size_t{16}})) {
        throw std::invalid_argument(
            "grid: k_principal must be one of {1, 2, 4, 6, 8, 10, 12, 14, 16}");
    }
}

// Split identity only: the fields that determine which windows exist and
// where they land. Feature-selection knobs (k_principal, forest_*) pick
// channels within those windows and deliberately stay out, so every ablation
// axis shares one data hash.
std::string ExperimentConfig::data_canonical_string() const {
    std::ostringstream os;
    os << "data.source=" << data.source << '\n'
       << "data.synth_batteries=" << data.synth_batteries << '\n'
       << "data.synth_cycles=" << data.synth_cycles << '\n'
       << "data.synth_c0=" << fmt(data.synth_c0) << '\n'
       << "data.synth_fade=" << fmt(data.synth_fade) << '\n'
       << "data.synth_noise=" << fmt(data.synth_noise) << '\n'
       << "data.synth_regen_amp=" << fmt(data.synth_regen_amp) << '\n'
       << "data.synth_regen_period=" << data.synth_regen_period << '\n'
       << "data.synth_fade_jitter=" << fmt(data.synth_fade_jitter) << '\n'
       << "data.synth_seed=" << data.synth_seed << '\n'
       << "data.split=" << data.split << '\n'
       << "data.test_battery=" << data.test_battery << '\n'
       << "data.stride=" << data.stride << '\n';
    return os.str();
}

std::string ExperimentConfig::canonical_string() const {
    std::ostringstream os;
    os << "model.arch=" << to_string(model.arch) << '\n'
       << "model.lookback=" << model.lookback << '\n'
       << "model.horizon=" << model.horizon << '\n'
       << "model.patch_len=" << model.patch_len << '\n'
       << "model.blocks=" << model.n_blocks << '\n'
       << "model.expansion=" << model.expansion << '\n'
       << "model.dropout=" << fmt(model.dropout) << '\n'
       << "model.head_mode=" << to_string(model.head_mode) << '\n'
       << "model.shared_channels=" << (model.shared_channels ? "true" : "false") << '\n'
       << "model.mlp_hidden=" << model.mlp_hidden << '\n'
       << "model.ma_window=" << model.ma_window << '\n'
       << "train.lr=" << fmt(train.lr) << '\n'
       << "train.epochs=" << train.epochs << '\n'
       << "train.batch=" << train.batch << '\n';
    os << "train.seeds=";
    for (std::size_t i = 0; i < train.seeds.size(); ++i) {
        if (i) os << ',';
        os << train.seeds[i];
    }
    os << '\n' << "train.optimizer=" << to_string(train.optimizer) << '\n';
    os << data_canonical_string();
    os << "data.k_principal=" << data.k_principal << '\n'
       << "data.forest_seed=" << data.forest_seed << '\n'
       << "data.forest_trees=" << data.forest_trees << '\n';
    os << "loss.weighted=" << (loss.weighted ? "true" : "false") << '\n'
       << "loss.alpha_source=" << to_string(loss.alpha_source) << '\n';
    return os.str();
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    out << "[model]\n"
        << "arch = " << to_string(cfg.model.arch) << '\n'
        << "lookback = " << cfg.model.lookback << '\n'
        << "horizon = " << cfg.model.horizon << '\n'
        << "patch_len = " << cfg.model.patch_len << '\n'
        << "blocks = " << cfg.model.n_blocks << '\n'
        << "expansion = " << cfg.model.expansion << '\n'
        << "dropout = " << fmt(cfg.model.dropout) << '\n'
        << "head_mode = " << to_string(cfg.model.head_mode) << '\n'
        << "shared_channels = " << (cfg.model.shared_channels ? "true" : "false") << '\n'
        << "mlp_hidden = " << cfg.model.mlp_hidden << '\n'
        << "ma_window = " << cfg.model.ma_window << '\n'
        << "\n[train]\n"
        << "lr = " << fmt(cfg.train.lr) << '\n'
        << "epochs = " << cfg.train.epochs << '\n'
        << "batch = " << cfg.train.batch << '\n';
    out << "seeds = ";
    for (std::size_t i = 0; i < cfg.train.seeds.size(); ++i) {
        if (i) out << ',';
        out << cfg.train.seeds[i];
    }
    out << '\n' << "optimizer = " << to_string(cfg.train.optimizer) << '\n'
        << "\n[data]\n"
        << "source = " << cfg.data.source << '\n'
        << "synth_batteries = " << cfg.data.synth_batteries << '\n'
        << "synth_cycles = " << cfg.data.synth_cycles << '\n'
        << "synth_c0 = " << fmt(cfg.data.synth_c0) << '\n'
        << "synth_fade = " << fmt(cfg.data.synth_fade) << '\n'
        << "synth_noise = " << fmt(cfg.data.synth_noise) << '\n'
        << "synth_regen_amp = " << fmt(cfg.data.synth_regen_amp) << '\n'
        << "synth_regen_period = " << cfg.data.synth_regen_period << '\n'
        << "synth_fade_jitter = " << fmt(cfg.data.synth_fade_jitter) << '\n'
        << "synth_seed = " << cfg.data.synth_seed << '\n'
        << "split = " << cfg.data.split << '\n'
        << "test_battery = " << cfg.data.test_battery << '\n'
        << "k_principal = " << cfg.data.k_principal << '\n'
        << "stride = " << cfg.data.stride << '\n'
        << "forest_seed = " << cfg.data.forest_seed << '\n'
        << "forest_trees = " << cfg.data.forest_trees << '\n'
        << "\n[loss]\n"
        << "weighted = " << (cfg.loss.weighted ? "true" : "false") << '\n'
        << "alpha_source = " << to_string(cfg.loss.alpha_source) << '\n';
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical_string()); }

std::uint64_t ExperimentConfig::data_hash() const { return fnv1a64(data_canonical_string()); }

std::string ExperimentConfig::hash_hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash();
    return os.str();
}

} // namespace iipm
