#include "iipmixer/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace iipm {

std::string_view to_string(HeadMode mode) {
    switch (mode) {
        case HeadMode::Parallel: return "parallel";
        case HeadMode::SerialIntraFirst: return "serial_intra_first";
        case HeadMode::SerialInterFirst: return "serial_inter_first";
        case HeadMode::IntraOnly: return "intra_only";
        case HeadMode::InterOnly: return "inter_only";
    }
    return "parallel";
}

HeadMode head_mode_from_string(std::string_view name) {
    if (name == "parallel") return HeadMode::Parallel;
    if (name == "serial_intra_first") return HeadMode::SerialIntraFirst;
    if (name == "serial_inter_first") return HeadMode::SerialInterFirst;
    if (name == "intra_only") return HeadMode::IntraOnly;
    if (name == "inter_only") return HeadMode::InterOnly;
    throw std::invalid_argument("unknown head mode '" + std::string(name) + "'");
}

void MixerConfig::validate() const {
    if (channels == 0) throw std::invalid_argument("MixerConfig: channels must be >= 1");
    if (lookback == 0 || horizon == 0) {
        throw std::invalid_argument("MixerConfig: lookback and horizon must be >= 1");
    }
    if (patch_len == 0 || lookback % patch_len != 0) {
        throw std::invalid_argument("MixerConfig: lookback " + std::to_string(lookback) +
                                    " is not divisible by patch length " +
                                    std::to_string(patch_len));
    }
    if (expansion == 0) throw std::invalid_argument("MixerConfig: expansion must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) {
        throw std::invalid_argument("MixerConfig: dropout must lie in [0, 1)");
    }
}

namespace {
// weights 2*e*d^2, biases (e + 1)*d for one mixing MLP of mixed length d.
std::size_t mixing_weights_one(std::size_t d, std::size_t e) { return 2 * e * d * d; }
std::size_t mixing_biases_one(std::size_t d, std::size_t e) { return (e + 1) * d; }
} // namespace

ParamCount mixer_param_count(const MixerConfig& cfg) {
    cfg.validate();
    const std::size_t w = cfg.patch_len;
    const std::size_t h = cfg.patch_count();
    const std::size_t e = cfg.expansion;
    const std::size_t sets = cfg.shared_channels ? 1 : cfg.channels;

    ParamCount count;
    count.mixing_weights =
        sets * cfg.n_blocks * (mixing_weights_one(w, e) + mixing_weights_one(h, e));
    count.mixing_biases =
        sets * cfg.n_blocks * (mixing_biases_one(w, e) + mixing_biases_one(h, e));
    count.projection_weights = sets * cfg.horizon * cfg.lookback;
    count.projection_biases = sets * cfg.horizon;
    return count;
}

Tape::NodeId mixer_block_forward(Tape& tape, const MixerBlock& block, Tape::NodeId x,
                                 double dropout_rate, Rng* dropout_rng) {
    const Matrix& xv = tape.value(x);
    if (xv.rows() != block.inter.in() || xv.cols() != block.intra.in()) {
        throw std::invalid_argument("mixer_block_forward: input " + shape_string(xv) +
                                    " does not match block (H=" +
                                    std::to_string(block.inter.in()) +
                                    ", W=" + std::to_string(block.intra.in()) + ")");
    }
    auto intra = [&](Tape::NodeId in) {
        return mlp2_forward(tape, block.intra, in, MixAxis::Cols, dropout_rate, dropout_rng);
    };
    auto inter_t = [&](Tape::NodeId in) {
        return mlp2_forward(tape, block.inter, in, MixAxis::Rows, dropout_rate, dropout_rng);
    };
    switch (block.mode) {
        case HeadMode::Parallel:
            return tape.add(tape.add(intra(x), inter_t(x)), x);
        case HeadMode::IntraOnly:
            return tape.add(intra(x), x);
        case HeadMode::InterOnly:
            return tape.add(inter_t(x), x);
        case HeadMode::SerialIntraFirst:
            return tape.add(inter_t(intra(x)), x);
        case HeadMode::SerialInterFirst:
            return tape.add(intra(inter_t(x)), x);
    }
    throw std::logic_error("mixer_block_forward: unhandled mode");
}

Matrix mixer_block_forward(const MixerBlock& block, const Matrix& x) {
    Tape tape;
    return tape.value(mixer_block_forward(tape, block, tape.constant(x)));
}

// ---- Forecaster ------------------------------------------------------------

void Forecaster::check_window(const Matrix& window) const {
    if (window.rows() != channels() || window.cols() != lookback()) {
        throw std::invalid_argument("forecaster: window " + shape_string(window) +
                                    " does not match (C=" + std::to_string(channels()) +
                                    ", L=" + std::to_string(lookback()) + ")");
    }
}

std::vector<const Matrix*> Forecaster::parameters() const {
    auto mut = const_cast<Forecaster*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

Matrix Forecaster::predict(const Matrix& window) const {
    Tape tape;
    return model_forward(tape, *this, window).prediction;
}

std::size_t Forecaster::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* p : parameters()) n += p->size();
    return n;
}

ModelForward model_forward(Tape& tape, const Forecaster& model, const Matrix& window,
                           bool training, Rng* dropout_rng) {
    ModelForward out;
    out.channel_preds = model.forward_channels(tape, window, training, dropout_rng);
    out.prediction = Matrix(model.channels(), model.horizon());
    for (std::size_t c = 0; c < out.channel_preds.size(); ++c) {
        out.prediction.set_row(c, tape.value(out.channel_preds[c]).values());
    }
    return out;
}

// ---- MixerModel ------------------------------------------------------------

MixerModel::MixerModel(MixerConfig cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t w = cfg_.patch_len;
    const std::size_t h = cfg_.patch_count();
    const std::size_t sets = cfg_.shared_channels ? 1 : cfg_.channels;
    const double proj_bound = 1.0 / std::sqrt(static_cast<double>(cfg_.lookback));
    params_.reserve(sets);
    for (std::size_t s = 0; s < sets; ++s) {
        ChannelParams p;
        p.blocks.reserve(cfg_.n_blocks);
        for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
            MixerBlock block;
            block.intra = Mlp2::make(w, cfg_.expansion * w, w, rng);
            block.inter = Mlp2::make(h, cfg_.expansion * h, h, rng);
            block.mode = cfg_.mode;
            p.blocks.push_back(std::move(block));
        }
        p.w_proj = Matrix(cfg_.horizon, cfg_.lookback);
        for (double& v : p.w_proj.values()) v = rng.uniform(-proj_bound, proj_bound);
        p.b_proj = Matrix(1, cfg_.horizon);
        params_.push_back(std::move(p));
    }
}

MixerModel::MixerModel(MixerConfig cfg, std::vector<ChannelParams> params)
    : cfg_(cfg), params_(std::move(params)) {}

const MixerModel::ChannelParams& MixerModel::channel_params(std::size_t channel) const {
    return cfg_.shared_channels ? params_[0] : params_[channel];
}

Tape::NodeId MixerModel::forward_channel(Tape& tape, std::size_t channel, Tape::NodeId series,
                                         bool training, Rng* dropout_rng) const {
    const ChannelParams& p = channel_params(channel);
    const double rate = training ? cfg_.dropout : 0.0;
    Tape::NodeId g = tape.reshape(series, cfg_.patch_count(), cfg_.patch_len);
    for (const MixerBlock& block : p.blocks) {
        g = mixer_block_forward(tape, block, g, rate, dropout_rng);
    }
    Tape::NodeId flat = tape.reshape(g, 1, cfg_.lookback);
    return tape.add_row_vector(tape.matmul(flat, tape.transpose(tape.param(&p.w_proj))),
                               tape.param(&p.b_proj));
}

std::vector<Tape::NodeId> MixerModel::forward_channels(Tape& tape, const Matrix& window,
                                                       bool training, Rng* dropout_rng) const {
    check_window(window);
    std::vector<Tape::NodeId> preds;
    preds.reserve(cfg_.channels);
    for (std::size_t c = 0; c < cfg_.channels; ++c) {
        const auto row = window.row(c);
        Tape::NodeId series =
            tape.constant(Matrix(1, cfg_.lookback, std::vector<double>(row.begin(), row.end())));
        preds.push_back(forward_channel(tape, c, series, training, dropout_rng));
    }
    return preds;
}

std::vector<Matrix*> MixerModel::parameters() {
    std::vector<Matrix*> out;
    for (ChannelParams& p : params_) {
        for (MixerBlock& block : p.blocks) {
            for (Matrix* m : block.intra.parameters()) out.push_back(m);
            for (Matrix* m : block.inter.parameters()) out.push_back(m);
        }
        out.push_back(&p.w_proj);
        out.push_back(&p.b_proj);
    }
    return out;
}

std::size_t MixerModel::enumerated_mixing_weight_count() const {
    std::size_t n = 0;
    for (const ChannelParams& p : params_) {
        for (const MixerBlock& block : p.blocks) {
            n += block.intra.w_in.size() + block.intra.w_out.size();
            n += block.inter.w_in.size() + block.inter.w_out.size();
        }
    }
    return n;
}

std::size_t MixerModel::enumerated_mixing_param_count() const {
    std::size_t n = 0;
    for (const ChannelParams& p : params_) {
        for (const MixerBlock& block : p.blocks) {
            for (const Matrix* m : block.intra.parameters()) n += m->size();
            for (const Matrix* m : block.inter.parameters()) n += m->size();
        }
    }
    return n;
}

// ---- DLinear ---------------------------------------------------------------

std::vector<double> moving_average_trend(std::span<const double> x, std::size_t window) {
    const std::size_t len = x.size();
    if (window == 0 || window % 2 == 0) {
        throw std::invalid_argument("moving_average_trend: window must be odd, got " +
                                    std::to_string(window));
    }
    if (window > len) {
        throw std::invalid_argument("moving_average_trend: window " + std::to_string(window) +
                                    " exceeds series length " + std::to_string(len));
    }
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(len);
    std::vector<double> trend(len);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::ptrdiff_t j = i - half; j <= i + half; ++j) {
            const std::ptrdiff_t k = std::min(std::max(j, std::ptrdiff_t{0}), n - 1);
            sum += x[static_cast<std::size_t>(k)];
        }
        trend[static_cast<std::size_t>(i)] = sum / static_cast<double>(window);
    }
    return trend;
}

std::pair<std::vector<double>, std::vector<double>> decompose_series(std::span<const double> x,
                                                                     std::size_t window) {
    std::vector<double> trend = moving_average_trend(x, window);
    std::vector<double> remainder(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) remainder[i] = x[i] - trend[i];
    return {std::move(trend), std::move(remainder)};
}

std::size_t clip_ma_window(std::size_t requested, std::size_t len) {
    std::size_t w = std::min(requested, len);
    if (w == 0) w = 1;
    if (w % 2 == 0) --w;
    return w;
}

DLinearUnit DLinearUnit::make(std::size_t lookback, std::size_t horizon, std::size_t ma_window,
                              Rng& rng) {
    DLinearUnit u;
    u.ma_window = ma_window;
    const double bound = 1.0 / std::sqrt(static_cast<double>(lookback));
    u.trend_w = Matrix(horizon, lookback);
    u.remainder_w = Matrix(horizon, lookback);
    for (double& v : u.trend_w.values()) v = rng.uniform(-bound, bound);
    for (double& v : u.remainder_w.values()) v = rng.uniform(-bound, bound);
    u.trend_b = Matrix(1, horizon);
    u.remainder_b = Matrix(1, horizon);
    return u;
}

std::vector<double> dlinear_forward(const DLinearUnit& unit, std::span<const double> series) {
    if (series.size() != unit.trend_w.cols()) {
        throw std::invalid_argument("dlinear_forward: series length " +
                                    std::to_string(series.size()) + " != lookback " +
                                    std::to_string(unit.trend_w.cols()));
    }
    auto [trend, remainder] = decompose_series(series, unit.ma_window);
    const std::size_t horizon = unit.trend_w.rows();
    std::vector<double> out(horizon);
    for (std::size_t n = 0; n < horizon; ++n) {
        double acc = unit.trend_b(0, n) + unit.remainder_b(0, n);
        for (std::size_t l = 0; l < series.size(); ++l) {
            acc += unit.trend_w(n, l) * trend[l] + unit.remainder_w(n, l) * remainder[l];
        }
        out[n] = acc;
    }
    return out;
}

DLinearModel::DLinearModel(std::size_t channels, std::size_t lookback, std::size_t horizon,
                           std::size_t ma_window, Rng& rng)
    : channels_(channels), lookback_(lookback), horizon_(horizon) {
    const std::size_t w = clip_ma_window(ma_window, lookback);
    units_.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        units_.push_back(DLinearUnit::make(lookback, horizon, w, rng));
    }
}

std::vector<Tape::NodeId> DLinearModel::forward_channels(Tape& tape, const Matrix& window,
                                                         bool /*training*/,
                                                         Rng* /*dropout_rng*/) const {
    check_window(window);
    std::vector<Tape::NodeId> preds;
    preds.reserve(channels_);
    for (std::size_t c = 0; c < channels_; ++c) {
        const DLinearUnit& u = units_[c];
        auto [trend, remainder] = decompose_series(window.row(c), u.ma_window);
        Tape::NodeId t = tape.constant(Matrix(1, lookback_, std::move(trend)));
        Tape::NodeId r = tape.constant(Matrix(1, lookback_, std::move(remainder)));
        Tape::NodeId yt = tape.add_row_vector(
            tape.matmul(t, tape.transpose(tape.param(&u.trend_w))), tape.param(&u.trend_b));
        Tape::NodeId yr = tape.add_row_vector(
            tape.matmul(r, tape.transpose(tape.param(&u.remainder_w))),
            tape.param(&u.remainder_b));
        preds.push_back(tape.add(yt, yr));
    }
    return preds;
}

std::vector<Matrix*> DLinearModel::parameters() {
    std::vector<Matrix*> out;
    for (DLinearUnit& u : units_) {
        out.push_back(&u.trend_w);
        out.push_back(&u.trend_b);
        out.push_back(&u.remainder_w);
        out.push_back(&u.remainder_b);
    }
    return out;
}

// ---- MlpBaseline -----------------------------------------------------------

MlpBaseline::MlpBaseline(std::size_t channels, std::size_t lookback, std::size_t horizon,
                         std::vector<std::size_t> hidden_sizes, Rng& rng)
    : channels_(channels), lookback_(lookback), horizon_(horizon),
      hidden_sizes_(std::move(hidden_sizes)) {
    std::vector<std::size_t> dims;
    dims.push_back(channels * lookback);
    for (std::size_t h : hidden_sizes_) dims.push_back(h);
    dims.push_back(channels * horizon);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::size_t in = dims[i], out = dims[i + 1];
        Matrix w(out, in);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& v : w.values()) v = rng.uniform(-bound, bound);
        weights_.push_back(std::move(w));
        biases_.emplace_back(1, out);
    }
}

std::vector<Tape::NodeId> MlpBaseline::forward_channels(Tape& tape, const Matrix& window,
                                                        bool /*training*/,
                                                        Rng* /*dropout_rng*/) const {
    check_window(window);
    Tape::NodeId x = tape.constant(reshape(window, 1, channels_ * lookback_));
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        x = tape.add_row_vector(tape.matmul(x, tape.transpose(tape.param(&weights_[i]))),
                                tape.param(&biases_[i]));
        if (i + 1 < weights_.size()) x = tape.gelu(x);
    }
    Tape::NodeId grid = tape.reshape(x, channels_, horizon_);
    // Row extraction through a selector product keeps the op set minimal.
    std::vector<Tape::NodeId> preds;
    preds.reserve(channels_);
    for (std::size_t c = 0; c < channels_; ++c) {
        Matrix selector(1, channels_);
        selector(0, c) = 1.0;
        preds.push_back(tape.matmul(tape.constant(std::move(selector)), grid));
    }
    return preds;
}

std::vector<Matrix*> MlpBaseline::parameters() {
    std::vector<Matrix*> out;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
    return out;
}

// ---- PersistenceModel ------------------------------------------------------

PersistenceModel::PersistenceModel(std::size_t channels, std::size_t lookback,
                                   std::size_t horizon)
    : channels_(channels), lookback_(lookback), horizon_(horizon) {}

std::vector<Tape::NodeId> PersistenceModel::forward_channels(Tape& tape, const Matrix& window,
                                                             bool /*training*/,
                                                             Rng* /*dropout_rng*/) const {
    check_window(window);
    std::vector<Tape::NodeId> preds;
    preds.reserve(channels_);
    for (std::size_t c = 0; c < channels_; ++c) {
        preds.push_back(tape.constant(Matrix(1, horizon_, window(c, lookback_ - 1))));
    }
    return preds;
}

// ---- checkpoint io ---------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'I', 'I', 'P', 'M', 'C', 'K', 'P', '1'};

enum class ArchTag : std::uint8_t { Mixer = 0, Mlp = 1, DLinear = 2, Persistence = 3 };

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

std::uint8_t get_u8(std::istream& in) {
    char c;
    if (!in.get(c)) throw std::runtime_error("checkpoint: truncated stream");
    return static_cast<std::uint8_t>(c);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
    char buf[8];
    if (!in.read(buf, 8)) throw std::runtime_error("checkpoint: truncated stream");
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

void put_f64(std::ostream& out, double v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

double get_f64(std::istream& in) {
    char buf[8];
    if (!in.read(buf, 8)) throw std::runtime_error("checkpoint: truncated stream");
    double v;
    std::memcpy(&v, buf, 8);
    return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_matrix(std::istream& in) {
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    Matrix m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)))) {
        throw std::runtime_error("checkpoint: truncated matrix payload");
    }
    return m;
}

void read_params_into(std::istream& in, std::vector<Matrix*> params) {
    for (Matrix* p : params) {
        Matrix loaded = get_matrix(in);
        if (!loaded.same_shape(*p)) {
            throw std::runtime_error("checkpoint: parameter shape " + shape_string(loaded) +
                                     " does not match model shape " + shape_string(*p));
        }
        *p = std::move(loaded);
    }
}

} // namespace

void MixerModel::write_binary(std::ostream& out) const {
    put_u64(out, cfg_.channels);
    put_u64(out, cfg_.lookback);
    put_u64(out, cfg_.horizon);
    put_u64(out, cfg_.patch_len);
    put_u64(out, cfg_.n_blocks);
    put_u64(out, cfg_.expansion);
    put_f64(out, cfg_.dropout);
    put_u8(out, static_cast<std::uint8_t>(cfg_.mode));
    put_u8(out, cfg_.shared_channels ? 1 : 0);
    for (const Matrix* p : static_cast<const Forecaster&>(*this).parameters()) {
        put_matrix(out, *p);
    }
}

MixerModel MixerModel::read_binary(std::istream& in) {
    MixerConfig cfg;
    cfg.channels = get_u64(in);
    cfg.lookback = get_u64(in);
    cfg.horizon = get_u64(in);
    cfg.patch_len = get_u64(in);
    cfg.n_blocks = get_u64(in);
    cfg.expansion = get_u64(in);
    cfg.dropout = get_f64(in);
    cfg.mode = static_cast<HeadMode>(get_u8(in));
    cfg.shared_channels = get_u8(in) != 0;
    Rng scratch(0);
    MixerModel model(cfg, scratch);
    read_params_into(in, model.parameters());
    return model;
}

void DLinearModel::write_binary(std::ostream& out) const {
    put_u64(out, channels_);
    put_u64(out, lookback_);
    put_u64(out, horizon_);
    put_u64(out, units_.empty() ? 1 : units_[0].ma_window);
    for (const Matrix* p : static_cast<const Forecaster&>(*this).parameters()) {
        put_matrix(out, *p);
    }
}

DLinearModel DLinearModel::read_binary(std::istream& in) {
    const std::uint64_t channels = get_u64(in);
    const std::uint64_t lookback = get_u64(in);
    const std::uint64_t horizon = get_u64(in);
    const std::uint64_t ma_window = get_u64(in);
    Rng scratch(0);
    DLinearModel model(channels, lookback, horizon, ma_window, scratch);
    read_params_into(in, model.parameters());
    return model;
}

void MlpBaseline::write_binary(std::ostream& out) const {
    put_u64(out, channels_);
    put_u64(out, lookback_);
    put_u64(out, horizon_);
    put_u64(out, hidden_sizes_.size());
    for (std::size_t h : hidden_sizes_) put_u64(out, h);
    for (const Matrix* p : static_cast<const Forecaster&>(*this).parameters()) {
        put_matrix(out, *p);
    }
}

MlpBaseline MlpBaseline::read_binary(std::istream& in) {
    const std::uint64_t channels = get_u64(in);
    const std::uint64_t lookback = get_u64(in);
    const std::uint64_t horizon = get_u64(in);
    const std::uint64_t n_hidden = get_u64(in);
    std::vector<std::size_t> hidden(n_hidden);
    for (std::size_t i = 0; i < n_hidden; ++i) hidden[i] = get_u64(in);
    Rng scratch(0);
    MlpBaseline model(channels, lookback, horizon, std::move(hidden), scratch);
    read_params_into(in, model.parameters());
    return model;
}

void save_checkpoint(const Forecaster& model, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    const std::string_view arch = model.arch();
    if (arch == "iip_mixer") {
        put_u8(out, static_cast<std::uint8_t>(ArchTag::Mixer));
        static_cast<const MixerModel&>(model).write_binary(out);
    } else if (arch == "mlp") {
        put_u8(out, static_cast<std::uint8_t>(ArchTag::Mlp));
        static_cast<const MlpBaseline&>(model).write_binary(out);
    } else if (arch == "dlinear") {
        put_u8(out, static_cast<std::uint8_t>(ArchTag::DLinear));
        static_cast<const DLinearModel&>(model).write_binary(out);
    } else if (arch == "persistence") {
        put_u8(out, static_cast<std::uint8_t>(ArchTag::Persistence));
        put_u64(out, model.channels());
        put_u64(out, model.lookback());
        put_u64(out, model.horizon());
    } else {
        throw std::invalid_argument("save_checkpoint: unknown arch '" + std::string(arch) + "'");
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

void save_checkpoint(const Forecaster& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
    save_checkpoint(model, out);
}

std::unique_ptr<Forecaster> load_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic");
    }
    switch (static_cast<ArchTag>(get_u8(in))) {
        case ArchTag::Mixer:
            return std::make_unique<MixerModel>(MixerModel::read_binary(in));
        case ArchTag::Mlp:
            return std::make_unique<MlpBaseline>(MlpBaseline::read_binary(in));
        case ArchTag::DLinear:
            return std::make_unique<DLinearModel>(DLinearModel::read_binary(in));
        case ArchTag::Persistence: {
            const std::uint64_t c = get_u64(in);
            const std::uint64_t l = get_u64(in);
            const std::uint64_t n = get_u64(in);
            return std::make_unique<PersistenceModel>(c, l, n);
        }
    }
    throw std::runtime_error("load_checkpoint: unknown architecture tag");
}

std::unique_ptr<Forecaster> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
    return load_checkpoint(in);
}

} // namespace iipm
