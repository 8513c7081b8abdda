#pragma once

#include "iipmixer/matrix.hpp"
#include "iipmixer/nn.hpp"
#include "iipmixer/patching.hpp"
#include "iipmixer/rng.hpp"
#include "iipmixer/tape.hpp"

#include <iosfwd>
#include <memory>
#include <string_view>
#include <utility>
#include <vector>

namespace iipm {

//! How the two mixing heads of a block combine.
//!   Parallel         out = O_intra + O_inter^T + x
//!   SerialIntraFirst out = inter(intra(x)) + x
//!   SerialInterFirst out = intra(inter(x)) + x
//!   IntraOnly        out = O_intra + x
//!   InterOnly        out = O_inter^T + x
//! Serial modes keep a single skip connection from the block input, added
//! after the second head.
enum class HeadMode { Parallel, SerialIntraFirst, SerialInterFirst, IntraOnly, InterOnly };

std::string_view to_string(HeadMode mode);
HeadMode head_mode_from_string(std::string_view name);

struct MixerConfig {
    std::size_t channels = 1;
    std::size_t lookback = 16;  // L
    std::size_t horizon = 1;    // N
    std::size_t patch_len = 4;  // W
    std::size_t n_blocks = 2;
    std::size_t expansion = 2;  // hidden = expansion * mixed axis length
    double dropout = 0.0;
    HeadMode mode = HeadMode::Parallel;
    bool shared_channels = false;

    std::size_t patch_count() const { return lookback / patch_len; } // H
    void validate() const;
};

//! Exact trainable-parameter counts from the architecture formula.
struct ParamCount {
    std::size_t mixing_weights = 0;
    std::size_t mixing_biases = 0;
    std::size_t projection_weights = 0;
    std::size_t projection_biases = 0;

    std::size_t mixing() const { return mixing_weights + mixing_biases; }
    std::size_t total() const {
        return mixing_weights + mixing_biases + projection_weights + projection_biases;
    }
};

ParamCount mixer_param_count(const MixerConfig& cfg);

//! One intra/inter mixing pair.
struct MixerBlock {
    Mlp2 intra;  // mixes the within-patch axis, in == W
    Mlp2 inter;  // mixes the across-patch axis, in == H
    HeadMode mode = HeadMode::Parallel;
};

//! Records one block on the tape. x must be an H x W node with
//! W == block.intra.in and H == block.inter.in.
Tape::NodeId mixer_block_forward(Tape& tape, const MixerBlock& block, Tape::NodeId x,
                                 double dropout_rate = 0.0, Rng* dropout_rng = nullptr);

//! Convenience wrapper over a scratch tape (dropout disabled).
Matrix mixer_block_forward(const MixerBlock& block, const Matrix& x);

//! A multivariate one-shot forecaster: window (C x L) -> prediction (C x N),
//! channel i of the output depending only on channel i of the input.
//! Training mutates one instance on one thread; once parameters stop
//! changing, predict() is safe to call from any number of threads.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual std::size_t channels() const = 0;
    virtual std::size_t lookback() const = 0;
    virtual std::size_t horizon() const = 0;
    virtual std::string_view arch() const = 0;

    //! Records the forward pass and returns one 1xN prediction node per
    //! channel. `training` enables dropout where the architecture has any.
    virtual std::vector<Tape::NodeId> forward_channels(Tape& tape, const Matrix& window,
                                                       bool training, Rng* dropout_rng) const = 0;

    virtual std::vector<Matrix*> parameters() = 0;
    std::vector<const Matrix*> parameters() const;

    //! C x N prediction with dropout disabled.
    Matrix predict(const Matrix& window) const;

    std::size_t parameter_count() const;

protected:
    void check_window(const Matrix& window) const;
};

//! Full forward pass of a forecaster on an existing tape, with the assembled
//! C x N prediction alongside the per-channel nodes.
struct ModelForward {
    std::vector<Tape::NodeId> channel_preds;
    Matrix prediction;
};

ModelForward model_forward(Tape& tape, const Forecaster& model, const Matrix& window,
                           bool training = false, Rng* dropout_rng = nullptr);

//! The patch-mixing forecaster: per channel, reshape to patches, run
//! n_blocks mixer blocks, flatten, project L -> N with a skip-preserving
//! residual inside every block.
class MixerModel final : public Forecaster {
public:
    MixerModel(MixerConfig cfg, Rng& rng);

    std::size_t channels() const override { return cfg_.channels; }
    std::size_t lookback() const override { return cfg_.lookback; }
    std::size_t horizon() const override { return cfg_.horizon; }
    std::string_view arch() const override { return "iip_mixer"; }

    std::vector<Tape::NodeId> forward_channels(Tape& tape, const Matrix& window, bool training,
                                               Rng* dropout_rng) const override;
    using Forecaster::parameters;
    std::vector<Matrix*> parameters() override;

    //! Forward of one channel series (1 x L node).
    Tape::NodeId forward_channel(Tape& tape, std::size_t channel, Tape::NodeId series,
                                 bool training, Rng* dropout_rng) const;

    const MixerConfig& config() const { return cfg_; }

    //! Counts by walking the actual parameter matrices.
    std::size_t enumerated_mixing_weight_count() const;
    std::size_t enumerated_mixing_param_count() const;

    void write_binary(std::ostream& out) const;
    static MixerModel read_binary(std::istream& in);

private:
    struct ChannelParams {
        std::vector<MixerBlock> blocks;
        Matrix w_proj;  // N x L
        Matrix b_proj;  // 1 x N
    };

    MixerModel(MixerConfig cfg, std::vector<ChannelParams> params);
    const ChannelParams& channel_params(std::size_t channel) const;

    MixerConfig cfg_;
    std::vector<ChannelParams> params_;  // one entry per channel, or one when shared
};

// ---- DLinear baseline ------------------------------------------------------

//! Centered moving average with edge-replicated padding; window must be odd
//! and <= the series length.
std::vector<double> moving_average_trend(std::span<const double> x, std::size_t window);

//! Splits a series into (trend, remainder) with remainder = x - trend, so
//! the two components add back to the input exactly.
std::pair<std::vector<double>, std::vector<double>> decompose_series(std::span<const double> x,
                                                                     std::size_t window);

//! One univariate DLinear head: two N x L linear maps over the trend and
//! remainder components.
struct DLinearUnit {
    Matrix trend_w;      // N x L
    Matrix trend_b;      // 1 x N
    Matrix remainder_w;  // N x L
    Matrix remainder_b;  // 1 x N
    std::size_t ma_window = 25;

    static DLinearUnit make(std::size_t lookback, std::size_t horizon, std::size_t ma_window,
                            Rng& rng);
};

std::vector<double> dlinear_forward(const DLinearUnit& unit, std::span<const double> series);

//! Largest odd window <= min(requested, len).
std::size_t clip_ma_window(std::size_t requested, std::size_t len);

class DLinearModel final : public Forecaster {
public:
    DLinearModel(std::size_t channels, std::size_t lookback, std::size_t horizon,
                 std::size_t ma_window, Rng& rng);

    std::size_t channels() const override { return channels_; }
    std::size_t lookback() const override { return lookback_; }
    std::size_t horizon() const override { return horizon_; }
    std::string_view arch() const override { return "dlinear"; }

    std::vector<Tape::NodeId> forward_channels(Tape& tape, const Matrix& window, bool training,
                                               Rng* dropout_rng) const override;
    using Forecaster::parameters;
    std::vector<Matrix*> parameters() override;

    const DLinearUnit& unit(std::size_t channel) const { return units_[channel]; }

    void write_binary(std::ostream& out) const;
    static DLinearModel read_binary(std::istream& in);

private:
    std::size_t channels_, lookback_, horizon_;
    std::vector<DLinearUnit> units_;
};

// ---- dense MLP baseline ----------------------------------------------------

//! Flattens the whole C x L window and maps it through dense layers with a
//! GELU between them (none after the last), reshaping to C x N. Unlike the
//! mixer this couples channels by construction.
class MlpBaseline final : public Forecaster {
public:
    MlpBaseline(std::size_t channels, std::size_t lookback, std::size_t horizon,
                std::vector<std::size_t> hidden_sizes, Rng& rng);

    std::size_t channels() const override { return channels_; }
    std::size_t lookback() const override { return lookback_; }
    std::size_t horizon() const override { return horizon_; }
    std::string_view arch() const override { return "mlp"; }

    std::vector<Tape::NodeId> forward_channels(Tape& tape, const Matrix& window, bool training,
                                               Rng* dropout_rng) const override;
    using Forecaster::parameters;
    std::vector<Matrix*> parameters() override;

    std::size_t layer_count() const { return weights_.size(); }
    Matrix& layer_weight(std::size_t i) { return weights_[i]; }
    Matrix& layer_bias(std::size_t i) { return biases_[i]; }

    void write_binary(std::ostream& out) const;
    static MlpBaseline read_binary(std::istream& in);

private:
    std::size_t channels_, lookback_, horizon_;
    std::vector<std::size_t> hidden_sizes_;
    std::vector<Matrix> weights_;  // layer i: out_i x in_i
    std::vector<Matrix> biases_;   // layer i: 1 x out_i
};

// ---- persistence -----------------------------------------------------------

//! Repeats the last observed value of each channel; the naive oracle for
//! degradation series.
class PersistenceModel final : public Forecaster {
public:
    PersistenceModel(std::size_t channels, std::size_t lookback, std::size_t horizon);

    std::size_t channels() const override { return channels_; }
    std::size_t lookback() const override { return lookback_; }
    std::size_t horizon() const override { return horizon_; }
    std::string_view arch() const override { return "persistence"; }

    std::vector<Tape::NodeId> forward_channels(Tape& tape, const Matrix& window, bool training,
                                               Rng* dropout_rng) const override;
    using Forecaster::parameters;
    std::vector<Matrix*> parameters() override { return {}; }

private:
    std::size_t channels_, lookback_, horizon_;
};

// ---- checkpoints -----------------------------------------------------------

//! Flat binary checkpoint: magic, arch tag, architecture config, then every
//! parameter matrix in the fixed parameters() order. save -> load -> forward
//! is bitwise-identical to the pre-save forward.
void save_checkpoint(const Forecaster& model, std::ostream& out);
void save_checkpoint(const Forecaster& model, const std::string& path);
std::unique_ptr<Forecaster> load_checkpoint(std::istream& in);
std::unique_ptr<Forecaster> load_checkpoint(const std::string& path);

} // namespace iipm
