#include "iipmixer/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace iipm {

FeatureWeights::FeatureWeights(std::vector<double> raw) : alpha_(std::move(raw)) {
    if (alpha_.empty()) throw std::invalid_argument("FeatureWeights: empty weight vector");
    double sum = 0.0;
    for (double v : alpha_) {
        if (v < 0.0 || !std::isfinite(v)) {
            throw std::invalid_argument("FeatureWeights: weights must be finite and >= 0");
        }
        sum += v;
    }
    if (sum <= 0.0) throw std::invalid_argument("FeatureWeights: weights sum to zero");
    for (double& v : alpha_) v /= sum;
}

FeatureWeights FeatureWeights::uniform(std::size_t channels) {
    return FeatureWeights(std::vector<double>(channels, 1.0));
}

double wmse_loss(const Matrix& pred, const Matrix& truth, const FeatureWeights& weights) {
    if (!pred.same_shape(truth)) {
        throw std::invalid_argument("wmse_loss: pred " + shape_string(pred) + " vs truth " +
                                    shape_string(truth));
    }
    if (weights.size() != pred.rows()) {
        throw std::invalid_argument("wmse_loss: " + std::to_string(weights.size()) +
                                    " weights for " + std::to_string(pred.rows()) + " channels");
    }
    const double inv_n = 1.0 / static_cast<double>(pred.cols());
    double loss = 0.0;
    for (std::size_t c = 0; c < pred.rows(); ++c) {
        double channel = 0.0;
        for (std::size_t j = 0; j < pred.cols(); ++j) {
            const double d = pred(c, j) - truth(c, j);
            channel += d * d;
        }
        loss += weights[c] * channel * inv_n;
    }
    return loss;
}

Tape::NodeId wmse_loss_node(Tape& tape, std::span<const Tape::NodeId> channel_preds,
                            const Matrix& truth, const FeatureWeights& weights) {
    if (channel_preds.size() != truth.rows() || channel_preds.size() != weights.size()) {
        throw std::invalid_argument("wmse_loss_node: channel count mismatch");
    }
    const std::size_t horizon = truth.cols();
    const Matrix ones_col(horizon, 1, 1.0);
    Tape::NodeId ones = tape.constant(ones_col);
    Tape::NodeId total = -1;
    for (std::size_t c = 0; c < channel_preds.size(); ++c) {
        const auto row = truth.row(c);
        Tape::NodeId t =
            tape.constant(Matrix(1, horizon, std::vector<double>(row.begin(), row.end())));
        Tape::NodeId diff = tape.sub(channel_preds[c], t);
        Tape::NodeId sq = tape.hadamard(diff, diff);
        Tape::NodeId sum = tape.matmul(sq, ones);  // 1x1
        Tape::NodeId weighted = tape.scale(sum, weights[c] / static_cast<double>(horizon));
        total = (total < 0) ? weighted : tape.add(total, weighted);
    }
    return total;
}

RegressionMetrics regression_metrics(std::span<const double> pred,
                                     std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw std::invalid_argument("regression_metrics: need equal-length non-empty vectors");
    }
    RegressionMetrics m;
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    bool mape_defined = true;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
        if (truth[i] == 0.0) {
            mape_defined = false;
        } else {
            pct_sum += std::abs(d / truth[i]);
        }
    }
    const double n = static_cast<double>(pred.size());
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    if (mape_defined) m.mape_pct = pct_sum / n * 100.0;
    return m;
}

double are_metric(double rul_pred, double rul_true) {
    if (!(rul_true > 0.0)) {
        throw std::invalid_argument("are_metric: rul_true must be > 0, got " +
                                    std::to_string(rul_true));
    }
    return std::abs(rul_pred - rul_true) / rul_true * 100.0;
}

std::optional<std::size_t> rul_from_capacity(std::span<const double> capacity, double initial,
                                             double threshold_frac) {
    if (capacity.empty()) throw std::invalid_argument("rul_from_capacity: empty capacity series");
    if (!(initial > 0.0)) throw std::invalid_argument("rul_from_capacity: initial must be > 0");
    if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
        throw std::invalid_argument("rul_from_capacity: threshold_frac must lie in (0, 1)");
    }
    const double threshold = threshold_frac * initial;
    for (std::size_t i = 0; i < capacity.size(); ++i) {
        if (capacity[i] < threshold) return i;
    }
    return std::nullopt;
}

Matrix rollout_forecast(const Forecaster& model, const Matrix& window, std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("rollout_forecast: steps must be >= 1");
    const std::size_t c = model.channels();
    const std::size_t l = model.lookback();
    const std::size_t n = model.horizon();

    Matrix current = window;
    Matrix out(c, steps);
    std::size_t produced = 0;
    while (produced < steps) {
        const Matrix pred = model.predict(current);  // C x N
        const std::size_t take = std::min(n, steps - produced);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t j = 0; j < take; ++j) out(ch, produced + j) = pred(ch, j);
        }
        produced += take;
        // Slide the window forward over the freshly predicted steps.
        Matrix next(c, l);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t j = 0; j < l; ++j) {
                const std::size_t src = j + n;
                next(ch, j) = (src < l) ? current(ch, src) : pred(ch, src - l);
            }
        }
        current = std::move(next);
    }
    return out;
}

namespace {
std::string opt_cell(const std::optional<double>& v) { return v ? double_repr(*v) : ""; }
} // namespace

void EvalReport::write_csv(std::ostream& out) const {
    out << "method,mae_ah,rmse_ah,mape_pct,are_pct,rul_true,rul_pred\n";
    for (const EvalRow& r : rows) {
        out << r.method << ',' << double_repr(r.mae_ah) << ',' << double_repr(r.rmse_ah) << ','
            << opt_cell(r.mape_pct) << ',' << opt_cell(r.are_pct) << ','
            << opt_cell(r.rul_true) << ',' << opt_cell(r.rul_pred) << '\n';
    }
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

std::string display_method_name(std::string_view method) {
    if (method == "iip_mixer") return "IIP-Mixer";
    if (method == "mlp") return "MLP";
    if (method == "dlinear") return "DLinear";
    if (method == "persistence") return "Persistence";
    return std::string(method);
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(28) << "Method" << std::right << std::setw(9) << "MAE(Ah)"
       << std::setw(9) << "RMSE(Ah)" << std::setw(9) << "MAPE(%)" << std::setw(9) << "ARE(%)"
       << '\n';
    for (const EvalRow& r : rows) {
        os << std::left << std::setw(28) << display_method_name(r.method) << std::right
           << std::fixed << std::setprecision(3) << std::setw(9) << r.mae_ah << std::setw(9)
           << r.rmse_ah;
        if (r.mape_pct) {
            os << std::setw(9) << *r.mape_pct;
        } else {
            os << std::setw(9) << "-";
        }
        if (r.are_pct) {
            os << std::setw(9) << *r.are_pct;
        } else {
            os << std::setw(9) << "-";
        }
        os << std::defaultfloat << '\n';
    }
    return os.str();
}

} // namespace iipm
