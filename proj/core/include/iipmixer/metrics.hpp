#pragma once

#include "iipmixer/matrix.hpp"
#include "iipmixer/model.hpp"
#include "iipmixer/tape.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iipm {

//! Per-channel loss weights. Negative entries are rejected and the vector is
//! normalized to sum to 1 at construction, so reported losses stay
//! comparable across weight sources.
class FeatureWeights {
public:
    explicit FeatureWeights(std::vector<double> raw);
    static FeatureWeights uniform(std::size_t channels);

    std::size_t size() const { return alpha_.size(); }
    std::span<const double> alpha() const { return alpha_; }
    double operator[](std::size_t i) const { return alpha_[i]; }

private:
    std::vector<double> alpha_;
};

//! sum_i alpha_i * (1/N) * sum_j (pred_ij - truth_ij)^2
double wmse_loss(const Matrix& pred, const Matrix& truth, const FeatureWeights& weights);

//! Tape version built from the primitive op set; channel_preds are 1xN
//! nodes, truth is C x N. Returns a 1x1 loss node.
Tape::NodeId wmse_loss_node(Tape& tape, std::span<const Tape::NodeId> channel_preds,
                            const Matrix& truth, const FeatureWeights& weights);

struct RegressionMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape_pct;  // absent when a truth entry is zero
};

RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> truth);

//! |rul_pred - rul_true| / rul_true * 100. rul_true must be > 0.
double are_metric(double rul_pred, double rul_true);

//! Index of the first cycle whose capacity falls below
//! threshold_frac * initial; nullopt if the series never crosses.
std::optional<std::size_t> rul_from_capacity(std::span<const double> capacity, double initial,
                                             double threshold_frac = 0.8);

//! Recursive multi-step forecast: predict N steps, slide the window forward
//! over the predictions, repeat. Returns C x steps; dropout stays disabled.
Matrix rollout_forecast(const Forecaster& model, const Matrix& window, std::size_t steps);

//! One evaluation row in the Table-2 shape.
struct EvalRow {
    std::string method;
    double mae_ah = 0.0;
    double rmse_ah = 0.0;
    std::optional<double> mape_pct;
    std::optional<double> are_pct;
    std::optional<double> rul_true;
    std::optional<double> rul_pred;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    //! CSV with header method,mae_ah,rmse_ah,mape_pct,are_pct,rul_true,rul_pred
    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
    //! Fixed-width table like "IIP-Mixer 0.037 0.048 2.480 1.370".
    std::string to_table() const;
};

std::string display_method_name(std::string_view method);

} // namespace iipm
