#pragma once

#include "iipmixer/matrix.hpp"
#include "iipmixer/rng.hpp"
#include "iipmixer/tape.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace iipm {

//! Exact-erf GELU: x * Phi(x) with Phi the standard normal CDF.
double gelu(double x);
//! d/dx of gelu: Phi(x) + x * phi(x).
double gelu_derivative(double x);
Matrix gelu(const Matrix& x);

//! Two-layer perceptron with a GELU between the layers. For mixing use the
//! output size equals the input size and the hidden size is
//! expansion * input.
struct Mlp2 {
    Matrix w_in;   // hidden x in
    Matrix b_in;   // 1 x hidden
    Matrix w_out;  // out x hidden
    Matrix b_out;  // 1 x out

    std::size_t in() const { return w_in.cols(); }
    std::size_t hidden() const { return w_in.rows(); }
    std::size_t out() const { return w_out.rows(); }

    //! Uniform init in +/- 1/sqrt(fan_in); biases zero.
    static Mlp2 make(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

//! Which axis of the input a mixing MLP runs along. Cols treats every row as
//! one vector of length `in`; Rows mixes down the columns instead
//! (equivalent to transpose -> mix cols -> transpose).
enum class MixAxis { Rows, Cols };

//! Records the MLP application on the tape. Output shape equals input shape;
//! the un-mixed axis is processed independently with shared parameters.
//! Dropout (inverted, optional) is applied after the hidden activation and
//! after the output, matching the training-time placement.
Tape::NodeId mlp2_forward(Tape& tape, const Mlp2& m, Tape::NodeId x, MixAxis axis,
                          double dropout_rate = 0.0, Rng* dropout_rng = nullptr);

//! Inference-path convenience: runs the tape version on a scratch tape.
Matrix mlp2_forward(const Mlp2& m, const Matrix& x, MixAxis axis);

//! Raised when a training step sees a non-finite loss or gradient.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

//! Plain SGD, no momentum. A zero rate is a well-defined no-op step;
//! negative rates are rejected.
struct SgdState {
    double learning_rate;
    explicit SgdState(double lr) : learning_rate(lr) {
        if (lr < 0.0) throw std::invalid_argument("SgdState: learning_rate must be >= 0");
    }
};

//! p <- p - lr * g, elementwise. Non-finite gradients abort the run.
void sgd_step(const SgdState& state, std::span<Matrix* const> params,
              std::span<const Matrix> grads);

//! Optional Adam mode; not used by default runs.
class AdamState {
public:
    AdamState(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Matrix> m_, v_;
};

//! Central-difference gradient check.
//!
//! `loss` evaluates the scalar objective at the current parameter values
//! (deterministic: dropout must be disabled). `analytic_grads` computes the
//! tape gradients, aligned with `params`. Every parameter entry is perturbed
//! by +/- eps and the worst relative error
//!     |analytic - numeric| / max(1, |analytic|, |numeric|)
//! is returned. eps must lie in [1e-7, 1e-4].
double grad_check(std::span<Matrix* const> params,
                  const std::function<double()>& loss,
                  const std::function<std::vector<Matrix>()>& analytic_grads,
                  double eps);

} // namespace iipm
