#include "iipmixer/nn.hpp"

#include <cmath>
#include <string>

namespace iipm {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
} // namespace

double gelu(double x) { return x * normal_cdf(x); }

double gelu_derivative(double x) { return normal_cdf(x) + x * normal_pdf(x); }

Matrix gelu(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.values()) v = gelu(v);
    return out;
}

Mlp2 Mlp2::make(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
    Mlp2 m;
    m.w_in = Matrix(hidden, in);
    m.b_in = Matrix(1, hidden);
    m.w_out = Matrix(out, hidden);
    m.b_out = Matrix(1, out);
    const double bound_in = 1.0 / std::sqrt(static_cast<double>(in));
    const double bound_out = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& v : m.w_in.values()) v = rng.uniform(-bound_in, bound_in);
    for (double& v : m.w_out.values()) v = rng.uniform(-bound_out, bound_out);
    return m;
}

std::vector<Matrix*> Mlp2::parameters() { return {&w_in, &b_in, &w_out, &b_out}; }

std::vector<const Matrix*> Mlp2::parameters() const { return {&w_in, &b_in, &w_out, &b_out}; }

Tape::NodeId mlp2_forward(Tape& tape, const Mlp2& m, Tape::NodeId x, MixAxis axis,
                          double dropout_rate, Rng* dropout_rng) {
    const Matrix& xv = tape.value(x);
    const std::size_t mixed = (axis == MixAxis::Cols) ? xv.cols() : xv.rows();
    if (mixed != m.in()) {
        throw std::invalid_argument("mlp2_forward: mixed axis length " + std::to_string(mixed) +
                                    " does not match MLP input size " + std::to_string(m.in()) +
                                    " (input " + shape_string(xv) + ")");
    }

    Tape::NodeId cur = (axis == MixAxis::Rows) ? tape.transpose(x) : x;

    const Tape::NodeId w_in = tape.param(&m.w_in);
    const Tape::NodeId b_in = tape.param(&m.b_in);
    const Tape::NodeId w_out = tape.param(&m.w_out);
    const Tape::NodeId b_out = tape.param(&m.b_out);

    Tape::NodeId h = tape.gelu(tape.add_row_vector(tape.matmul(cur, tape.transpose(w_in)), b_in));
    if (dropout_rate > 0.0 && dropout_rng != nullptr) {
        h = tape.dropout(h, dropout_rate, *dropout_rng);
    }
    Tape::NodeId y = tape.add_row_vector(tape.matmul(h, tape.transpose(w_out)), b_out);
    if (dropout_rate > 0.0 && dropout_rng != nullptr) {
        y = tape.dropout(y, dropout_rate, *dropout_rng);
    }

    return (axis == MixAxis::Rows) ? tape.transpose(y) : y;
}

Matrix mlp2_forward(const Mlp2& m, const Matrix& x, MixAxis axis) {
    Tape tape;
    const Tape::NodeId id = mlp2_forward(tape, m, tape.constant(x), axis);
    return tape.value(id);
}

void sgd_step(const SgdState& state, std::span<Matrix* const> params,
              std::span<const Matrix> grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("sgd_step: " + std::to_string(params.size()) +
                                    " params vs " + std::to_string(grads.size()) + " grads");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& par = *params[p];
        const Matrix& g = grads[p];
        if (!par.same_shape(g)) {
            throw std::invalid_argument("sgd_step: param " + std::to_string(p) + " is " +
                                        shape_string(par) + " but grad is " + shape_string(g));
        }
        if (!g.all_finite()) {
            throw TrainingDiverged("sgd_step: non-finite gradient in parameter " +
                                   std::to_string(p));
        }
        for (std::size_t i = 0; i < par.size(); ++i) {
            par.data()[i] -= state.learning_rate * g.data()[i];
        }
    }
}

AdamState::AdamState(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(lr > 0.0)) throw std::invalid_argument("AdamState: learning_rate must be > 0");
}

void AdamState::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("AdamState::step: param/grad count mismatch");
    }
    if (m_.empty()) {
        for (std::size_t p = 0; p < params.size(); ++p) {
            m_.emplace_back(params[p]->rows(), params[p]->cols());
            v_.emplace_back(params[p]->rows(), params[p]->cols());
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& par = *params[p];
        const Matrix& g = grads[p];
        if (!g.all_finite()) {
            throw TrainingDiverged("AdamState::step: non-finite gradient in parameter " +
                                   std::to_string(p));
        }
        for (std::size_t i = 0; i < par.size(); ++i) {
            double& m = m_[p].data()[i];
            double& v = v_[p].data()[i];
            const double gi = g.data()[i];
            m = beta1_ * m + (1.0 - beta1_) * gi;
            v = beta2_ * v + (1.0 - beta2_) * gi * gi;
            par.data()[i] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
        }
    }
}

double grad_check(std::span<Matrix* const> params,
                  const std::function<double()>& loss,
                  const std::function<std::vector<Matrix>()>& analytic_grads,
                  double eps) {
    if (eps < 1e-7 || eps > 1e-4) {
        throw std::invalid_argument("grad_check: eps " + std::to_string(eps) +
                                    " outside [1e-7, 1e-4]");
    }
    const std::vector<Matrix> analytic = analytic_grads();
    if (analytic.size() != params.size()) {
        throw std::invalid_argument("grad_check: analytic grads misaligned with params");
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& par = *params[p];
        for (std::size_t i = 0; i < par.size(); ++i) {
            const double saved = par.data()[i];
            par.data()[i] = saved + eps;
            const double up = loss();
            par.data()[i] = saved - eps;
            const double down = loss();
            par.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[p].data()[i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

} // namespace iipm
