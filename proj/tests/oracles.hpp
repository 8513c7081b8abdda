// Test-only reference implementations. Everything here is written as plain
// scalar loops over std::vector so the oracles share no code path with the
// library kernels they check.
#pragma once

#include "iipmixer/model.hpp"

#include <cmath>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline Grid from_matrix(const iipm::Matrix& m) {
    Grid g(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
    return g;
}

inline double max_abs_diff(const Grid& a, const iipm::Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j)
            worst = std::max(worst, std::abs(a[i][j] - b(i, j)));
    return worst;
}

// Two-layer MLP applied to one vector: w_out * gelu(w_in * v + b_in) + b_out.
inline std::vector<double> mlp2_vector(const iipm::Mlp2& m, const std::vector<double>& v) {
    const std::size_t hidden = m.w_in.rows();
    const std::size_t out = m.w_out.rows();
    std::vector<double> h(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        double acc = m.b_in(0, r);
        for (std::size_t c = 0; c < v.size(); ++c) acc += m.w_in(r, c) * v[c];
        h[r] = gelu(acc);
    }
    std::vector<double> y(out);
    for (std::size_t r = 0; r < out; ++r) {
        double acc = m.b_out(0, r);
        for (std::size_t c = 0; c < hidden; ++c) acc += m.w_out(r, c) * h[c];
        y[r] = acc;
    }
    return y;
}

// Mixes each row of g (the within-patch axis).
inline Grid mix_rows_of_grid(const iipm::Mlp2& m, const Grid& g) {
    Grid out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = mlp2_vector(m, g[i]);
    return out;
}

// Mixes each column of g (the across-patch axis), writing columns back.
inline Grid mix_cols_of_grid(const iipm::Mlp2& m, const Grid& g) {
    const std::size_t rows = g.size();
    const std::size_t cols = g[0].size();
    Grid out(rows, std::vector<double>(cols));
    for (std::size_t j = 0; j < cols; ++j) {
        std::vector<double> column(rows);
        for (std::size_t i = 0; i < rows; ++i) column[i] = g[i][j];
        const std::vector<double> mixed = mlp2_vector(m, column);
        for (std::size_t i = 0; i < rows; ++i) out[i][j] = mixed[i];
    }
    return out;
}

inline Grid add_grids(const Grid& a, const Grid& b) {
    Grid out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
    return out;
}

inline Grid mixer_block(const iipm::MixerBlock& block, const Grid& x) {
    using iipm::HeadMode;
    switch (block.mode) {
        case HeadMode::Parallel:
            return add_grids(add_grids(mix_rows_of_grid(block.intra, x),
                                       mix_cols_of_grid(block.inter, x)),
                             x);
        case HeadMode::IntraOnly:
            return add_grids(mix_rows_of_grid(block.intra, x), x);
        case HeadMode::InterOnly:
            return add_grids(mix_cols_of_grid(block.inter, x), x);
        case HeadMode::SerialIntraFirst:
            return add_grids(mix_cols_of_grid(block.inter, mix_rows_of_grid(block.intra, x)),
                             x);
        case HeadMode::SerialInterFirst:
            return add_grids(mix_rows_of_grid(block.intra, mix_cols_of_grid(block.inter, x)),
                             x);
    }
    return x;
}

// One channel of the full model: series -> patches -> blocks -> flatten ->
// linear projection. `blocks` and the projection come straight from the
// model's parameter matrices.
inline std::vector<double> mixer_channel(const std::vector<iipm::MixerBlock>& blocks,
                                         const iipm::Matrix& w_proj, const iipm::Matrix& b_proj,
                                         const std::vector<double>& series, std::size_t w) {
    const std::size_t len = series.size();
    const std::size_t h = len / w;
    Grid g(h, std::vector<double>(w));
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) g[i][j] = series[i * w + j];
    for (const iipm::MixerBlock& block : blocks) g = mixer_block(block, g);
    std::vector<double> flat(len);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) flat[i * w + j] = g[i][j];
    std::vector<double> y(w_proj.rows());
    for (std::size_t n = 0; n < w_proj.rows(); ++n) {
        double acc = b_proj(0, n);
        for (std::size_t l = 0; l < len; ++l) acc += w_proj(n, l) * flat[l];
        y[n] = acc;
    }
    return y;
}

// Dense stack with GELU between layers, for the MLP baseline.
inline std::vector<double> dense_stack(const std::vector<const iipm::Matrix*>& weights,
                                       const std::vector<const iipm::Matrix*>& biases,
                                       std::vector<double> x) {
    for (std::size_t layer = 0; layer < weights.size(); ++layer) {
        const iipm::Matrix& w = *weights[layer];
        const iipm::Matrix& b = *biases[layer];
        std::vector<double> next(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double acc = b(0, r);
            for (std::size_t c = 0; c < x.size(); ++c) acc += w(r, c) * x[c];
            next[r] = acc;
        }
        if (layer + 1 < weights.size()) {
            for (double& v : next) v = gelu(v);
        }
        x = std::move(next);
    }
    return x;
}

inline iipm::Matrix random_matrix(std::size_t rows, std::size_t cols, iipm::Rng& rng,
                                  double lo = -0.5, double hi = 0.5) {
    iipm::Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

inline iipm::Mlp2 random_mlp2(std::size_t in, std::size_t hidden, iipm::Rng& rng) {
    iipm::Mlp2 m;
    m.w_in = random_matrix(hidden, in, rng);
    m.b_in = random_matrix(1, hidden, rng);
    m.w_out = random_matrix(in, hidden, rng);
    m.b_out = random_matrix(1, in, rng);
    return m;
}

inline iipm::MixerBlock random_block(std::size_t h, std::size_t w, iipm::HeadMode mode,
                                     iipm::Rng& rng) {
    iipm::MixerBlock b;
    b.intra = random_mlp2(w, 2 * w, rng);
    b.inter = random_mlp2(h, 2 * h, rng);
    b.mode = mode;
    return b;
}

} // namespace oracle
