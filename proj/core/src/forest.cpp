#include "iipmixer/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iipm {

namespace {

struct SplitCandidate {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

struct Builder {
    const Matrix& x;
    std::span<const double> y;
    const ForestConfig& cfg;
    Rng& rng;
    std::span<double> impurity;
    std::vector<DecisionTree::Node>& nodes;
    std::size_t mtry;

    // Scratch reused across nodes.
    std::vector<std::size_t> feature_pool;
    std::vector<std::pair<double, double>> sorted;  // (feature value, target)

    double node_sse(std::span<const std::size_t> idx, double& mean_out) const {
        double sum = 0.0;
        for (std::size_t i : idx) sum += y[i];
        const double mean = sum / static_cast<double>(idx.size());
        double sse = 0.0;
        for (std::size_t i : idx) {
            const double d = y[i] - mean;
            sse += d * d;
        }
        mean_out = mean;
        return sse;
    }

    // Gain of a (feature, threshold) split with sums accumulated in node
    // sample order. Distinct features inducing the same partition then score
    // bitwise-equal, which keeps importances permutation-consistent.
    double canonical_gain(std::span<const std::size_t> idx, double parent_sse,
                          std::size_t feature, double threshold) const {
        double left_sum = 0.0, right_sum = 0.0;
        std::size_t nl = 0, nr = 0;
        for (std::size_t i : idx) {
            if (x(i, feature) <= threshold) {
                left_sum += y[i];
                ++nl;
            } else {
                right_sum += y[i];
                ++nr;
            }
        }
        if (nl == 0 || nr == 0) return 0.0;
        const double lmean = left_sum / static_cast<double>(nl);
        const double rmean = right_sum / static_cast<double>(nr);
        double sse = 0.0;
        for (std::size_t i : idx) {
            const double d = y[i] - (x(i, feature) <= threshold ? lmean : rmean);
            sse += d * d;
        }
        return parent_sse - sse;
    }

    SplitCandidate best_split(std::span<const std::size_t> idx, double parent_sse) {
        SplitCandidate best;
        const std::size_t c = x.cols();

        feature_pool.resize(c);
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        std::size_t candidates = c;
        if (mtry < c) {
            // Partial Fisher-Yates: the first mtry entries become the draw.
            for (std::size_t i = 0; i < mtry; ++i) {
                const std::size_t j = i + rng.uniform_index(c - i);
                std::swap(feature_pool[i], feature_pool[j]);
            }
            candidates = mtry;
            std::sort(feature_pool.begin(), feature_pool.begin() + candidates);
        }

        double total = 0.0;
        for (std::size_t i : idx) total += y[i];

        for (std::size_t fi = 0; fi < candidates; ++fi) {
            const std::size_t feature = feature_pool[fi];
            sorted.clear();
            for (std::size_t i : idx) sorted.emplace_back(x(i, feature), y[i]);
            std::sort(sorted.begin(), sorted.end());

            // Prefix-sum scan for this feature's best position.
            double left_sum = 0.0, left_sq = 0.0;
            double total_sq = 0.0;
            for (const auto& [v, t] : sorted) total_sq += t * t;

            double feature_gain = 0.0;
            double feature_threshold = 0.0;
            bool feature_found = false;
            for (std::size_t split = 1; split < sorted.size(); ++split) {
                left_sum += sorted[split - 1].second;
                left_sq += sorted[split - 1].second * sorted[split - 1].second;
                if (sorted[split].first == sorted[split - 1].first) continue;
                const std::size_t nl = split;
                const std::size_t nr = sorted.size() - split;
                if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;

                const double right_sum = total - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse_left = left_sq - left_sum * left_sum / static_cast<double>(nl);
                const double sse_right =
                    right_sq - right_sum * right_sum / static_cast<double>(nr);
                const double gain = parent_sse - (sse_left + sse_right);
                if (gain > feature_gain && gain > 1e-12 * std::max(1.0, parent_sse)) {
                    feature_found = true;
                    feature_gain = gain;
                    feature_threshold = 0.5 * (sorted[split - 1].first + sorted[split].first);
                }
            }
            if (!feature_found) continue;

            const double gain = canonical_gain(idx, parent_sse, feature, feature_threshold);
            if (gain <= 1e-12 * std::max(1.0, parent_sse)) continue;
            const bool better =
                !best.found || gain > best.gain ||
                (gain == best.gain && feature_threshold < best.threshold);
            if (better) {
                best.found = true;
                best.feature = feature;
                best.gain = gain;
                best.threshold = feature_threshold;
            }
        }
        return best;
    }

    std::int32_t build(std::vector<std::size_t>& idx, std::size_t depth) {
        double mean = 0.0;
        const double sse = node_sse(idx, mean);

        double lo = y[idx[0]], hi = y[idx[0]];
        for (std::size_t i : idx) {
            lo = std::min(lo, y[i]);
            hi = std::max(hi, y[i]);
        }

        const std::int32_t id = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({});
        nodes[id].value = mean;

        const bool can_split = depth < cfg.max_depth && idx.size() >= 2 * cfg.min_samples_leaf &&
                               lo != hi;
        if (!can_split) return id;

        const SplitCandidate split = best_split(idx, sse);
        if (!split.found) return id;

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            (x(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);
        }
        impurity[split.feature] += split.gain;

        nodes[id].is_leaf = false;
        nodes[id].feature = split.feature;
        nodes[id].threshold = split.threshold;
        const std::int32_t left = build(left_idx, depth + 1);
        nodes[id].left = left;
        const std::int32_t right = build(right_idx, depth + 1);
        nodes[id].right = right;
        return id;
    }
};

} // namespace

DecisionTree DecisionTree::fit(const Matrix& x, std::span<const double> y,
                               std::span<const std::size_t> sample_indices,
                               const ForestConfig& cfg, Rng& rng,
                               std::span<double> impurity_decrease) {
    if (sample_indices.empty()) {
        throw std::invalid_argument("DecisionTree::fit: no samples");
    }
    if (impurity_decrease.size() != x.cols()) {
        throw std::invalid_argument("DecisionTree::fit: impurity accumulator misaligned");
    }
    DecisionTree tree;
    const std::size_t mtry = cfg.features_per_split == 0
                                 ? (x.cols() + 2) / 3
                                 : std::min(cfg.features_per_split, x.cols());
    Builder builder{x, y, cfg, rng, impurity_decrease, tree.nodes_, mtry, {}, {}};
    std::vector<std::size_t> idx(sample_indices.begin(), sample_indices.end());
    builder.build(idx, 0);
    return tree;
}

double DecisionTree::predict(std::span<const double> features) const {
    std::int32_t at = 0;
    while (!nodes_[at].is_leaf) {
        const Node& n = nodes_[at];
        at = (features[n.feature] <= n.threshold) ? n.left : n.right;
    }
    return nodes_[at].value;
}

RandomForest RandomForest::fit(const Matrix& x, std::span<const double> y, ForestConfig cfg,
                               std::uint64_t seed) {
    if (x.rows() < 2) {
        throw std::invalid_argument("RandomForest::fit: need at least 2 samples, got " +
                                    std::to_string(x.rows()));
    }
    if (x.cols() == 0) throw std::invalid_argument("RandomForest::fit: need at least 1 feature");
    if (y.size() != x.rows()) {
        throw std::invalid_argument("RandomForest::fit: target length mismatch");
    }
    if (cfg.n_trees == 0) throw std::invalid_argument("RandomForest::fit: n_trees must be >= 1");

    RandomForest forest;
    forest.feature_count_ = x.cols();
    forest.importances_.assign(x.cols(), 0.0);
    forest.trees_.reserve(cfg.n_trees);

    const std::size_t samples = x.rows();
    // Per-tree streams: the forest is deterministic in `seed` and
    // independent of the order trees are actually fit in.
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        Rng rng(Rng::derive(seed, t));
        std::vector<std::size_t> idx(samples);
        if (cfg.bootstrap) {
            for (std::size_t i = 0; i < samples; ++i) idx[i] = rng.uniform_index(samples);
        } else {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        forest.trees_.push_back(
            DecisionTree::fit(x, y, idx, cfg, rng, forest.importances_));
    }

    double total = 0.0;
    for (double v : forest.importances_) total += v;
    if (total > 0.0) {
        for (double& v : forest.importances_) v /= total;
    } else {
        // No split anywhere (e.g. constant targets): fall back to uniform.
        for (double& v : forest.importances_) v = 1.0 / static_cast<double>(x.cols());
    }
    return forest;
}

double RandomForest::predict(std::span<const double> features) const {
    return predict_partial(features, 0);
}

double RandomForest::predict_partial(std::span<const double> features, std::size_t count) const {
    if (features.size() != feature_count_) {
        throw std::invalid_argument("RandomForest::predict: " + std::to_string(features.size()) +
                                    " features, expected " + std::to_string(feature_count_));
    }
    const std::size_t use = (count == 0 || count > trees_.size()) ? trees_.size() : count;
    double sum = 0.0;
    for (std::size_t t = 0; t < use; ++t) sum += trees_[t].predict(features);
    return sum / static_cast<double>(use);
}

FeatureSelection importance_and_selection(const RandomForest& forest, std::size_t k) {
    const std::size_t c = forest.feature_count();
    if (k < 1 || k > c) {
        throw std::invalid_argument("importance_and_selection: k " + std::to_string(k) +
                                    " outside [1, " + std::to_string(c) + "]");
    }
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto imp = forest.importances();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (imp[a] != imp[b]) return imp[a] > imp[b];
        return a < b;  // ties to the lower feature index
    });

    std::vector<std::size_t> selected(order.begin(), order.begin() + k);
    std::sort(selected.begin(), selected.end());

    std::vector<double> raw;
    raw.reserve(k);
    for (std::size_t i : selected) raw.push_back(imp[i]);
    // A top-k subset whose importances are all zero can only happen when the
    // forest fell back to uniform; renormalization keeps that uniform.
    return FeatureSelection{std::move(selected), FeatureWeights(std::move(raw))};
}

} // namespace iipm
