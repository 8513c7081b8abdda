#pragma once

#include "iipmixer/matrix.hpp"
#include "iipmixer/metrics.hpp"
#include "iipmixer/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace iipm {

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 8;
    std::size_t min_samples_leaf = 2;
    std::size_t features_per_split = 0;  // 0 -> ceil(C / 3)
    bool bootstrap = true;
};

//! CART regression tree splitting on variance (SSE) reduction. Leaves
//! predict the mean of their training targets; a node only splits when the
//! split strictly reduces the summed squared error.
class DecisionTree {
public:
    struct Node {
        bool is_leaf = true;
        double value = 0.0;       // leaf mean
        std::size_t feature = 0;  // internal nodes
        double threshold = 0.0;   // go left when x[feature] <= threshold
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    //! `impurity_decrease` (length C) accumulates the SSE reduction of every
    //! realized split, attributed to the split feature.
    static DecisionTree fit(const Matrix& x, std::span<const double> y,
                            std::span<const std::size_t> sample_indices, const ForestConfig& cfg,
                            Rng& rng, std::span<double> impurity_decrease);

    double predict(std::span<const double> features) const;
    const std::vector<Node>& nodes() const { return nodes_; }
    bool is_single_leaf() const { return nodes_.size() == 1; }

private:
    std::vector<Node> nodes_;
};

class RandomForest {
public:
    //! Bootstrap-bagged trees with per-tree RNG streams derived from `seed`,
    //! so the result does not depend on fit order.
    static RandomForest fit(const Matrix& x, std::span<const double> y, ForestConfig cfg,
                            std::uint64_t seed);

    double predict(std::span<const double> features) const;
    //! Mean of the first `count` trees; count 0 means all.
    double predict_partial(std::span<const double> features, std::size_t count) const;

    //! Mean-decrease-in-impurity importances, normalized to sum to 1.
    std::span<const double> importances() const { return importances_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    std::size_t feature_count() const { return feature_count_; }

private:
    std::vector<DecisionTree> trees_;
    std::vector<double> importances_;
    std::size_t feature_count_ = 0;
};

//! Top-k features by importance (ties to the lower index) with the loss
//! weights renormalized over the selected subset. Indices come back in
//! ascending order so channel layout follows the source data.
struct FeatureSelection {
    std::vector<std::size_t> indices;
    FeatureWeights alpha;
};

FeatureSelection importance_and_selection(const RandomForest& forest, std::size_t k);

} // namespace iipm
