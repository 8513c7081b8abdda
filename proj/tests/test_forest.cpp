#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iipmixer/forest.hpp"
#include "iipmixer/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace iipm;

namespace {

// y = x0 plus pure-noise features. The forest must pin feature 0.
struct Fixture {
    Matrix x;
    std::vector<double> y;
};

Fixture signal_fixture(std::size_t samples, std::size_t features, std::uint64_t seed) {
    Rng rng(seed);
    Fixture f{Matrix(samples, features), std::vector<double>(samples)};
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t j = 0; j < features; ++j) f.x(i, j) = rng.uniform(0.0, 1.0);
        f.y[i] = f.x(i, 0);
    }
    return f;
}

double training_mse_of_partial(const RandomForest& forest, const Fixture& f,
                               std::size_t trees) {
    double mse = 0.0;
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
        const auto row = f.x.row(i);
        const double d = forest.predict_partial(row, trees) - f.y[i];
        mse += d * d;
    }
    return mse / static_cast<double>(f.x.rows());
}

} // namespace

TEST_CASE("constant targets give single-leaf trees predicting the constant") {
    Rng rng(1);
    Matrix x(20, 3);
    for (double& v : x.values()) v = rng.uniform(0.0, 1.0);
    const std::vector<double> y(20, 1.25);
    const RandomForest forest = RandomForest::fit(x, y, {}, 7);
    for (const DecisionTree& tree : forest.trees()) CHECK(tree.is_single_leaf());
    const std::vector<double> probe = {0.3, 0.3, 0.3};
    CHECK(forest.predict(probe) == 1.25);
    // No split anywhere: importance falls back to uniform.
    for (double imp : forest.importances()) {
        CHECK(imp == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("the signal feature dominates the importances") {
    const Fixture f = signal_fixture(200, 5, 21);
    ForestConfig cfg;
    cfg.n_trees = 50;
    const RandomForest forest = RandomForest::fit(f.x, f.y, cfg, 3);
    CHECK(forest.importances()[0] > 0.5);

    const FeatureSelection top1 = importance_and_selection(forest, 1);
    CHECK(top1.indices == std::vector<std::size_t>{0});
}

TEST_CASE("forests are bitwise deterministic in the seed") {
    const Fixture f = signal_fixture(80, 4, 5);
    const RandomForest a = RandomForest::fit(f.x, f.y, {}, 11);
    const RandomForest b = RandomForest::fit(f.x, f.y, {}, 11);
    const RandomForest c = RandomForest::fit(f.x, f.y, {}, 12);

    Rng rng(9);
    bool any_diff = false;
    for (int probe = 0; probe < 10; ++probe) {
        std::vector<double> p(4);
        for (double& v : p) v = rng.uniform(0.0, 1.0);
        CHECK(a.predict(p) == b.predict(p));
        any_diff |= (a.predict(p) != c.predict(p));
    }
    CHECK(any_diff);
}

TEST_CASE("a depth-0 tree predicts the global training mean") {
    const Fixture f = signal_fixture(50, 3, 8);
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 0;
    cfg.bootstrap = false;
    const RandomForest forest = RandomForest::fit(f.x, f.y, cfg, 2);
    double mean = 0.0;
    for (double v : f.y) mean += v;
    mean /= static_cast<double>(f.y.size());
    const std::vector<double> probe = {0.9, 0.1, 0.5};
    CHECK(forest.predict(probe) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("an unrestricted single tree interpolates distinct training points") {
    const Fixture f = signal_fixture(40, 3, 13);
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 64;
    cfg.min_samples_leaf = 1;
    cfg.bootstrap = false;
    cfg.features_per_split = 3;
    const RandomForest forest = RandomForest::fit(f.x, f.y, cfg, 2);
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
        CHECK(forest.predict(f.x.row(i)) == doctest::Approx(f.y[i]).epsilon(1e-12));
    }
}

TEST_CASE("predictions stay within the training target range") {
    const Fixture f = signal_fixture(100, 4, 17);
    const RandomForest forest = RandomForest::fit(f.x, f.y, {}, 5);
    const double lo = *std::min_element(f.y.begin(), f.y.end());
    const double hi = *std::max_element(f.y.begin(), f.y.end());
    Rng rng(4);
    for (int probe = 0; probe < 25; ++probe) {
        std::vector<double> p(4);
        for (double& v : p) v = rng.uniform(-2.0, 3.0);
        const double pred = forest.predict(p);
        CHECK(pred >= lo - 1e-12);
        CHECK(pred <= hi + 1e-12);
    }
}

TEST_CASE("importance_and_selection") {
    const Fixture f = signal_fixture(150, 6, 23);
    ForestConfig cfg;
    cfg.n_trees = 30;
    const RandomForest forest = RandomForest::fit(f.x, f.y, cfg, 3);

    SUBCASE("k = C keeps everything with the full normalized importances") {
        const FeatureSelection all = importance_and_selection(forest, 6);
        CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(all.alpha[i] == doctest::Approx(forest.importances()[i]).epsilon(1e-12));
        }
    }
    SUBCASE("alpha always renormalizes to 1") {
        for (std::size_t k = 1; k <= 6; ++k) {
            const FeatureSelection sel = importance_and_selection(forest, k);
            double sum = 0.0;
            for (double a : sel.alpha.alpha()) sum += a;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
    SUBCASE("k out of range is rejected") {
        CHECK_THROWS_AS(importance_and_selection(forest, 0), std::invalid_argument);
        CHECK_THROWS_AS(importance_and_selection(forest, 7), std::invalid_argument);
    }
}

TEST_CASE("growing the cumulative ensemble drives training MSE down on the fixture") {
    // Averaging reduces variance: over a doubling schedule of tree counts the
    // cumulative-ensemble training MSE is non-increasing on this fixture, and
    // the full forest beats a single tree by a wide margin. (Per-step
    // monotonicity is not a theorem; single added trees can bump the MSE.)
    const Fixture f = signal_fixture(120, 4, 31);
    ForestConfig cfg;
    cfg.n_trees = 32;
    const RandomForest forest = RandomForest::fit(f.x, f.y, cfg, 0);
    double prev = training_mse_of_partial(forest, f, 1);
    const double single_tree = prev;
    for (std::size_t t : {2, 4, 8, 16, 32}) {
        const double cur = training_mse_of_partial(forest, f, t);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    CHECK(training_mse_of_partial(forest, f, 32) < 0.5 * single_tree);
}

TEST_CASE("importances are permutation-consistent") {
    // All features considered at every split so the tree structure depends
    // only on the data, not on which indices a subsample drew.
    const Fixture f = signal_fixture(100, 4, 37);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.features_per_split = 4;
    const RandomForest base = RandomForest::fit(f.x, f.y, cfg, 6);

    const std::size_t perm[4] = {2, 0, 3, 1};  // permuted[j] = original[perm[j]]
    Matrix shuffled(f.x.rows(), 4);
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) shuffled(i, j) = f.x(i, perm[j]);
    }
    const RandomForest permuted = RandomForest::fit(shuffled, f.y, cfg, 6);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(permuted.importances()[j] ==
              doctest::Approx(base.importances()[perm[j]]).epsilon(1e-9));
    }
}

TEST_CASE("fit rejects degenerate inputs") {
    Matrix x(1, 2, {0.0, 1.0});
    const std::vector<double> y = {1.0};
    CHECK_THROWS_AS(RandomForest::fit(x, y, {}, 1), std::invalid_argument);

    Matrix x2(4, 2);
    const std::vector<double> bad_y = {1.0, 2.0};
    CHECK_THROWS_AS(RandomForest::fit(x2, bad_y, {}, 1), std::invalid_argument);

    const Fixture f = signal_fixture(10, 2, 1);
    const RandomForest forest = RandomForest::fit(f.x, f.y, {}, 1);
    const std::vector<double> wrong_width = {0.5};
    CHECK_THROWS_AS(forest.predict(wrong_width), std::invalid_argument);
}
