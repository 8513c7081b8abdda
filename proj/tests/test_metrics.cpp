#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iipmixer/metrics.hpp"
#include "oracles.hpp"

#include <cmath>
#include <sstream>

using namespace iipm;

TEST_CASE("FeatureWeights normalizes and validates") {
    const FeatureWeights w({1.0, 3.0});
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
    double sum = 0.0;
    for (double a : w.alpha()) sum += a;
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    CHECK_THROWS_AS(FeatureWeights({0.5, -0.1}), std::invalid_argument);
    CHECK_THROWS_AS(FeatureWeights({}), std::invalid_argument);
    CHECK_THROWS_AS(FeatureWeights({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("FeatureWeights: scaling the raw weights does not change alpha") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> raw(5);
        for (double& v : raw) v = rng.uniform(0.01, 3.0);
        std::vector<double> scaled = raw;
        const double c = rng.uniform(0.1, 50.0);
        for (double& v : scaled) v *= c;
        const FeatureWeights a(raw), b(scaled);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("wmse_loss basics") {
    const Matrix pred(2, 1, {1.0, 2.0});
    const Matrix truth(2, 1, {0.0, 0.0});

    SUBCASE("zero on exact agreement") {
        CHECK(wmse_loss(pred, pred, FeatureWeights::uniform(2)) == 0.0);
    }
    SUBCASE("worked example: errors (1, 2), alpha (0.25, 0.75)") {
        CHECK(wmse_loss(pred, truth, FeatureWeights({0.25, 0.75})) ==
              doctest::Approx(3.25).epsilon(1e-15));
    }
    SUBCASE("uniform weights reduce to the plain MSE") {
        Rng rng(2);
        const Matrix p = oracle::random_matrix(4, 3, rng);
        const Matrix t = oracle::random_matrix(4, 3, rng);
        double mse = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = p.data()[i] - t.data()[i];
            mse += d * d;
        }
        mse /= static_cast<double>(p.size());
        CHECK(wmse_loss(p, t, FeatureWeights::uniform(4)) ==
              doctest::Approx(mse).epsilon(1e-12));
    }
    SUBCASE("shape and weight-length mismatches are rejected") {
        CHECK_THROWS_AS(wmse_loss(pred, Matrix(1, 1), FeatureWeights::uniform(2)),
                        std::invalid_argument);
        CHECK_THROWS_AS(wmse_loss(pred, truth, FeatureWeights::uniform(3)),
                        std::invalid_argument);
    }
}

TEST_CASE("wmse is non-negative and zero only on agreement for positive alpha") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix p = oracle::random_matrix(3, 2, rng);
        Matrix t = p;
        const FeatureWeights w({0.2, 0.5, 0.3});
        CHECK(wmse_loss(p, t, w) == 0.0);
        t(1, 0) += 1e-3;
        CHECK(wmse_loss(p, t, w) > 0.0);
    }
}

TEST_CASE("wmse tape node agrees with the scalar function") {
    Rng rng(4);
    const Matrix truth = oracle::random_matrix(3, 2, rng);
    const FeatureWeights w({0.5, 0.25, 0.25});

    Tape tape;
    std::vector<Tape::NodeId> preds;
    Matrix pred_value(3, 2);
    for (std::size_t c = 0; c < 3; ++c) {
        const Matrix row = oracle::random_matrix(1, 2, rng);
        pred_value.set_row(c, row.values());
        preds.push_back(tape.constant(row));
    }
    const auto loss = wmse_loss_node(tape, preds, truth, w);
    CHECK(tape.value(loss)(0, 0) ==
          doctest::Approx(wmse_loss(pred_value, truth, w)).epsilon(1e-12));
}

TEST_CASE("regression_metrics") {
    SUBCASE("exact agreement") {
        const std::vector<double> v = {1.0, 2.0, 3.0};
        const RegressionMetrics m = regression_metrics(v, v);
        CHECK(m.mae == 0.0);
        CHECK(m.rmse == 0.0);
        CHECK(*m.mape_pct == 0.0);
    }
    SUBCASE("single-point worked example") {
        const std::vector<double> pred = {1.1}, truth = {1.0};
        const RegressionMetrics m = regression_metrics(pred, truth);
        CHECK(m.mae == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(m.rmse == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(*m.mape_pct == doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("zero truth leaves MAPE undefined but keeps MAE/RMSE") {
        const std::vector<double> pred = {1.0, 2.0}, truth = {0.0, 2.0};
        const RegressionMetrics m = regression_metrics(pred, truth);
        CHECK(!m.mape_pct.has_value());
        CHECK(m.mae == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("rmse >= mae on random residuals") {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> pred(7), truth(7);
            for (std::size_t i = 0; i < 7; ++i) {
                pred[i] = rng.uniform(-2.0, 2.0);
                truth[i] = rng.uniform(0.5, 2.0);
            }
            const RegressionMetrics m = regression_metrics(pred, truth);
            CHECK(m.rmse >= m.mae - 1e-15);
        }
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(regression_metrics({}, {}), std::invalid_argument);
    }
}

TEST_CASE("are_metric") {
    CHECK(are_metric(70.0, 70.0) == 0.0);
    CHECK(are_metric(73.0, 70.0) == doctest::Approx(4.2857).epsilon(1e-4));
    CHECK(are_metric(90.0, 100.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS(are_metric(10.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(are_metric(10.0, -5.0), std::invalid_argument);
}

TEST_CASE("rul_from_capacity") {
    SUBCASE("threshold crossing on the worked fixture") {
        const std::vector<double> cap = {2.0, 1.7, 1.59};
        const auto rul = rul_from_capacity(cap, 2.0, 0.8);
        REQUIRE(rul.has_value());
        CHECK(*rul == 2);  // 1.59 < 1.6
    }
    SUBCASE("no crossing") {
        const std::vector<double> cap = {2.0, 1.9, 1.8};
        CHECK(!rul_from_capacity(cap, 2.0, 0.8).has_value());
    }
    SUBCASE("already below at cycle 0") {
        const std::vector<double> cap = {1.5, 1.4};
        const auto rul = rul_from_capacity(cap, 2.0, 0.8);
        REQUIRE(rul.has_value());
        CHECK(*rul == 0);
    }
    SUBCASE("empty series rejected") {
        CHECK_THROWS_AS(rul_from_capacity({}, 2.0, 0.8), std::invalid_argument);
        CHECK_THROWS_AS(rul_from_capacity(std::vector<double>{1.0}, 0.0, 0.8),
                        std::invalid_argument);
        CHECK_THROWS_AS(rul_from_capacity(std::vector<double>{1.0}, 2.0, 1.5),
                        std::invalid_argument);
    }
    SUBCASE("monotone in the threshold fraction") {
        Rng rng(6);
        std::vector<double> cap(50);
        double v = 2.0;
        for (double& c : cap) {
            v -= rng.uniform(0.0, 0.02);
            c = v;
        }
        std::optional<std::size_t> prev;
        for (double frac : {0.95, 0.9, 0.85, 0.8, 0.75, 0.7}) {
            const auto rul = rul_from_capacity(cap, 2.0, frac);
            if (prev && rul) CHECK(*rul >= *prev);
            if (rul) prev = rul;
        }
    }
}

TEST_CASE("rollout_forecast") {
    SUBCASE("persistence stays flat") {
        PersistenceModel model(1, 4, 1);
        const Matrix window(1, 4, {1.0, 2.0, 3.0, 4.0});
        const Matrix traj = rollout_forecast(model, window, 7);
        CHECK(traj.cols() == 7);
        for (std::size_t j = 0; j < 7; ++j) CHECK(traj(0, j) == 4.0);
    }
    SUBCASE("steps = k * N gives exactly k * N columns") {
        Rng rng(7);
        MixerConfig cfg;
        cfg.channels = 1;
        cfg.lookback = 8;
        cfg.patch_len = 2;
        cfg.horizon = 3;
        cfg.n_blocks = 1;
        const MixerModel model(cfg, rng);
        const Matrix window = oracle::random_matrix(1, 8, rng);
        const Matrix traj = rollout_forecast(model, window, 9);
        CHECK(traj.rows() == 1);
        CHECK(traj.cols() == 9);
    }
    SUBCASE("two-step rollout equals a manual feed-back, bitwise") {
        Rng rng(8);
        MixerConfig cfg;
        cfg.channels = 2;
        cfg.lookback = 4;
        cfg.patch_len = 2;
        cfg.horizon = 1;
        cfg.n_blocks = 1;
        const MixerModel model(cfg, rng);
        const Matrix window = oracle::random_matrix(2, 4, rng);

        const Matrix traj = rollout_forecast(model, window, 2);

        const Matrix first = model.predict(window);
        Matrix slid(2, 4);
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t j = 0; j < 3; ++j) slid(c, j) = window(c, j + 1);
            slid(c, 3) = first(c, 0);
        }
        const Matrix second = model.predict(slid);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(traj(c, 0) == first(c, 0));
            CHECK(traj(c, 1) == second(c, 0));
        }
    }
    SUBCASE("multi-step horizon slides by N, matching a manual feed-back") {
        Rng rng(9);
        MixerConfig cfg;
        cfg.channels = 1;
        cfg.lookback = 6;
        cfg.patch_len = 3;
        cfg.horizon = 2;
        cfg.n_blocks = 1;
        const MixerModel model(cfg, rng);
        const Matrix window = oracle::random_matrix(1, 6, rng);

        const Matrix traj = rollout_forecast(model, window, 4);

        const Matrix first = model.predict(window);
        Matrix slid(1, 6);
        for (std::size_t j = 0; j < 4; ++j) slid(0, j) = window(0, j + 2);
        slid(0, 4) = first(0, 0);
        slid(0, 5) = first(0, 1);
        const Matrix second = model.predict(slid);
        CHECK(traj(0, 0) == first(0, 0));
        CHECK(traj(0, 1) == first(0, 1));
        CHECK(traj(0, 2) == second(0, 0));
        CHECK(traj(0, 3) == second(0, 1));
    }
    SUBCASE("zero steps rejected") {
        PersistenceModel model(1, 4, 1);
        CHECK_THROWS_AS(rollout_forecast(model, Matrix(1, 4), 0), std::invalid_argument);
    }
}

TEST_CASE("EvalReport serializes with the fixed header") {
    EvalReport report;
    EvalRow row;
    row.method = "iip_mixer";
    row.mae_ah = 0.037;
    row.rmse_ah = 0.048;
    row.mape_pct = 2.48;
    row.are_pct = 1.37;
    row.rul_true = 70;
    row.rul_pred = 71;
    report.rows.push_back(row);
    EvalRow flagged;
    flagged.method = "persistence";
    flagged.mae_ah = 0.1;
    flagged.rmse_ah = 0.2;
    report.rows.push_back(flagged);

    std::ostringstream os;
    report.write_csv(os);
    const std::string csv = os.str();
    CHECK(csv.rfind("method,mae_ah,rmse_ah,mape_pct,are_pct,rul_true,rul_pred\n", 0) == 0);
    // Shortest-round-trip doubles keep the cells human readable.
    CHECK(csv.find("iip_mixer,0.037,0.048,2.48,1.37,70,71") != std::string::npos);
    // Flagged ARE serializes as empty cells.
    CHECK(csv.find("persistence,0.1,0.2,,,,") != std::string::npos);

    const std::string table = report.to_table();
    CHECK(table.find("IIP-Mixer") != std::string::npos);
    CHECK(table.find("0.037") != std::string::npos);
}
