#include "oracles.hpp"

#include "ozone/analysis.hpp"
#include "ozone/error.hpp"
#include "ozone/regress.hpp"

#include <doctest.h>

#include <limits>

using namespace ozone;

namespace {

Dataset line_data() {
    Dataset ds;
    ds.n = 3;
    ds.d = 1;
    ds.x = {1, 2, 3};
    ds.y = {2, 4, 6};
    ds.feature_names = {Role::co};
    return ds;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an ozone::Error");
    return ErrorCode::InvalidConfig;
}

} // namespace

TEST_CASE("fit_ols on exact linear data") {
    const auto m = fit_ols(line_data());
    const double two[] = {2.0};
    const double ten[] = {10.0};
    CHECK(std::fabs(predict(m, two) - 4.0) < 1e-9);
    CHECK(std::fabs(predict(m, ten) - 20.0) < 1e-6);
}

TEST_CASE("fit_ols error paths") {
    Dataset dup;
    dup.n = 5;
    dup.d = 2;
    dup.feature_names = {Role::co, Role::temperature};
    for (double v : {1.0, 2.0, 4.0, 7.0, 11.0}) {
        dup.x.push_back(v);
        dup.x.push_back(v);
        dup.y.push_back(3 * v + 1);
    }
    CHECK(code_of([&] { fit_ols(dup); }) == ErrorCode::SingularSystem);
    // ridge makes the same system solvable and splits the weight evenly
    const auto ridge = fit_ols(dup, 0.5);
    CHECK(std::fabs(ridge.weights[0] - ridge.weights[1]) < 1e-9);

    Dataset two = line_data().select_rows(std::vector<std::size_t>{0});
    CHECK(code_of([&] { fit_ols(two); }) == ErrorCode::TooFewRows);
    CHECK(code_of([&] { fit_ols(line_data(), -1.0); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("fit_ols recovers planted slopes against the extended-precision oracle") {
    const auto ds = oracle::planted(1000, {3.0, 0.5, -2.0}, 1.0, 0.1, 77);
    const auto m = fit_ols(ds);
    const auto raw = raw_coefficients(m);
    const auto ref = oracle::ols_raw(ds);
    const double truth[] = {3.0, 0.5, -2.0};
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::fabs(raw.slopes[j] - static_cast<double>(ref.slopes[j])) < 1e-9 * std::max(1.0, std::fabs(truth[j])));
        CHECK(std::fabs(raw.slopes[j] - truth[j]) <= 5.0 * static_cast<double>(ref.slope_se[j]));
    }
    CHECK(std::fabs(raw.intercept - static_cast<double>(ref.intercept)) < 1e-6);
}

TEST_CASE("OLS optimality: standardized residuals are orthogonal to the design") {
    const auto ds = oracle::planted(500, {1.0, -0.3, 0.7}, 2.0, 0.4, 5);
    const auto m = fit_ols(ds);
    const auto z = transform(m.scaler, ds);
    std::vector<double> g(4, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double r = predict(m, ds.row(i)) - ds.y[i];
        for (std::size_t j = 0; j < 3; ++j) g[j] += z.at(i, j) * r;
        g[3] += r;
    }
    for (double v : g) CHECK(std::fabs(v) / static_cast<double>(ds.n) < 1e-6);
}

TEST_CASE("R2 nesting on training data") {
    const auto ds = oracle::planted(300, {2.0, 0.4, -1.0}, 0.0, 1.0, 9);
    const double full = evaluate(fit_ols(ds), ds, 1.0).r2;
    for (const auto& combo : default_combos()) {
        const auto sub = ds.project(combo);
        CHECK(evaluate(fit_ols(sub), sub, 1.0).r2 <= full + 1e-12);
    }
}

TEST_CASE("fit_sgd") {
    TrainConfig cfg;
    cfg.solver = Solver::sgd;
    cfg.learning_rate = 0.1;
    cfg.epochs = 500;
    cfg.batch_size = 3;

    SUBCASE("matches OLS on exact data") {
        const auto ols = fit_ols(line_data());
        const auto sgd = fit_sgd(line_data(), cfg);
        CHECK(std::fabs(sgd.weights[0] - ols.weights[0]) < 1e-3);
        CHECK(std::fabs(sgd.bias - ols.bias) < 1e-3);
    }
    SUBCASE("diverges on a huge learning rate") {
        const auto ds = oracle::planted(1000, {3.0, 0.5, -2.0}, 1.0, 0.1, 77);
        cfg.learning_rate = 1e6;
        cfg.batch_size = 32;
        cfg.epochs = 50;
        CHECK(code_of([&] { fit_sgd(ds, cfg); }) == ErrorCode::Diverged);
    }
    SUBCASE("deterministic for a seed") {
        const auto ds = oracle::planted(200, {1.0, 1.0, 1.0}, 0.0, 0.3, 3);
        cfg.batch_size = 16;
        cfg.epochs = 20;
        cfg.seed = 99;
        CHECK(fit_sgd(ds, cfg) == fit_sgd(ds, cfg));
        auto other = cfg;
        other.seed = 100;
        CHECK_FALSE(fit_sgd(ds, cfg) == fit_sgd(ds, other));
    }
    SUBCASE("ridge SGD approaches ridge OLS") {
        const auto ds = oracle::planted(400, {1.0, -1.0, 0.5}, 3.0, 0.2, 21);
        cfg.lambda = 25.0;
        cfg.batch_size = 400;
        cfg.learning_rate = 0.2;
        cfg.epochs = 2000;
        const auto sgd = fit_sgd(ds, cfg);
        const auto ols = fit_ols(ds, 25.0);
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::fabs(sgd.weights[j] - ols.weights[j]) < 1e-6);
    }
    SUBCASE("rejects invalid configs") {
        cfg.batch_size = 0;
        CHECK(code_of([&] { fit_sgd(line_data(), cfg); }) == ErrorCode::InvalidConfig);
    }
}

TEST_CASE("predict") {
    const auto ds = oracle::planted(100, {1.5, -0.5, 0.25}, 4.0, 0.1, 1);
    const auto m = fit_ols(ds);
    CHECK(predict(m, m.scaler.mean) == m.bias);

    ozone::Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto u = oracle::draw_features(rng);
        const auto v = oracle::draw_features(rng);
        const double a = rng.uniform();
        std::vector<double> mix(3);
        for (std::size_t j = 0; j < 3; ++j) mix[j] = a * u[j] + (1 - a) * v[j];
        CHECK(std::fabs(predict(m, mix) - (a * predict(m, u) + (1 - a) * predict(m, v))) < 1e-9);

        // second differences along each coordinate vanish
        for (std::size_t j = 0; j < 3; ++j) {
            auto lo = u, hi = u;
            lo[j] -= 1.0;
            hi[j] += 1.0;
            CHECK(std::fabs(predict(m, hi) - 2 * predict(m, u) + predict(m, lo)) < 1e-9);
        }
    }
    const double short_input[] = {1.0};
    CHECK(code_of([&] { predict(m, short_input); }) == ErrorCode::DimensionMismatch);
    const double bad[] = {1.0, std::numeric_limits<double>::quiet_NaN(), 1.0};
    CHECK(code_of([&] { predict(m, bad); }) == ErrorCode::NonFiniteInput);
}

TEST_CASE("metrics") {
    SUBCASE("hand-evaluated values") {
        const double p1[] = {2, 4}, a1[] = {1, 2};
        CHECK(compute_metrics(p1, a1, 1.0).mse == doctest::Approx(2.5).epsilon(1e-15));
        const double p2[] = {1, 2, 3}, a2[] = {1, 2, 4};
        const auto m = compute_metrics(p2, a2, 0.5);
        CHECK(m.r2 == doctest::Approx(1.0 - 9.0 / 42.0).epsilon(1e-14));
        CHECK(m.accuracy_pct == doctest::Approx(200.0 / 3.0));
    }
    SUBCASE("perfect model") {
        const auto m = evaluate(fit_ols(line_data()), line_data(), 1e-6);
        CHECK(m.mse < 1e-20);
        CHECK(m.r2 == doctest::Approx(1.0));
        CHECK(m.accuracy_pct == 100.0);
    }
    SUBCASE("degenerate target") {
        const double p[] = {1, 1}, a[] = {1, 1}, q[] = {1, 2};
        CHECK(compute_metrics(p, a, 1).degenerate_target);
        CHECK(compute_metrics(p, a, 1).r2 == 1.0);
        CHECK(compute_metrics(q, a, 1).r2 == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("rmse squared equals mse") {
        const auto ds = oracle::planted(300, {1.0, 2.0, 3.0}, 0.0, 2.0, 8);
        const auto m = evaluate(fit_ols(ds), ds, 1.0);
        CHECK(std::fabs(m.rmse * m.rmse - m.mse) < 1e-12 * std::max(1.0, m.mse));
        CHECK(m.r2 <= 1.0);
    }
    SUBCASE("errors") {
        Dataset empty = line_data().select_rows(std::vector<std::size_t>{});
        CHECK(code_of([&] { evaluate(fit_ols(line_data()), empty, 1.0); }) == ErrorCode::EmptyDataset);
        const auto ds = oracle::planted(20, {1, 1, 1}, 0, 1, 1);
        CHECK(code_of([&] { evaluate(fit_ols(line_data()), ds, 1.0); }) == ErrorCode::DimensionMismatch);
    }
    SUBCASE("record contains the contract keys") {
        const auto rec = evaluate(fit_ols(line_data()), line_data(), 1.0).to_record();
        for (const char* key : {" mse=", " rmse=", " r2=", " accuracy_pct=", " n="}) {
            CHECK(rec.find(key) != std::string::npos);
        }
    }
}

TEST_CASE("cross_validate") {
    TrainConfig ols;

    SUBCASE("leave-one-out on exact data") {
        Dataset ds;
        ds.d = 1;
        ds.feature_names = {Role::co};
        for (int i = 0; i < 8; ++i) {
            ds.x.push_back(i * 0.5);
            ds.y.push_back(3 * i * 0.5 - 1);
        }
        ds.n = 8;
        const auto cv = cross_validate(ds, 8, ols, 1);
        CHECK(cv.mean_mse < 1e-9);
        CHECK(cv.folds.size() == 8);
    }
    SUBCASE("fold sizes differ by at most one") {
        for (std::size_t n : {10u, 11u, 17u, 100u}) {
            for (std::size_t k : {2u, 3u, 7u}) {
                const auto b = fold_bounds(n, k);
                std::size_t lo = n, hi = 0, total = 0;
                for (auto [s, e] : b) {
                    lo = std::min(lo, e - s);
                    hi = std::max(hi, e - s);
                    total += e - s;
                }
                CHECK(hi - lo <= 1);
                CHECK(total == n);
            }
        }
    }
    SUBCASE("deterministic") {
        const auto ds = oracle::planted(120, {1, 2, 3}, 0, 0.5, 4);
        CHECK(cross_validate(ds, 5, ols, 42) == cross_validate(ds, 5, ols, 42));
    }
    SUBCASE("noise-level MSE on planted data") {
        const auto ds = oracle::planted(1000, {3.0, 0.5, -2.0}, 1.0, 0.1, 77);
        const auto cv = cross_validate(ds, 5, ols, 3);
        // expected ~ sigma^2 (1 + p/n) = 0.01 * 1.005
        CHECK(cv.mean_mse >= 0.005);
        CHECK(cv.mean_mse <= 0.02);
    }
    SUBCASE("errors") {
        CHECK(code_of([&] { cross_validate(line_data(), 4, ols, 0); }) == ErrorCode::TooFewRows);
        CHECK(code_of([&] { cross_validate(line_data(), 1, ols, 0); }) == ErrorCode::InvalidConfig);
        try {
            cross_validate(oracle::planted(4, {1, 1, 1}, 0, 1, 2), 2, ols, 0);
            FAIL("expected TooFewRows in a fold");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TooFewRows);
            CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
        }
    }
}
