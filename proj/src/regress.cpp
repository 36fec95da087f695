#include "ozone/regress.hpp"

#include "ozone/error.hpp"
#include "ozone/record.hpp"
#include "ozone/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ozone {

std::string_view solver_name(Solver solver) noexcept {
    return solver == Solver::ols ? "ols" : "sgd";
}

void LinearModel::validate() const {
    const std::size_t d = weights.size();
    if (d == 0 || d > 3 || scaler.mean.size() != d || scaler.stddev.size() != d || feature_names.size() != d) {
        throw Error(ErrorCode::DimensionMismatch, "model fields disagree on dimension");
    }
    if (!std::isfinite(bias)) throw Error(ErrorCode::NonFiniteModel, "bias");
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(weights[j]) || !std::isfinite(scaler.mean[j]) || !std::isfinite(scaler.stddev[j])) {
            throw Error(ErrorCode::NonFiniteModel, "feature " + std::string(role_name(feature_names[j])));
        }
        if (!(scaler.stddev[j] > 0.0)) {
            throw Error(ErrorCode::NonFiniteModel, "non-positive stddev for " + std::string(role_name(feature_names[j])));
        }
    }
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidConfig, "lambda must be >= 0");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
}

namespace {

constexpr double kPivotRelTolerance = 1e-10;

void require_rows(const Dataset& train) {
    if (train.n < train.d + 1) {
        throw Error(ErrorCode::TooFewRows,
                    "need n >= d+1 (n=" + std::to_string(train.n) + ", d=" + std::to_string(train.d) + ")");
    }
}

// Solves the symmetric positive-definite system in place by Cholesky.
// `a` is p x p row-major; returns false on a (numerically) non-positive pivot.
bool cholesky_solve(std::vector<double> a, std::size_t p, std::vector<double>& rhs) {
    std::vector<double> diag(p);
    for (std::size_t i = 0; i < p; ++i) diag[i] = a[i * p + i];
    for (std::size_t k = 0; k < p; ++k) {
        double pivot = a[k * p + k];
        for (std::size_t m = 0; m < k; ++m) pivot -= a[k * p + m] * a[k * p + m];
        if (!(pivot > kPivotRelTolerance * std::max(diag[k], 1e-300))) return false;
        const double lkk = std::sqrt(pivot);
        a[k * p + k] = lkk;
        for (std::size_t i = k + 1; i < p; ++i) {
            double v = a[i * p + k];
            for (std::size_t m = 0; m < k; ++m) v -= a[i * p + m] * a[k * p + m];
            a[i * p + k] = v / lkk;
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        double v = rhs[i];
        for (std::size_t m = 0; m < i; ++m) v -= a[i * p + m] * rhs[m];
        rhs[i] = v / a[i * p + i];
    }
    for (std::size_t i = p; i-- > 0;) {
        double v = rhs[i];
        for (std::size_t m = i + 1; m < p; ++m) v -= a[m * p + i] * rhs[m];
        rhs[i] = v / a[i * p + i];
    }
    return true;
}

} // namespace

LinearModel fit_ols(const Dataset& train, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidConfig, "lambda must be >= 0");
    require_rows(train);
    const Scaler scaler = fit_scaler(train);
    const Dataset z = transform(scaler, train);

    // Normal equations over [z_1 .. z_d, 1]; the bias sits in the last slot.
    const std::size_t d = train.d;
    const std::size_t p = d + 1;
    std::vector<double> gram(p * p, 0.0);
    std::vector<double> rhs(p, 0.0);
    std::vector<double> row(p, 1.0);
    for (std::size_t i = 0; i < z.n; ++i) {
        for (std::size_t j = 0; j < d; ++j) row[j] = z.at(i, j);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b <= a; ++b) gram[a * p + b] += row[a] * row[b];
            rhs[a] += row[a] * z.y[i];
        }
    }
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram[b * p + a] = gram[a * p + b];
    }
    for (std::size_t j = 0; j < d; ++j) gram[j * p + j] += lambda;

    if (!cholesky_solve(std::move(gram), p, rhs)) {
        throw Error(ErrorCode::SingularSystem, "normal equations are rank-deficient; retry with lambda > 0");
    }

    LinearModel model;
    model.weights.assign(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(d));
    model.bias = rhs[d];
    model.scaler = scaler;
    model.feature_names = train.feature_names;
    model.validate();
    return model;
}

// Mini-batch gradient descent on (1/n)(||r||^2 + lambda ||w||^2), the ridge
// objective of fit_ols scaled by 1/n. Each batch uses the mean residual
// gradient plus the matching share of the penalty.
LinearModel fit_sgd(const Dataset& train, const TrainConfig& cfg) {
    cfg.validate();
    require_rows(train);
    const Scaler scaler = fit_scaler(train);
    const Dataset z = transform(scaler, train);
    const std::size_t n = z.n;
    const std::size_t d = z.d;
    const std::size_t batch = std::min(cfg.batch_size, n);
    const double lr = cfg.learning_rate;
    const double penalty = 2.0 * cfg.lambda / static_cast<double>(n);

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    std::vector<double> grad_w(d);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t t = start; t < stop; ++t) {
                const std::size_t i = order[t];
                double r = b - z.y[i];
                for (std::size_t j = 0; j < d; ++j) r += w[j] * z.at(i, j);
                for (std::size_t j = 0; j < d; ++j) grad_w[j] += r * z.at(i, j);
                grad_b += r;
            }
            const double scale = 2.0 / static_cast<double>(stop - start);
            bool finite = true;
            for (std::size_t j = 0; j < d; ++j) {
                w[j] -= lr * (scale * grad_w[j] + penalty * w[j]);
                finite = finite && std::isfinite(w[j]);
            }
            b -= lr * scale * grad_b;
            if (!finite || !std::isfinite(b)) {
                throw Error(ErrorCode::Diverged, "non-finite parameter at epoch " + std::to_string(epoch) +
                                                     "; lower the learning rate");
            }
        }
    }

    LinearModel model;
    model.weights = std::move(w);
    model.bias = b;
    model.scaler = scaler;
    model.feature_names = train.feature_names;
    return model;
}

LinearModel fit(const Dataset& train, const TrainConfig& cfg) {
    return cfg.solver == Solver::ols ? fit_ols(train, cfg.lambda) : fit_sgd(train, cfg);
}

double predict(const LinearModel& model, std::span<const double> x_raw) {
    const std::size_t d = model.weights.size();
    if (x_raw.size() != d) {
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(d) + " inputs, got " + std::to_string(x_raw.size()));
    }
    double out = model.bias;
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(x_raw[j])) throw Error(ErrorCode::NonFiniteInput, "input " + std::to_string(j));
        out += model.weights[j] * ((x_raw[j] - model.scaler.mean[j]) / model.scaler.stddev[j]);
    }
    return out;
}

Metrics compute_metrics(std::span<const double> predictions, std::span<const double> actuals, double tolerance) {
    if (predictions.size() != actuals.size()) throw Error(ErrorCode::DimensionMismatch, "prediction/actual lengths");
    if (actuals.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to evaluate");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be > 0");

    const std::size_t n = actuals.size();
    const double mean_y = sample_mean(actuals);
    double sse = 0.0;
    double sst = 0.0;
    std::size_t within = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = predictions[i] - actuals[i];
        sse += e * e;
        sst += (actuals[i] - mean_y) * (actuals[i] - mean_y);
        if (std::abs(e) <= tolerance) ++within;
    }

    Metrics m;
    m.n = n;
    m.tolerance = tolerance;
    m.mse = sse / static_cast<double>(n);
    m.rmse = std::sqrt(m.mse);
    m.accuracy_pct = 100.0 * static_cast<double>(within) / static_cast<double>(n);
    if (sst == 0.0) {
        m.degenerate_target = true;
        m.r2 = sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    } else {
        m.r2 = 1.0 - sse / sst;
    }
    return m;
}

Metrics evaluate(const LinearModel& model, const Dataset& ds, double tolerance) {
    if (ds.n == 0) throw Error(ErrorCode::EmptyDataset, "evaluation dataset is empty");
    if (ds.d != model.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "model d=" + std::to_string(model.dim()) + ", dataset d=" + std::to_string(ds.d));
    }
    std::vector<double> predictions(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) predictions[i] = predict(model, ds.row(i));
    return compute_metrics(predictions, ds.y, tolerance);
}

std::string Metrics::to_record(std::string_view label) const {
    std::ostringstream out;
    out << label << " n=" << n << " mse=" << format_number(mse) << " rmse=" << format_number(rmse)
        << " r2=" << format_number(r2) << " accuracy_pct=" << format_number(accuracy_pct)
        << " tol=" << format_number(tolerance);
    if (degenerate_target) out << " degenerate_target=1";
    return out.str();
}

std::vector<std::pair<std::size_t, std::size_t>> fold_bounds(std::size_t n, std::size_t k) {
    std::vector<std::pair<std::size_t, std::size_t>> folds;
    folds.reserve(k);
    std::size_t remaining = n;
    std::size_t start = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = remaining / (k - f);
        folds.emplace_back(start, start + size);
        start += size;
        remaining -= size;
    }
    return folds;
}

CVReport cross_validate(const Dataset& ds, std::size_t k, const TrainConfig& cfg, std::uint64_t seed,
                        double tolerance) {
    if (k < 2) throw Error(ErrorCode::InvalidConfig, "k must be >= 2");
    if (ds.n < k) throw Error(ErrorCode::TooFewRows, "n=" + std::to_string(ds.n) + " < k=" + std::to_string(k));

    std::vector<std::size_t> order(ds.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    CVReport report;
    report.k = k;
    const auto bounds = fold_bounds(ds.n, k);
    for (std::size_t f = 0; f < k; ++f) {
        const auto [start, stop] = bounds[f];
        std::vector<std::size_t> train_idx;
        train_idx.reserve(ds.n - (stop - start));
        train_idx.insert(train_idx.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(start));
        train_idx.insert(train_idx.end(), order.begin() + static_cast<std::ptrdiff_t>(stop), order.end());
        const std::span<const std::size_t> test_idx(order.data() + start, stop - start);
        try {
            const LinearModel model = fit(ds.select_rows(train_idx), cfg);
            report.folds.push_back(evaluate(model, ds.select_rows(test_idx), tolerance));
        } catch (const Error& e) {
            throw e.tagged("fold " + std::to_string(f));
        }
        report.fold_sizes.push_back(stop - start);
    }

    std::vector<double> mses;
    std::vector<double> r2s;
    for (const auto& m : report.folds) {
        mses.push_back(m.mse);
        r2s.push_back(m.r2);
    }
    report.mean_mse = sample_mean(mses);
    report.std_mse = sample_stddev(mses, report.mean_mse);
    report.mean_r2 = sample_mean(r2s);
    report.std_r2 = sample_stddev(r2s, report.mean_r2);
    return report;
}

std::string CVReport::to_records() const {
    std::ostringstream out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        out << folds[f].to_record("cv_fold fold=" + std::to_string(f)) << '\n';
    }
    out << "cv k=" << k << " mean_mse=" << format_number(mean_mse) << " std_mse=" << format_number(std_mse)
        << " mean_r2=" << format_number(mean_r2) << " std_r2=" << format_number(std_r2) << '\n';
    return out.str();
}

} // namespace ozone
