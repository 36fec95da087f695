#pragma once

#include "ozone/datapipe.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ozone {

// Linear model over standardized features. predict() takes raw-unit inputs
// and standardizes them with the embedded scaler.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    Scaler scaler;
    std::vector<Role> feature_names;

    std::size_t dim() const noexcept { return weights.size(); }
    // Throws NonFiniteModel / DimensionMismatch if the invariants are broken.
    void validate() const;
    bool operator==(const LinearModel&) const = default;
};

enum class Solver { ols, sgd };

struct TrainConfig {
    Solver solver = Solver::ols;
    double lambda = 0.0;          // ridge penalty on weights, never the bias
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Metrics {
    double mse = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    double accuracy_pct = 0.0;
    double tolerance = 1.0;
    std::size_t n = 0;
    bool degenerate_target = false;   // SST == 0; r2 is 1 or -inf

    std::string to_record(std::string_view label = "metrics") const;
    bool operator==(const Metrics&) const = default;
};

struct CVReport {
    std::size_t k = 0;
    std::vector<Metrics> folds;
    std::vector<std::size_t> fold_sizes;
    double mean_mse = 0.0;
    double std_mse = 0.0;
    double mean_r2 = 0.0;
    double std_r2 = 0.0;

    // One "cv_fold" record per fold followed by a "cv" summary record.
    std::string to_records() const;
    bool operator==(const CVReport&) const = default;
};

LinearModel fit_ols(const Dataset& train, double lambda = 0.0);
LinearModel fit_sgd(const Dataset& train, const TrainConfig& cfg);
// Dispatches on cfg.solver.
LinearModel fit(const Dataset& train, const TrainConfig& cfg);

double predict(const LinearModel& model, std::span<const double> x_raw);

Metrics compute_metrics(std::span<const double> predictions, std::span<const double> actuals, double tolerance);
Metrics evaluate(const LinearModel& model, const Dataset& ds, double tolerance);

CVReport cross_validate(const Dataset& ds, std::size_t k, const TrainConfig& cfg, std::uint64_t seed,
                        double tolerance = 1.0);

// Fold boundaries [start, stop) over a permuted index range; sizes differ by at most one.
std::vector<std::pair<std::size_t, std::size_t>> fold_bounds(std::size_t n, std::size_t k);

std::string_view solver_name(Solver solver) noexcept;

} // namespace ozone
