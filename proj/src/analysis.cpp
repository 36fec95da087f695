#include "ozone/analysis.hpp"

#include "ozone/error.hpp"
#include "ozone/record.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace ozone {

std::vector<FeatureSet> default_combos() {
    return {
        {Role::temperature, Role::pressure},
        {Role::temperature, Role::co},
        {Role::pressure, Role::co},
        {Role::temperature, Role::pressure, Role::co},
    };
}

FeatureSet parse_feature_set(std::string_view text, char sep) {
    FeatureSet out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(sep, start);
        if (end == std::string_view::npos) end = text.size();
        auto token = text.substr(start, end - start);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        const auto role = parse_role(token);
        if (!role || *role == Role::ozone) throw Error(ErrorCode::UnknownFeature, std::string(token));
        if (std::find(out.begin(), out.end(), *role) != out.end()) {
            throw Error(ErrorCode::UnknownFeature, "duplicate feature " + std::string(token));
        }
        out.push_back(*role);
        start = end + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep

SweepReport feature_sweep(const Dataset& ds, std::span<const FeatureSet> combos, const TrainConfig& cfg,
                          const SplitSpec& spec, double tolerance) {
    if (combos.empty()) throw Error(ErrorCode::InvalidConfig, "no feature combinations requested");
    const auto [train_all, test_all] = split(ds, spec);

    SweepReport report;
    for (const auto& combo : combos) {
        const std::string tag = "combo " + join_roles(combo, "+");
        try {
            const Dataset train = train_all.project(combo);
            const Dataset test = test_all.project(combo);
            const LinearModel model = fit(train, cfg);
            report.entries.push_back({combo, evaluate(model, test, tolerance), evaluate(model, train, tolerance)});
        } catch (const Error& e) {
            throw e.tagged(tag);
        }
    }

    report.ranking.resize(report.entries.size());
    std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
        const auto& ma = report.entries[a].test;
        const auto& mb = report.entries[b].test;
        if (ma.accuracy_pct != mb.accuracy_pct) return ma.accuracy_pct > mb.accuracy_pct;
        return ma.r2 > mb.r2;
    });
    return report;
}

std::string SweepReport::to_records() const {
    std::ostringstream out;
    for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
        const auto& e = entries[ranking[pos]];
        out << "sweep rank=" << pos + 1 << " features=" << join_roles(e.features, "+")
            << " accuracy_pct=" << format_number(e.test.accuracy_pct) << " r2=" << format_number(e.test.r2)
            << " mse=" << format_number(e.test.mse) << " train_r2=" << format_number(e.train.r2)
            << " train_mse=" << format_number(e.train.mse) << " n_test=" << e.test.n << " n_train=" << e.train.n
            << " tol=" << format_number(e.test.tolerance) << '\n';
    }
    return out.str();
}

std::string SweepReport::to_table() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-4s  %-30s  %12s  %10s  %12s\n", "rank", "input parameters", "accuracy %",
                  "r2", "mse");
    out << line;
    for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
        const auto& e = entries[ranking[pos]];
        std::snprintf(line, sizeof line, "%-4zu  %-30s  %12.2f  %10.4f  %12.6g\n", pos + 1,
                      join_roles(e.features, " + ").c_str(), e.test.accuracy_pct, e.test.r2, e.test.mse);
        out << line;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Sensitivity

namespace {

std::vector<std::size_t> order_desc(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

std::vector<double> normalize_by_max(std::vector<double> values, const char* what) {
    const double top = *std::max_element(values.begin(), values.end());
    if (!(top > 0.0)) throw Error(ErrorCode::DegenerateModel, std::string("all ") + what + " indices are zero");
    for (double& v : values) v /= top;
    return values;
}

SensitivityReport build_report(const LinearModel& model, std::span<const double> center,
                               std::span<const double> spread) {
    model.validate();
    const std::size_t d = model.dim();

    std::vector<double> src(d);
    for (std::size_t j = 0; j < d; ++j) src[j] = std::abs(model.weights[j]);

    std::vector<double> oat(d);
    std::vector<double> probe(center.begin(), center.end());
    for (std::size_t j = 0; j < d; ++j) {
        probe[j] = center[j] + spread[j];
        const double up = predict(model, probe);
        probe[j] = center[j] - spread[j];
        const double down = predict(model, probe);
        probe[j] = center[j];
        oat[j] = std::abs(up - down) / 2.0;
    }

    SensitivityReport report;
    report.features = model.feature_names;
    report.src = normalize_by_max(std::move(src), "SRC");
    report.oat = normalize_by_max(std::move(oat), "OAT");
    report.src_order = order_desc(report.src);
    report.oat_order = order_desc(report.oat);
    return report;
}

} // namespace

SensitivityReport sensitivity(const LinearModel& model, const Dataset& ds) {
    if (ds.d != model.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "model d=" + std::to_string(model.dim()) + ", dataset d=" + std::to_string(ds.d));
    }
    if (ds.n < 2) throw Error(ErrorCode::TooFewRows, "sensitivity needs at least 2 rows");
    std::vector<double> center(ds.d);
    std::vector<double> spread(ds.d);
    for (std::size_t j = 0; j < ds.d; ++j) {
        const auto col = ds.column(j);
        center[j] = sample_mean(col);
        spread[j] = sample_stddev(col, center[j]);
    }
    return build_report(model, center, spread);
}

SensitivityReport sensitivity(const LinearModel& model) {
    return build_report(model, model.scaler.mean, model.scaler.stddev);
}

std::string SensitivityReport::ordering_line(bool use_oat) const {
    const auto& order = use_oat ? oat_order : src_order;
    std::string line;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k) line += " > ";
        line += role_name(features[order[k]]);
    }
    return line;
}

std::string SensitivityReport::to_records() const {
    std::ostringstream out;
    for (std::size_t j = 0; j < features.size(); ++j) {
        out << "sensitivity feature=" << role_name(features[j]) << " src=" << format_number(src[j])
            << " oat=" << format_number(oat[j]) << '\n';
    }
    out << "ordering src=\"" << ordering_line(false) << "\" oat=\"" << ordering_line(true) << "\"\n";
    return out.str();
}

std::string SensitivityReport::to_table() const {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-14s  %10s  %10s\n", "parameter", "SRC index", "OAT index");
    out << line;
    for (std::size_t k : src_order) {
        std::snprintf(line, sizeof line, "%-14s  %10.4f  %10.4f\n", std::string(role_name(features[k])).c_str(),
                      src[k], oat[k]);
        out << line;
    }
    out << "ordering: " << ordering_line(false) << '\n';
    return out.str();
}

RawCoefficients raw_coefficients(const LinearModel& model) {
    model.validate();
    RawCoefficients raw;
    raw.intercept = model.bias;
    raw.slopes.resize(model.dim());
    for (std::size_t j = 0; j < model.dim(); ++j) {
        raw.slopes[j] = model.weights[j] / model.scaler.stddev[j];
        raw.intercept -= model.weights[j] * model.scaler.mean[j] / model.scaler.stddev[j];
    }
    return raw;
}

} // namespace ozone
