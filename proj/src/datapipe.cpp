#include "ozone/datapipe.hpp"

#include "ozone/error.hpp"
#include "ozone/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ozone {

std::string_view role_name(Role role) noexcept {
    switch (role) {
    case Role::co: return "co";
    case Role::temperature: return "temperature";
    case Role::pressure: return "pressure";
    case Role::ozone: return "ozone";
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
    for (Role r : {Role::co, Role::temperature, Role::pressure, Role::ozone}) {
        if (text == role_name(r)) return r;
    }
    return std::nullopt;
}

std::string_view role_unit(Role role) noexcept {
    switch (role) {
    case Role::co: return "mg/m3";
    case Role::temperature: return "degC";
    case Role::pressure: return "hPa";
    case Role::ozone: return "ug/m3";
    }
    return "";
}

std::string join_roles(std::span<const Role> roles, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (i) out += sep;
        out += role_name(roles[i]);
    }
    return out;
}

std::vector<std::string> RawTable::column_names() const {
    std::vector<std::string> names;
    names.reserve(roles.size());
    for (Role r : roles) names.emplace_back(role_name(r));
    return names;
}

std::optional<std::size_t> RawTable::column_index(Role role) const noexcept {
    for (std::size_t j = 0; j < roles.size(); ++j) {
        if (roles[j] == role) return j;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Column mapping

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

} // namespace

void ColumnMapping::bind(std::string source, Role role, std::string unit) {
    if (find(role) != nullptr) {
        throw Error(ErrorCode::InvalidConfig, "role '" + std::string(role_name(role)) + "' mapped twice");
    }
    bindings_.push_back({std::move(source), role, std::move(unit)});
}

const ColumnBinding* ColumnMapping::find(Role role) const noexcept {
    for (const auto& b : bindings_) {
        if (b.role == role) return &b;
    }
    return nullptr;
}

ColumnMapping ColumnMapping::parse(std::string_view spec) {
    ColumnMapping mapping;
    for (auto item : split_on(spec, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::InvalidConfig, "mapping entry '" + std::string(item) + "' is not role=column");
        }
        const auto role_text = trim(item.substr(0, eq));
        auto column = trim(item.substr(eq + 1));
        const auto role = parse_role(role_text);
        if (!role) throw Error(ErrorCode::UnknownFeature, std::string(role_text));
        std::string unit;
        if (const auto colon = column.find(':'); colon != std::string_view::npos) {
            unit = std::string(trim(column.substr(colon + 1)));
            column = trim(column.substr(0, colon));
        }
        if (column.empty()) throw Error(ErrorCode::InvalidConfig, "empty column for role " + std::string(role_text));
        mapping.bind(std::string(column), *role, std::move(unit));
    }
    return mapping;
}

ColumnMapping ColumnMapping::identity() {
    ColumnMapping mapping;
    for (Role r : {Role::co, Role::temperature, Role::pressure, Role::ozone}) {
        mapping.bind(std::string(role_name(r)), r);
    }
    return mapping;
}

std::optional<ImputePolicy> parse_impute_policy(std::string_view text) noexcept {
    if (text == "drop_rows") return ImputePolicy::drop_rows;
    if (text == "mean_impute") return ImputePolicy::mean_impute;
    if (text == "forward_fill") return ImputePolicy::forward_fill;
    if (text == "auto" || text == "automatic") return ImputePolicy::automatic;
    return std::nullopt;
}

std::string ImputeReport::to_record() const {
    std::ostringstream out;
    out << "impute rows_in=" << rows_in << " rows_dropped=" << rows_dropped;
    for (std::size_t j = 0; j < roles.size(); ++j) {
        out << " filled_" << role_name(roles[j]) << "=" << cells_filled[j];
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

Cell parse_cell(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

} // namespace

RawTable parse_csv(std::string_view text, const ColumnMapping& mapping, std::string_view origin) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
        text.remove_prefix(3);
    }
    std::vector<std::string_view> lines = split_on(text, '\n');
    std::size_t cursor = 0;
    while (cursor < lines.size() && trim(lines[cursor]).empty()) ++cursor;
    if (cursor == lines.size()) throw Error(ErrorCode::HeaderMissing, std::string(origin));

    const auto header = split_csv_line(trim(lines[cursor++]));
    std::vector<std::string> names;
    names.reserve(header.size());
    for (const auto& h : header) names.emplace_back(trim(h));

    RawTable table;
    std::vector<std::size_t> source_index;
    for (Role r : {Role::co, Role::temperature, Role::pressure, Role::ozone}) {
        const ColumnBinding* binding = mapping.find(r);
        if (binding == nullptr) continue;
        const auto it = std::find(names.begin(), names.end(), binding->source);
        if (it == names.end()) throw Error(ErrorCode::MappedColumnAbsent, binding->source);
        source_index.push_back(static_cast<std::size_t>(it - names.begin()));
        table.roles.push_back(r);
        table.units.push_back(binding->unit.empty() ? std::string(role_unit(r)) : binding->unit);
    }

    for (; cursor < lines.size(); ++cursor) {
        const auto line = trim(lines[cursor]);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        std::vector<Cell> row;
        row.reserve(source_index.size());
        for (std::size_t src : source_index) {
            row.push_back(src < fields.size() ? parse_cell(fields[src]) : std::nullopt);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

RawTable load_csv(const std::string& path, const ColumnMapping& mapping) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), mapping, path);
}

// ---------------------------------------------------------------------------
// Imputation

namespace {

std::vector<std::vector<Cell>> keep_complete(std::vector<std::vector<Cell>>&& rows,
                                             const std::vector<bool>& check_column) {
    std::vector<std::vector<Cell>> kept;
    kept.reserve(rows.size());
    for (auto& row : rows) {
        bool complete = true;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (check_column[j] && !row[j]) {
                complete = false;
                break;
            }
        }
        if (complete) kept.push_back(std::move(row));
    }
    return kept;
}

void fill_with_mean(std::vector<std::vector<Cell>>& rows, std::size_t col, Role role, std::size_t& filled) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : rows) {
        if (row[col]) {
            sum += *row[col];
            ++count;
        }
    }
    if (count == 0 && !rows.empty()) throw Error(ErrorCode::EmptyColumn, std::string(role_name(role)));
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    for (auto& row : rows) {
        if (!row[col]) {
            row[col] = mean;
            ++filled;
        }
    }
}

} // namespace

std::pair<RawTable, ImputeReport> impute(const RawTable& table, ImputePolicy policy) {
    if (table.rows.empty()) throw Error(ErrorCode::AllRowsDropped, "input table is empty");

    const std::size_t cols = table.num_cols();
    ImputeReport report;
    report.rows_in = table.num_rows();
    report.roles = table.roles;
    report.cells_filled.assign(cols, 0);

    auto rows = table.rows;
    const auto target = table.column_index(Role::ozone);
    if (target) {
        std::vector<bool> only_target(cols, false);
        only_target[*target] = true;
        rows = keep_complete(std::move(rows), only_target);
    }

    switch (policy) {
    case ImputePolicy::drop_rows:
        rows = keep_complete(std::move(rows), std::vector<bool>(cols, true));
        break;
    case ImputePolicy::mean_impute:
        for (std::size_t j = 0; j < cols; ++j) {
            if (target && j == *target) continue;
            fill_with_mean(rows, j, table.roles[j], report.cells_filled[j]);
        }
        break;
    case ImputePolicy::forward_fill: {
        for (std::size_t j = 0; j < cols; ++j) {
            Cell last;
            for (auto& row : rows) {
                if (row[j]) {
                    last = row[j];
                } else if (last) {
                    row[j] = last;
                    ++report.cells_filled[j];
                }
            }
        }
        // Leading gaps have nothing to carry forward.
        rows = keep_complete(std::move(rows), std::vector<bool>(cols, true));
        break;
    }
    case ImputePolicy::automatic: {
        std::vector<bool> drop_column(cols, false);
        for (std::size_t j = 0; j < cols; ++j) {
            std::size_t missing = 0;
            for (const auto& row : rows) missing += row[j] ? 0 : 1;
            const double rate = rows.empty() ? 0.0 : static_cast<double>(missing) / static_cast<double>(rows.size());
            drop_column[j] = rate >= kAutoImputeMaxMissingRate;
        }
        rows = keep_complete(std::move(rows), drop_column);
        for (std::size_t j = 0; j < cols; ++j) {
            if (!drop_column[j]) fill_with_mean(rows, j, table.roles[j], report.cells_filled[j]);
        }
        break;
    }
    }

    if (rows.empty()) throw Error(ErrorCode::AllRowsDropped, "no complete rows remain");
    report.rows_dropped = report.rows_in - rows.size();

    RawTable out;
    out.roles = table.roles;
    out.units = table.units;
    out.rows = std::move(rows);
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Dataset

std::vector<double> Dataset::column(std::size_t j) const {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = at(i, j);
    return col;
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
    Dataset out;
    out.n = indices.size();
    out.d = d;
    out.feature_names = feature_names;
    out.x.reserve(out.n * d);
    out.y.reserve(out.n);
    for (std::size_t i : indices) {
        const auto r = row(i);
        out.x.insert(out.x.end(), r.begin(), r.end());
        out.y.push_back(y[i]);
    }
    return out;
}

Dataset Dataset::project(std::span<const Role> features) const {
    if (features.empty()) throw Error(ErrorCode::UnknownFeature, "empty feature set");
    std::vector<std::size_t> source;
    for (std::size_t k = 0; k < features.size(); ++k) {
        const Role r = features[k];
        const auto it = std::find(feature_names.begin(), feature_names.end(), r);
        if (it == feature_names.end()) throw Error(ErrorCode::UnknownFeature, std::string(role_name(r)));
        if (std::find(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(k), r) !=
            features.begin() + static_cast<std::ptrdiff_t>(k)) {
            throw Error(ErrorCode::UnknownFeature, "duplicate feature " + std::string(role_name(r)));
        }
        source.push_back(static_cast<std::size_t>(it - feature_names.begin()));
    }
    Dataset out;
    out.n = n;
    out.d = features.size();
    out.feature_names.assign(features.begin(), features.end());
    out.y = y;
    out.x.reserve(n * out.d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t src : source) out.x.push_back(at(i, src));
    }
    return out;
}

Dataset to_dataset(const RawTable& table, std::span<const Role> feature_set) {
    if (feature_set.empty()) throw Error(ErrorCode::UnknownFeature, "empty feature set");
    if (feature_set.size() > 3) throw Error(ErrorCode::UnknownFeature, "at most 3 features");
    const auto target = table.column_index(Role::ozone);
    if (!target) throw Error(ErrorCode::UnknownFeature, "ozone column absent");

    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < feature_set.size(); ++k) {
        const Role r = feature_set[k];
        if (r == Role::ozone) throw Error(ErrorCode::UnknownFeature, "ozone is the target, not a feature");
        if (std::find(feature_set.begin(), feature_set.begin() + static_cast<std::ptrdiff_t>(k), r) !=
            feature_set.begin() + static_cast<std::ptrdiff_t>(k)) {
            throw Error(ErrorCode::UnknownFeature, "duplicate feature " + std::string(role_name(r)));
        }
        const auto idx = table.column_index(r);
        if (!idx) throw Error(ErrorCode::UnknownFeature, std::string(role_name(r)));
        cols.push_back(*idx);
    }
    if (table.rows.empty()) throw Error(ErrorCode::EmptyDataset, "table has no rows");

    Dataset ds;
    ds.n = table.num_rows();
    ds.d = cols.size();
    ds.feature_names.assign(feature_set.begin(), feature_set.end());
    ds.x.reserve(ds.n * ds.d);
    ds.y.reserve(ds.n);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        for (std::size_t c : cols) {
            if (!row[c]) throw Error(ErrorCode::MissingValuesPresent, "row " + std::to_string(i));
            ds.x.push_back(*row[c]);
        }
        if (!row[*target]) throw Error(ErrorCode::MissingValuesPresent, "row " + std::to_string(i));
        ds.y.push_back(*row[*target]);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Standardization

double sample_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values, double mean) {
    if (values.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {
bool is_constant(std::span<const double> values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *lo == *hi;
}
} // namespace

Scaler fit_scaler(const Dataset& ds) {
    if (ds.n < 2) throw Error(ErrorCode::TooFewRows, "standardization needs at least 2 rows");
    Scaler s;
    s.mean.resize(ds.d);
    s.stddev.resize(ds.d);
    for (std::size_t j = 0; j < ds.d; ++j) {
        const auto col = ds.column(j);
        const double m = sample_mean(col);
        const double sd = sample_stddev(col, m);
        if (is_constant(col) || !(sd > 0.0) || !std::isfinite(sd)) {
            throw Error(ErrorCode::ZeroVariance, std::string(role_name(ds.feature_names[j])));
        }
        s.mean[j] = m;
        s.stddev[j] = sd;
    }
    const double my = sample_mean(ds.y);
    const double sy = sample_stddev(ds.y, my);
    s.target_mean = my;
    if (!is_constant(ds.y) && sy > 0.0) s.target_stddev = sy;
    return s;
}

Dataset transform(const Scaler& scaler, const Dataset& ds) {
    if (scaler.dim() != ds.d || scaler.stddev.size() != ds.d) {
        throw Error(ErrorCode::DimensionMismatch,
                    "scaler d=" + std::to_string(scaler.dim()) + ", dataset d=" + std::to_string(ds.d));
    }
    Dataset out = ds;
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (std::size_t j = 0; j < ds.d; ++j) {
            out.at(i, j) = (ds.at(i, j) - scaler.mean[j]) / scaler.stddev[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting

std::size_t train_rows_for(std::size_t n, double train_fraction) {
    const auto rows = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    return std::max<std::size_t>(rows, 1);
}

std::vector<std::size_t> split_order(std::size_t n, const SplitSpec& spec) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (spec.shuffle) {
        Rng rng(spec.seed);
        rng.shuffle(order);
    }
    return order;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "train_fraction must be in (0,1)");
    }
    if (ds.n < 2) throw Error(ErrorCode::DegenerateSplit, "need at least 2 rows, have " + std::to_string(ds.n));
    const std::size_t n_train = train_rows_for(ds.n, spec.train_fraction);
    if (n_train >= ds.n) throw Error(ErrorCode::DegenerateSplit, "test side would be empty");

    const auto order = split_order(ds.n, spec);
    const std::span<const std::size_t> all(order);
    return {ds.select_rows(all.first(n_train)), ds.select_rows(all.subspan(n_train))};
}

} // namespace ozone
