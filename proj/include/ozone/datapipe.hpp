#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ozone {

// Canonical column roles. The numeric values of the three feature roles are
// also their on-disk codes in .toz artifacts.
enum class Role : std::uint8_t { co = 0, temperature = 1, pressure = 2, ozone = 3 };

inline constexpr Role kAllFeatures[] = {Role::co, Role::temperature, Role::pressure};

std::string_view role_name(Role role) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;
// Declared canonical unit for a role; annotation only, values are never converted.
std::string_view role_unit(Role role) noexcept;
std::string join_roles(std::span<const Role> roles, std::string_view sep = ",");

using Cell = std::optional<double>;

struct RawTable {
    std::vector<Role> roles;             // column order, always co,temperature,pressure,ozone subset
    std::vector<std::string> units;      // unit annotation per column, may be empty strings
    std::vector<std::vector<Cell>> rows;

    std::size_t num_rows() const noexcept { return rows.size(); }
    std::size_t num_cols() const noexcept { return roles.size(); }
    std::vector<std::string> column_names() const;
    std::optional<std::size_t> column_index(Role role) const noexcept;
    bool operator==(const RawTable&) const = default;
};

struct ColumnBinding {
    std::string source;
    Role role;
    std::string unit;
};

class ColumnMapping {
public:
    ColumnMapping() = default;

    // Throws InvalidConfig if the role is already bound.
    void bind(std::string source, Role role, std::string unit = {});
    const std::vector<ColumnBinding>& bindings() const noexcept { return bindings_; }
    const ColumnBinding* find(Role role) const noexcept;

    // "role=column[,role=column...]"; the column may carry a unit as "column:unit".
    static ColumnMapping parse(std::string_view spec);
    // Each canonical role bound to a column with the same name.
    static ColumnMapping identity();

private:
    std::vector<ColumnBinding> bindings_;
};

enum class ImputePolicy { drop_rows, mean_impute, forward_fill, automatic };

std::optional<ImputePolicy> parse_impute_policy(std::string_view text) noexcept;

struct ImputeReport {
    std::size_t rows_in = 0;
    std::size_t rows_dropped = 0;
    std::vector<Role> roles;
    std::vector<std::size_t> cells_filled;   // per column, aligned with roles

    // Flat "impute key=value ..." record.
    std::string to_record() const;
};

// Missing-rate threshold under which the automatic policy mean-imputes a column.
inline constexpr double kAutoImputeMaxMissingRate = 0.05;

struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> x;               // row-major n x d
    std::vector<double> y;
    std::vector<Role> feature_names;

    double at(std::size_t row, std::size_t col) const { return x[row * d + col]; }
    double& at(std::size_t row, std::size_t col) { return x[row * d + col]; }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
    std::vector<double> column(std::size_t j) const;

    Dataset select_rows(std::span<const std::size_t> indices) const;
    // Columns re-ordered/projected to `features`; throws UnknownFeature.
    Dataset project(std::span<const Role> features) const;
    bool operator==(const Dataset&) const = default;
};

struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::optional<double> target_mean;
    std::optional<double> target_stddev;   // absent when the target is constant

    std::size_t dim() const noexcept { return mean.size(); }
    bool operator==(const Scaler&) const = default;
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

RawTable load_csv(const std::string& path, const ColumnMapping& mapping);
// Same parse over in-memory text; `origin` is used in error messages only.
RawTable parse_csv(std::string_view text, const ColumnMapping& mapping, std::string_view origin = "<memory>");

std::pair<RawTable, ImputeReport> impute(const RawTable& table, ImputePolicy policy);

Dataset to_dataset(const RawTable& table, std::span<const Role> feature_set);

Scaler fit_scaler(const Dataset& ds);
Dataset transform(const Scaler& scaler, const Dataset& ds);

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);
// Row index permutation behind split(): first entries go to train.
std::vector<std::size_t> split_order(std::size_t n, const SplitSpec& spec);
std::size_t train_rows_for(std::size_t n, double train_fraction);

double sample_mean(std::span<const double> values);
double sample_stddev(std::span<const double> values, double mean);

} // namespace ozone
