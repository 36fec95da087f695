#pragma once

#include "ozone/datapipe.hpp"
#include "ozone/regress.hpp"

#include <span>
#include <string>
#include <vector>

namespace ozone {

using FeatureSet = std::vector<Role>;

// {T,P}, {T,CO}, {P,CO}, {T,P,CO}: the four combinations compared in the
// original deployment study.
std::vector<FeatureSet> default_combos();

// "temperature+pressure", "co" ...; throws UnknownFeature.
FeatureSet parse_feature_set(std::string_view text, char sep = ',');

struct SweepEntry {
    FeatureSet features;
    Metrics test;
    Metrics train;
    bool operator==(const SweepEntry&) const = default;
};

struct SweepReport {
    std::vector<SweepEntry> entries;     // in request order
    std::vector<std::size_t> ranking;    // indices into entries, best first

    std::string to_records() const;
    std::string to_table() const;
    bool operator==(const SweepReport&) const = default;
};

// One shared split is drawn over `ds` and reused for every combination.
SweepReport feature_sweep(const Dataset& ds, std::span<const FeatureSet> combos, const TrainConfig& cfg,
                          const SplitSpec& spec, double tolerance);

struct SensitivityReport {
    std::vector<Role> features;
    std::vector<double> src;             // |w_j| / max |w|
    std::vector<double> oat;             // half-range of a +-1 sd perturbation, / max
    std::vector<std::size_t> src_order;  // most influential first
    std::vector<std::size_t> oat_order;

    std::string ordering_line(bool use_oat = false) const;
    std::string to_records() const;
    std::string to_table() const;
};

// x-bar and sd for the OAT perturbation come from `ds`.
SensitivityReport sensitivity(const LinearModel& model, const Dataset& ds);
// Model-only variant: perturbs around the embedded scaler mean by the scaler sd.
SensitivityReport sensitivity(const LinearModel& model);

struct RawCoefficients {
    std::vector<double> slopes;
    double intercept = 0.0;
};

RawCoefficients raw_coefficients(const LinearModel& model);

} // namespace ozone
