#pragma once

#include "ozone/modelpack.hpp"
#include "ozone/regress.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ozone {

// MQ7 power-law curve ppm = A * (Rs/R0)^B read through a load-resistor divider
// f = RL / (Rs + RL) into an adc_bits converter. Defaults are typical
// datasheet-fit values, not a calibration.
struct Mq7Params {
    double a = 99.042;
    double b = -1.518;
    double r0 = 10000.0;
    double rl = 10000.0;
    int adc_bits = 12;

    void validate() const;
    std::uint32_t full_scale() const noexcept { return (std::uint32_t{1} << adc_bits) - 1; }
};

// Divider fraction for a CO concentration; in (0, 1).
double divider_fraction(double ppm, const Mq7Params& p);
std::uint32_t adc_from_ppm(double ppm, const Mq7Params& p);
// Exact inverse of the forward model on a real-valued ADC position.
double ppm_from_adc_position(double position, const Mq7Params& p);
// Throws SaturatedReading at 0 and full scale.
double ppm_from_adc(std::uint32_t adc, const Mq7Params& p);

// x_{t+1} = x_t + theta (mean - x_t) dt + eta sqrt(dt) eps_t
struct ChannelProcess {
    double initial = 0.0;
    double mean = 0.0;
    double theta = 0.0;
    double eta = 0.0;
};

// Ground-truth ozone as an affine function of the true channels.
struct PlantedRelation {
    double co_slope = 6.0;
    double temperature_slope = 0.9;
    double pressure_slope = -1.5;
    double intercept = 1529.8;
    double noise_std = 2.0;

    double evaluate(double co, double temperature, double pressure) const noexcept {
        return intercept + co_slope * co + temperature_slope * temperature + pressure_slope * pressure;
    }
    double slope(Role role) const noexcept;
};

struct SensorNoise {
    double adc_lsb = 1.0;        // std of the analog CO reading, in ADC steps
    double temperature = 0.2;    // degC
    double pressure = 0.3;       // hPa
};

struct SimConfig {
    std::uint64_t seed = 42;
    std::size_t steps = 100;
    double dt = 1.0;
    ChannelProcess co{6.0, 6.0, 0.05, 0.45};
    ChannelProcess temperature{28.0, 28.0, 0.02, 0.6};
    ChannelProcess pressure{1010.0, 1010.0, 0.02, 0.5};
    SensorNoise sensor;
    PlantedRelation planted;
    double tolerance = 5.0;      // accuracy threshold for the loop summary, ug/m3

    void validate() const;
    // Every noise source (process, ozone, sensor) set to zero.
    SimConfig noise_free() const;
};

struct TruthSample {
    double co = 0.0;
    double temperature = 0.0;
    double pressure = 0.0;
    double ozone = 0.0;
    bool operator==(const TruthSample&) const = default;
};

std::vector<TruthSample> gen_trajectory(const SimConfig& cfg);

struct SensorFrame {
    std::size_t t = 0;
    std::uint32_t adc_co = 0;
    double temp_c = 0.0;
    double pressure_hpa = 0.0;
};

struct DisplayRecord {
    std::string line1;
    std::string line2;
    bool operator==(const DisplayRecord&) const = default;
};

inline constexpr std::size_t kLcdWidth = 16;

// line1: "O3 " + %6.1f + " ug/m3" + pad; line2: "CO" + %04.1f + " T" + %02.0f + " P" + %04.0f.
// Fields that do not fit their width are filled with '#'.
DisplayRecord render_lcd(double prediction, double co_ppm, double temp_c, double pressure_hpa);
// Display for a step whose CO reading sat on an ADC rail.
DisplayRecord render_lcd_saturated(double temp_c, double pressure_hpa);

struct StepRecord {
    SensorFrame frame;
    bool saturated = false;
    double co_ppm = 0.0;          // 0 when saturated
    double prediction = 0.0;      // 0 when saturated
    TruthSample truth;
    DisplayRecord display;

    std::string to_record() const;
};

struct LoopSummary {
    std::size_t steps = 0;
    std::size_t used = 0;
    std::size_t saturated = 0;
    Metrics metrics;              // over non-saturated steps; n == 0 if none

    std::string to_record() const;
};

struct LoopResult {
    std::vector<StepRecord> steps;
    LoopSummary summary;
};

using StepSink = std::function<void(const StepRecord&)>;

// Acquire -> infer -> display for cfg.steps steps. Throws ArtifactInvalid if
// the bytes do not decode; the message carries the decoder's error name.
LoopSummary run_loop(std::span<const std::uint8_t> artifact, const SimConfig& cfg, const Mq7Params& p,
                     const StepSink& sink);
LoopResult run_loop(std::span<const std::uint8_t> artifact, const SimConfig& cfg, const Mq7Params& p);

} // namespace ozone
