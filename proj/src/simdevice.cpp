#include "ozone/simdevice.hpp"

#include "ozone/error.hpp"
#include "ozone/inferkernel.hpp"
#include "ozone/record.hpp"
#include "ozone/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ozone {

void Mq7Params::validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidConfig, "MQ7 curve A must be > 0");
    if (!(b < 0.0) || !std::isfinite(b)) throw Error(ErrorCode::InvalidConfig, "MQ7 curve B must be < 0");
    if (!(r0 > 0.0) || !(rl > 0.0)) throw Error(ErrorCode::InvalidConfig, "R0 and RL must be > 0");
    if (adc_bits < 8 || adc_bits > 16) throw Error(ErrorCode::InvalidConfig, "adc_bits must be in [8, 16]");
}

double divider_fraction(double ppm, const Mq7Params& p) {
    if (!(ppm > 0.0) || !std::isfinite(ppm)) throw Error(ErrorCode::NonPositivePpm, format_number(ppm));
    const double rs = p.r0 * std::pow(ppm / p.a, 1.0 / p.b);
    return p.rl / (rs + p.rl);
}

std::uint32_t adc_from_ppm(double ppm, const Mq7Params& p) {
    const double full = p.full_scale();
    const double position = round_half_even(divider_fraction(ppm, p) * full);
    return static_cast<std::uint32_t>(std::clamp(position, 0.0, full));
}

double ppm_from_adc_position(double position, const Mq7Params& p) {
    const double f = position / static_cast<double>(p.full_scale());
    const double rs = p.rl * (1.0 - f) / f;
    return p.a * std::pow(rs / p.r0, p.b);
}

double ppm_from_adc(std::uint32_t adc, const Mq7Params& p) {
    if (adc == 0 || adc >= p.full_scale()) {
        throw Error(ErrorCode::SaturatedReading, "adc=" + std::to_string(adc));
    }
    return ppm_from_adc_position(static_cast<double>(adc), p);
}

double PlantedRelation::slope(Role role) const noexcept {
    switch (role) {
    case Role::co: return co_slope;
    case Role::temperature: return temperature_slope;
    case Role::pressure: return pressure_slope;
    case Role::ozone: break;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Trajectories

void SimConfig::validate() const {
    if (steps < 1) throw Error(ErrorCode::InvalidConfig, "steps must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidConfig, "dt must be > 0");
    for (const ChannelProcess* c : {&co, &temperature, &pressure}) {
        if (!(c->theta >= 0.0) || !(c->eta >= 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "reversion rate and noise must be >= 0");
        }
    }
    if (!(sensor.adc_lsb >= 0.0) || !(sensor.temperature >= 0.0) || !(sensor.pressure >= 0.0) ||
        !(planted.noise_std >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "noise std must be >= 0");
    }
    if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be > 0");
}

SimConfig SimConfig::noise_free() const {
    SimConfig cfg = *this;
    cfg.co.eta = 0.0;
    cfg.temperature.eta = 0.0;
    cfg.pressure.eta = 0.0;
    cfg.sensor = SensorNoise{0.0, 0.0, 0.0};
    cfg.planted.noise_std = 0.0;
    return cfg;
}

namespace {
double advance(double x, const ChannelProcess& c, double dt, double eps) {
    return x + c.theta * (c.mean - x) * dt + c.eta * std::sqrt(dt) * eps;
}
} // namespace

std::vector<TruthSample> gen_trajectory(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, 0));
    std::vector<TruthSample> out;
    out.reserve(cfg.steps);
    double co = cfg.co.initial;
    double temp = cfg.temperature.initial;
    double pres = cfg.pressure.initial;
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        // Four draws per step regardless of which noise levels are zero.
        const double e_co = rng.normal();
        const double e_temp = rng.normal();
        const double e_pres = rng.normal();
        const double e_ozone = rng.normal();
        out.push_back({co, temp, pres, cfg.planted.evaluate(co, temp, pres) + cfg.planted.noise_std * e_ozone});
        co = advance(co, cfg.co, cfg.dt, e_co);
        temp = advance(temp, cfg.temperature, cfg.dt, e_temp);
        pres = advance(pres, cfg.pressure, cfg.dt, e_pres);
    }
    return out;
}

// ---------------------------------------------------------------------------
// LCD

namespace {

// Fixed-point field of exactly `width` chars, or '#' fill on overflow.
std::string fixed_field(double value, int width, int decimals, bool zero_pad) {
    if (!std::isfinite(value)) return std::string(static_cast<std::size_t>(width), '#');
    char buf[64];
    const int len = zero_pad ? std::snprintf(buf, sizeof buf, "%0*.*f", width, decimals, value)
                             : std::snprintf(buf, sizeof buf, "%*.*f", width, decimals, value);
    if (len != width) return std::string(static_cast<std::size_t>(width), '#');
    return buf;
}

std::string pad_line(std::string line) {
    line.resize(kLcdWidth, ' ');
    return line;
}

std::string line2(const std::string& co_field, double temp_c, double pressure_hpa) {
    return pad_line("CO" + co_field + " T" + fixed_field(temp_c, 2, 0, true) + " P" +
                    fixed_field(pressure_hpa, 4, 0, true));
}

} // namespace

DisplayRecord render_lcd(double prediction, double co_ppm, double temp_c, double pressure_hpa) {
    return {pad_line("O3 " + fixed_field(prediction, 6, 1, false) + " ug/m3"),
            line2(fixed_field(co_ppm, 4, 1, true), temp_c, pressure_hpa)};
}

DisplayRecord render_lcd_saturated(double temp_c, double pressure_hpa) {
    return {pad_line("O3 ------ ug/m3"), line2("----", temp_c, pressure_hpa)};
}

// ---------------------------------------------------------------------------
// Loop

std::string StepRecord::to_record() const {
    std::ostringstream out;
    out << "step t=" << frame.t << " adc_co=" << frame.adc_co << " temp_c=" << format_number(frame.temp_c)
        << " pressure_hpa=" << format_number(frame.pressure_hpa) << " saturated=" << (saturated ? 1 : 0)
        << " co_ppm=" << format_number(co_ppm) << " prediction=" << format_number(prediction)
        << " true_ozone=" << format_number(truth.ozone) << " lcd1=\"" << display.line1 << "\" lcd2=\""
        << display.line2 << "\"";
    return out.str();
}

std::string LoopSummary::to_record() const {
    std::ostringstream out;
    out << "summary steps=" << steps << " used=" << used << " saturated=" << saturated;
    if (used > 0) {
        out << " mse=" << format_number(metrics.mse) << " rmse=" << format_number(metrics.rmse)
            << " r2=" << format_number(metrics.r2) << " accuracy_pct=" << format_number(metrics.accuracy_pct)
            << " tol=" << format_number(metrics.tolerance);
    } else {
        out << " mse=nan rmse=nan r2=nan accuracy_pct=nan tol=" << format_number(metrics.tolerance);
    }
    return out.str();
}

LoopSummary run_loop(std::span<const std::uint8_t> artifact, const SimConfig& cfg, const Mq7Params& p,
                     const StepSink& sink) {
    cfg.validate();
    p.validate();
    Artifact model;
    try {
        model = deserialize(artifact);
    } catch (const Error& e) {
        throw Error(ErrorCode::ArtifactInvalid, e.what());
    }
    const std::span<const Role> features = std::visit(
        [](const auto& m) -> std::span<const Role> {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, QuantizedModel>) {
                return m.features();
            } else {
                return m.feature_names;
            }
        },
        model);

    const auto truth = gen_trajectory(cfg);
    Rng sensor_rng(mix_seed(cfg.seed, 1));
    const double full = p.full_scale();

    LoopSummary summary;
    summary.steps = cfg.steps;
    std::vector<double> predictions;
    std::vector<double> actuals;
    std::array<double, kMaxFeatures> x{};

    for (std::size_t t = 0; t < truth.size(); ++t) {
        const TruthSample& s = truth[t];
        const double e_adc = sensor_rng.normal();
        const double e_temp = sensor_rng.normal();
        const double e_pres = sensor_rng.normal();

        StepRecord step;
        step.truth = s;
        step.frame.t = t;
        if (s.co > 0.0) {
            const double position = divider_fraction(s.co, p) * full + cfg.sensor.adc_lsb * e_adc;
            step.frame.adc_co = static_cast<std::uint32_t>(std::clamp(round_half_even(position), 0.0, full));
        } else {
            step.frame.adc_co = 0;
        }
        step.frame.temp_c = s.temperature + cfg.sensor.temperature * e_temp;
        step.frame.pressure_hpa = s.pressure + cfg.sensor.pressure * e_pres;

        step.saturated = step.frame.adc_co == 0 || step.frame.adc_co >= p.full_scale();
        if (step.saturated) {
            ++summary.saturated;
            step.display = render_lcd_saturated(step.frame.temp_c, step.frame.pressure_hpa);
        } else {
            step.co_ppm = ppm_from_adc(step.frame.adc_co, p);
            for (std::size_t j = 0; j < features.size(); ++j) {
                switch (features[j]) {
                case Role::co: x[j] = step.co_ppm; break;
                case Role::temperature: x[j] = step.frame.temp_c; break;
                case Role::pressure: x[j] = step.frame.pressure_hpa; break;
                case Role::ozone: throw Error(ErrorCode::ArtifactInvalid, "ozone cannot be a model input");
                }
            }
            step.prediction = infer(model, std::span<const double>(x.data(), features.size()));
            step.display = render_lcd(step.prediction, step.co_ppm, step.frame.temp_c, step.frame.pressure_hpa);
            predictions.push_back(step.prediction);
            actuals.push_back(s.ozone);
        }
        if (sink) sink(step);
    }

    summary.used = predictions.size();
    summary.metrics.tolerance = cfg.tolerance;
    if (!predictions.empty()) summary.metrics = compute_metrics(predictions, actuals, cfg.tolerance);
    return summary;
}

LoopResult run_loop(std::span<const std::uint8_t> artifact, const SimConfig& cfg, const Mq7Params& p) {
    LoopResult result;
    result.steps.reserve(cfg.steps);
    result.summary = run_loop(artifact, cfg, p, [&](const StepRecord& s) { result.steps.push_back(s); });
    return result;
}

} // namespace ozone
