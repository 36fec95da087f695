#include "ozone/inferkernel.hpp"

#include "ozone/error.hpp"
#include "ozone/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace ozone {

namespace {

void check_inputs(std::size_t d, std::span<const double> x_raw) {
    if (x_raw.size() != d) throw Error(ErrorCode::DimensionMismatch, "input length does not match model");
    for (double v : x_raw) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite sensor value");
    }
}

} // namespace

double infer_f32(const LinearModel& model, std::span<const double> x_raw) {
    const std::size_t d = model.weights.size();
    check_inputs(d, x_raw);
    const double* w = model.weights.data();
    const double* mu = model.scaler.mean.data();
    const double* sigma = model.scaler.stddev.data();
    double acc = model.bias;
    for (std::size_t j = 0; j < d; ++j) acc += w[j] * ((x_raw[j] - mu[j]) / sigma[j]);
    return acc;
}

double infer_q8(const QuantizedModel& q, std::span<const double> x_raw) {
    check_inputs(q.d, x_raw);
    const double s_in = q.input_scale;
    std::int32_t acc = 0;
    for (std::size_t j = 0; j < q.d; ++j) {
        const double z = (x_raw[j] - static_cast<double>(q.mean[j])) / static_cast<double>(q.stddev[j]);
        const double clipped = std::clamp(z, -kClipRange, kClipRange);
        const auto level = static_cast<std::int32_t>(std::clamp(round_half_even(clipped / s_in), -127.0, 127.0));
        acc += static_cast<std::int32_t>(q.q_weights[j]) * level;
    }
    const double rescale = static_cast<double>(q.weight_scale) * s_in;
    return static_cast<double>(q.bias) + static_cast<double>(acc) * rescale;
}

double infer(const Artifact& artifact, std::span<const double> x_raw) {
    if (const auto* q = std::get_if<QuantizedModel>(&artifact)) return infer_q8(*q, x_raw);
    return infer_f32(std::get<LinearModel>(artifact), x_raw);
}

} // namespace ozone
