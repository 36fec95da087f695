#pragma once

#include "ozone/modelpack.hpp"
#include "ozone/regress.hpp"

#include <span>

namespace ozone {

// Allocation-free inference on one frame. Both kernels do exactly d
// multiply-accumulates; the only data-dependent branch is input clipping in
// infer_q8. Errors (DimensionMismatch, NonFiniteInput) are thrown before any
// arithmetic happens.

// b + sum_j w_j * (x_j - mu_j) / sigma_j in double precision.
double infer_f32(const LinearModel& model, std::span<const double> x_raw);

// Standardize with the stored float scaler, clip to +-kClipRange, quantize to
// int8 with s_in, accumulate in int32, rescale by s_w * s_in and add the bias.
double infer_q8(const QuantizedModel& q, std::span<const double> x_raw);

// Dispatch on the artifact scheme.
double infer(const Artifact& artifact, std::span<const double> x_raw);

} // namespace ozone
