#pragma once

#include "ozone/datapipe.hpp"
#include "ozone/regress.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ozone {

inline constexpr std::size_t kMaxFeatures = 3;

// Standardized inputs are clipped to [-kClipRange, +kClipRange] before int8
// quantization. Shared by quantize(), error_bound() and infer_q8().
inline constexpr double kClipRange = 4.0;
inline constexpr float kInputScale = static_cast<float>(kClipRange / 127.0);

// Symmetric int8 model: q_w = round(w / s_w), inputs q_x = round(clip(z) / s_in),
// int32 accumulation, float bias add. Storage is fixed-size so inference never
// touches the heap.
struct QuantizedModel {
    std::uint8_t d = 0;
    std::array<Role, kMaxFeatures> feature_names{};
    std::array<float, kMaxFeatures> mean{};
    std::array<float, kMaxFeatures> stddev{};
    std::array<std::int8_t, kMaxFeatures> q_weights{};
    float weight_scale = 1.0f;
    float input_scale = kInputScale;
    float bias = 0.0f;

    std::span<const Role> features() const noexcept { return {feature_names.data(), d}; }
    bool operator==(const QuantizedModel&) const = default;
};

QuantizedModel quantize(const LinearModel& model);

// Float model with the quantized model's stored scaler and bias and weights q_w * s_w.
LinearModel dequantize(const QuantizedModel& q);

// Copy of `model` with every stored field rounded to float32, i.e. what a
// float-scheme artifact round-trips to.
LinearModel at_stored_precision(const LinearModel& model);

// Worst-case |infer_q8 - infer_f32| for inputs whose standardized value lies
// within the clip range. See docs/quantization.md for the derivation.
double error_bound(const QuantizedModel& q);

// TOZ1 binary format.
namespace toz {
inline constexpr std::array<std::uint8_t, 4> kMagic = {0x54, 0x4F, 0x5A, 0x31};   // "TOZ1"
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kSchemeFloat32 = 0;
inline constexpr std::uint8_t kSchemeInt8 = 1;
inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::size_t kChecksumSize = 4;

// Exact artifact size for a scheme and dimension.
std::size_t artifact_size(std::uint8_t scheme, std::size_t d);
} // namespace toz

using Bytes = std::vector<std::uint8_t>;
using Artifact = std::variant<LinearModel, QuantizedModel>;

// CRC-32 (reflected, poly 0xEDB88320, init/xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept;

Bytes serialize(const LinearModel& model);
Bytes serialize(const QuantizedModel& q);
Bytes serialize(const Artifact& artifact);
Artifact deserialize(std::span<const std::uint8_t> bytes);

void write_artifact(const std::string& path, std::span<const std::uint8_t> bytes);
// Throws FileNotFound.
Bytes read_artifact(const std::string& path);

} // namespace ozone
