#include "ozone/modelpack.hpp"

#include "ozone/error.hpp"
#include "ozone/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace ozone {

// ---------------------------------------------------------------------------
// Quantization

QuantizedModel quantize(const LinearModel& model) {
    try {
        model.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::NonFiniteModel, e.what());
    }
    QuantizedModel q;
    q.d = static_cast<std::uint8_t>(model.dim());
    double max_abs = 0.0;
    for (double w : model.weights) max_abs = std::max(max_abs, std::abs(w));
    float scale = static_cast<float>(max_abs / 127.0);
    if (!(scale > 0.0f) || !std::isfinite(scale)) scale = 1.0f;
    q.weight_scale = scale;
    q.input_scale = kInputScale;
    q.bias = static_cast<float>(model.bias);
    for (std::size_t j = 0; j < q.d; ++j) {
        q.feature_names[j] = model.feature_names[j];
        q.mean[j] = static_cast<float>(model.scaler.mean[j]);
        q.stddev[j] = static_cast<float>(model.scaler.stddev[j]);
        const double level = std::clamp(round_half_even(model.weights[j] / static_cast<double>(scale)), -127.0, 127.0);
        q.q_weights[j] = static_cast<std::int8_t>(level);
    }
    if (!std::isfinite(q.bias)) throw Error(ErrorCode::NonFiniteModel, "bias overflows float32");
    for (std::size_t j = 0; j < q.d; ++j) {
        if (!std::isfinite(q.mean[j]) || !(q.stddev[j] > 0.0f) || !std::isfinite(q.stddev[j])) {
            throw Error(ErrorCode::NonFiniteModel, "scaler does not fit float32");
        }
    }
    return q;
}

LinearModel dequantize(const QuantizedModel& q) {
    LinearModel m;
    m.bias = q.bias;
    for (std::size_t j = 0; j < q.d; ++j) {
        m.weights.push_back(static_cast<double>(q.q_weights[j]) * static_cast<double>(q.weight_scale));
        m.scaler.mean.push_back(q.mean[j]);
        m.scaler.stddev.push_back(q.stddev[j]);
        m.feature_names.push_back(q.feature_names[j]);
    }
    return m;
}

LinearModel at_stored_precision(const LinearModel& model) {
    LinearModel m;
    m.feature_names = model.feature_names;
    m.bias = static_cast<float>(model.bias);
    for (std::size_t j = 0; j < model.dim(); ++j) {
        m.weights.push_back(static_cast<float>(model.weights[j]));
        m.scaler.mean.push_back(static_cast<float>(model.scaler.mean[j]));
        m.scaler.stddev.push_back(static_cast<float>(model.scaler.stddev[j]));
    }
    return m;
}

double error_bound(const QuantizedModel& q) {
    const double s_w = q.weight_scale;
    const double s_in = q.input_scale;
    double bound = 0.0;
    for (std::size_t j = 0; j < q.d; ++j) {
        const double w_abs = std::abs(static_cast<double>(q.q_weights[j])) * s_w;
        bound += s_w / 2.0 * kClipRange + w_abs * s_in / 2.0;
    }
    return bound + static_cast<double>(q.d) * (s_w * s_in / 4.0);
}

// ---------------------------------------------------------------------------
// CRC-32

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1U) ? (0xEDB88320U ^ (c >> 1)) : (c >> 1);
        table[i] = c;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
    std::uint32_t c = 0xFFFFFFFFU;
    for (std::uint8_t byte : data) c = kCrcTable[(c ^ byte) & 0xFFU] ^ (c >> 8);
    return c ^ 0xFFFFFFFFU;
}

// ---------------------------------------------------------------------------
// TOZ1 encoding

namespace toz {

std::size_t artifact_size(std::uint8_t scheme, std::size_t d) {
    std::size_t size = kHeaderSize + d + 2 * 4 * d;
    if (scheme == kSchemeFloat32) {
        size += 4 * d + 4;
    } else {
        size += d;
        size = (size + 3) & ~std::size_t{3};
        size += 4 + 4;
    }
    return size + kChecksumSize;
}

} // namespace toz

namespace {

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void i8(std::int8_t v) { out_.push_back(static_cast<std::uint8_t>(v)); }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void align4() {
        while (out_.size() % 4 != 0) out_.push_back(0);
    }
    void finish() { u32(crc32(out_)); }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return bytes_[pos_++]; }
    std::int8_t i8() { return static_cast<std::int8_t>(bytes_[pos_++]); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * k);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t pos() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_header(ByteWriter& w, std::uint8_t scheme, std::span<const Role> roles) {
    for (auto b : toz::kMagic) w.u8(b);
    w.u8(toz::kVersion);
    w.u8(scheme);
    w.u8(static_cast<std::uint8_t>(roles.size()));
    w.u8(0);
    for (Role r : roles) w.u8(static_cast<std::uint8_t>(r));
}

std::uint32_t read_u32_le(std::span<const std::uint8_t> b) {
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedField, what); }

} // namespace

Bytes serialize(const LinearModel& model) {
    model.validate();
    ByteWriter w;
    write_header(w, toz::kSchemeFloat32, model.feature_names);
    for (double v : model.scaler.mean) w.f32(static_cast<float>(v));
    for (double v : model.scaler.stddev) w.f32(static_cast<float>(v));
    for (double v : model.weights) w.f32(static_cast<float>(v));
    w.f32(static_cast<float>(model.bias));
    w.finish();
    return w.take();
}

Bytes serialize(const QuantizedModel& q) {
    if (q.d < 1 || q.d > kMaxFeatures) throw Error(ErrorCode::DimensionMismatch, "quantized model d out of range");
    ByteWriter w;
    write_header(w, toz::kSchemeInt8, q.features());
    for (std::size_t j = 0; j < q.d; ++j) w.f32(q.mean[j]);
    for (std::size_t j = 0; j < q.d; ++j) w.f32(q.stddev[j]);
    for (std::size_t j = 0; j < q.d; ++j) w.i8(q.q_weights[j]);
    w.align4();
    w.f32(q.weight_scale);
    w.f32(q.bias);
    w.finish();
    return w.take();
}

Bytes serialize(const Artifact& artifact) {
    return std::visit([](const auto& m) { return serialize(m); }, artifact);
}

Artifact deserialize(std::span<const std::uint8_t> bytes) {
    const std::size_t magic_seen = std::min(bytes.size(), toz::kMagic.size());
    if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_seen), toz::kMagic.begin())) {
        throw Error(ErrorCode::BadMagic, "not a TOZ1 artifact");
    }
    if (bytes.size() < toz::kHeaderSize) throw Error(ErrorCode::Truncated, "header incomplete");

    const std::uint8_t version = bytes[4];
    const std::uint8_t scheme = bytes[5];
    const std::uint8_t d = bytes[6];
    const bool layout_known = version == toz::kVersion && scheme <= toz::kSchemeInt8 && d >= 1 && d <= kMaxFeatures;
    const std::size_t expected = layout_known ? toz::artifact_size(scheme, d) : 0;
    if (layout_known && bytes.size() < expected) {
        throw Error(ErrorCode::Truncated,
                    "have " + std::to_string(bytes.size()) + " bytes, need " + std::to_string(expected));
    }
    if (bytes.size() < toz::kHeaderSize + toz::kChecksumSize) throw Error(ErrorCode::Truncated, "no checksum");

    // The checksum always occupies the last four bytes, whatever the layout.
    const auto body = bytes.first(bytes.size() - toz::kChecksumSize);
    const std::uint32_t stored = read_u32_le(bytes.last(toz::kChecksumSize));
    if (crc32(body) != stored) throw Error(ErrorCode::ChecksumMismatch, "artifact is corrupted");

    if (version != toz::kVersion) throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
    if (scheme > toz::kSchemeInt8) malformed("scheme " + std::to_string(scheme));
    if (d < 1 || d > kMaxFeatures) malformed("feature count " + std::to_string(d));
    if (bytes.size() != expected) malformed("trailing bytes after checksum-covered body");
    if (bytes[7] != 0) malformed("reserved header byte is non-zero");

    ByteReader r(body);
    for (std::size_t k = 0; k < toz::kHeaderSize; ++k) r.u8();
    std::array<Role, kMaxFeatures> roles{};
    for (std::size_t j = 0; j < d; ++j) {
        const std::uint8_t code = r.u8();
        if (code > static_cast<std::uint8_t>(Role::pressure)) malformed("feature role code " + std::to_string(code));
        roles[j] = static_cast<Role>(code);
        for (std::size_t k = 0; k < j; ++k) {
            if (roles[k] == roles[j]) malformed("duplicate feature role");
        }
    }
    std::array<float, kMaxFeatures> mean{};
    std::array<float, kMaxFeatures> stddev{};
    for (std::size_t j = 0; j < d; ++j) {
        mean[j] = r.f32();
        if (!std::isfinite(mean[j])) malformed("non-finite mean");
    }
    for (std::size_t j = 0; j < d; ++j) {
        stddev[j] = r.f32();
        if (!(stddev[j] > 0.0f) || !std::isfinite(stddev[j])) malformed("stddev must be positive and finite");
    }

    if (scheme == toz::kSchemeFloat32) {
        LinearModel m;
        for (std::size_t j = 0; j < d; ++j) {
            const float w = r.f32();
            if (!std::isfinite(w)) malformed("non-finite weight");
            m.weights.push_back(w);
            m.scaler.mean.push_back(mean[j]);
            m.scaler.stddev.push_back(stddev[j]);
            m.feature_names.push_back(roles[j]);
        }
        const float b = r.f32();
        if (!std::isfinite(b)) malformed("non-finite bias");
        m.bias = b;
        return m;
    }

    QuantizedModel q;
    q.d = d;
    q.feature_names = roles;
    q.mean = mean;
    q.stddev = stddev;
    for (std::size_t j = 0; j < d; ++j) {
        q.q_weights[j] = r.i8();
        if (q.q_weights[j] == -128) malformed("int8 weight outside [-127, 127]");
    }
    while (r.pos() % 4 != 0) {
        if (r.u8() != 0) malformed("non-zero alignment padding");
    }
    q.weight_scale = r.f32();
    if (!(q.weight_scale > 0.0f) || !std::isfinite(q.weight_scale)) malformed("weight scale must be positive");
    q.bias = r.f32();
    if (!std::isfinite(q.bias)) malformed("non-finite bias");
    q.input_scale = kInputScale;
    return q;
}

void write_artifact(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileNotFound, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::FileNotFound, "write failed for " + path);
}

Bytes read_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace ozone
