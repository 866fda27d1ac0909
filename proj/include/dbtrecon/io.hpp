#pragma once

#include "dbtrecon/geometry.hpp"
#include "dbtrecon/phantom.hpp"
#include "dbtrecon/types.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace dbtrecon::io {

using json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

inline std::string sha256_hex(const std::string& s) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// Stable identifier of a scan geometry plus reconstruction grid size.
inline std::string geometry_hash(const ScanGeometry& g, std::size_t n_rows, std::size_t n_cols) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "views=%zu arc=%.17g sid=%.17g sdd=%.17g bins=%zu det=%.17g fov=%.17g motion=%s grid=%zux%zu",
                  g.n_views, g.arc_span, g.source_to_isocenter, g.source_to_detector, g.n_detector_bins,
                  g.detector_length, g.fov_side, to_string(g.detector_motion).c_str(), n_rows, n_cols);
    return sha256_hex(std::string(buf)).substr(0, 16);
}

/// Doubles as little-endian float32.
inline std::vector<std::uint8_t> encode_f32le(std::span<const double> values) {
    std::vector<std::uint8_t> bytes(values.size() * 4);
    for (std::size_t k = 0; k < values.size(); ++k) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[k]));
        for (int b = 0; b < 4; ++b) bytes[4 * k + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return bytes;
}

inline std::vector<double> decode_f32le(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 4 != 0) throw IoError("float32 payload length is not a multiple of 4");
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * k + b]) << (8 * b);
        out[k] = std::bit_cast<float>(bits);
    }
    return out;
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& data) {
    auto p = data;
    p += ".json";
    return p;
}

/// Writes the payload and a sidecar `<path>.json` holding `meta` plus the
/// payload hash.
inline void write_with_sidecar(const std::filesystem::path& path, std::span<const std::uint8_t> payload,
                               json meta) {
    write_bytes(path, payload);
    meta["content_sha256"] = sha256_hex(payload);
    write_text(sidecar_path(path), meta.dump(2) + "\n");
}

inline json read_sidecar(const std::filesystem::path& data) {
    std::ifstream is(sidecar_path(data));
    if (!is) throw IoError("missing sidecar for '" + data.string() + "'");
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw IoError("malformed sidecar for '" + data.string() + "': " + e.what());
    }
}

inline void write_image(const std::filesystem::path& path, const ImageGrid& img, json meta = json::object()) {
    json m;
    m["format"] = "float32-le";
    m["kind"] = "image";
    m["n_rows"] = img.n_rows;
    m["n_cols"] = img.n_cols;
    m["pixel_size_cm"] = img.pixel_size;
    for (auto& [k, v] : meta.items()) m[k] = v;
    write_with_sidecar(path, encode_f32le(img.values), std::move(m));
}

inline ImageGrid read_image(const std::filesystem::path& path) {
    const json meta = read_sidecar(path);
    ImageGrid img;
    img.n_rows = meta.at("n_rows").get<std::size_t>();
    img.n_cols = meta.at("n_cols").get<std::size_t>();
    img.pixel_size = meta.at("pixel_size_cm").get<double>();
    img.values = decode_f32le(read_bytes(path));
    if (img.values.size() != img.size()) throw IoError("image payload size does not match sidecar dimensions");
    return img;
}

inline void write_sinogram(const std::filesystem::path& path, const Sinogram& s, json meta = json::object()) {
    json m;
    m["format"] = "float32-le";
    m["kind"] = "sinogram";
    m["n_views"] = s.n_views;
    m["n_bins"] = s.n_bins;
    for (auto& [k, v] : meta.items()) m[k] = v;
    write_with_sidecar(path, encode_f32le(s.values), std::move(m));
}

inline Sinogram read_sinogram(const std::filesystem::path& path) {
    const json meta = read_sidecar(path);
    Sinogram s;
    s.n_views = meta.at("n_views").get<std::size_t>();
    s.n_bins = meta.at("n_bins").get<std::size_t>();
    s.values = decode_f32le(read_bytes(path));
    if (s.values.size() != s.size()) throw IoError("sinogram payload size does not match sidecar dimensions");
    return s;
}

/// One byte per pixel: 0 background, 1 adipose, 2 fibroglandular, 3 calcification.
inline void write_labels(const std::filesystem::path& path, const PhantomImage& ph, json meta = json::object()) {
    std::vector<std::uint8_t> bytes(ph.labels.size());
    std::transform(ph.labels.begin(), ph.labels.end(), bytes.begin(),
                   [](Tissue t) { return static_cast<std::uint8_t>(t); });
    json m;
    m["format"] = "uint8";
    m["kind"] = "tissue_labels";
    m["n_rows"] = ph.values.n_rows;
    m["n_cols"] = ph.values.n_cols;
    m["classes"] = {"background", "adipose", "fibroglandular", "calcification"};
    for (auto& [k, v] : meta.items()) m[k] = v;
    write_with_sidecar(path, bytes, std::move(m));
}

/// 8-bit binary PGM; values clamp to [lo, hi] and map linearly to 0..255.
inline std::vector<std::uint8_t> render_pgm(std::span<const double> values, std::size_t n_rows, std::size_t n_cols,
                                            double lo, double hi) {
    if (!(hi > lo)) throw ValidationError("render_pgm: empty display window");
    const std::string header = "P5\n" + std::to_string(n_cols) + " " + std::to_string(n_rows) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + values.size());
    for (double v : values) {
        const double t = (std::clamp(v, lo, hi) - lo) / (hi - lo);
        out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * t)));
    }
    return out;
}

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace dbtrecon::io
