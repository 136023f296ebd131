#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "hcg/error.hpp"

namespace hcg {

/// Single-channel depth map. Values are raw sensor counts (centimeters for
/// NYU-style data), finite and non-negative; bit_depth picks the PGM maxval.
struct DepthImage {
    int width = 0;
    int height = 0;
    int bit_depth = 16;  // 8 or 16
    std::vector<double> values;

    DepthImage() = default;
    DepthImage(int w, int h, int bits = 16, double fill = 0.0)
        : width(w), height(h), bit_depth(bits),
          values(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double maxval() const { return bit_depth == 8 ? 255.0 : 65535.0; }
};

/// Three-channel color image, interleaved RGB normalized to [0, 1].
struct ColorImage {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    std::vector<double> rgb;

    ColorImage() = default;
    ColorImage(int w, int h, int bits = 8)
        : width(w), height(h), bit_depth(bits),
          rgb(static_cast<std::size_t>(w) * h * 3, 0.0) {}

    double& at(int y, int x, int ch) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
    }
    double at(int y, int x, int ch) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
    }
    double maxval() const { return bit_depth == 8 ? 255.0 : 65535.0; }
};

namespace detail {

inline void skip_pnm_space(const std::string& buf, std::size_t& pos) {
    while (pos < buf.size()) {
        const char c = buf[pos];
        if (c == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
}

inline long parse_pnm_int(const std::string& buf, std::size_t& pos, const char* what) {
    skip_pnm_space(buf, pos);
    if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        throw ParseError(std::string("pnm: expected ") + what);
    }
    long v = 0;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        v = v * 10 + (buf[pos] - '0');
        if (v > 1'000'000'000) throw ParseError(std::string("pnm: ") + what + " out of range");
        ++pos;
    }
    return v;
}

struct PnmHeader {
    bool is_ppm;
    int width, height, bit_depth;
    std::size_t payload_pos;
};

inline PnmHeader parse_pnm_header(const std::string& buf, const std::string& path) {
    if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) {
        throw ParseError("pnm: " + path + ": not a binary PGM/PPM (P5/P6)");
    }
    PnmHeader h;
    h.is_ppm = buf[1] == '6';
    std::size_t pos = 2;
    const long w = parse_pnm_int(buf, pos, "width");
    const long ht = parse_pnm_int(buf, pos, "height");
    const long maxval = parse_pnm_int(buf, pos, "maxval");
    if (w <= 0 || ht <= 0) throw ParseError("pnm: " + path + ": non-positive dimensions");
    if (maxval != 255 && maxval != 65535) {
        throw ParseError("pnm: " + path + ": unsupported maxval " + std::to_string(maxval));
    }
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
        throw ParseError("pnm: " + path + ": malformed header");
    }
    ++pos;  // single whitespace byte before the payload
    h.width = static_cast<int>(w);
    h.height = static_cast<int>(ht);
    h.bit_depth = maxval == 255 ? 8 : 16;
    h.payload_pos = pos;
    return h;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

/// 16-bit samples are big-endian per the PNM convention.
inline double read_sample(const std::string& buf, std::size_t& pos, int bit_depth) {
    if (bit_depth == 8) {
        return static_cast<double>(static_cast<unsigned char>(buf[pos++]));
    }
    const unsigned hi = static_cast<unsigned char>(buf[pos++]);
    const unsigned lo = static_cast<unsigned char>(buf[pos++]);
    return static_cast<double>((hi << 8) | lo);
}

inline void write_sample(std::string& out, double v, int bit_depth, double maxval) {
    double clamped = std::round(v);
    if (clamped < 0) clamped = 0;
    if (clamped > maxval) clamped = maxval;
    const auto raw = static_cast<unsigned>(clamped);
    if (bit_depth == 16) out.push_back(static_cast<char>((raw >> 8) & 0xff));
    out.push_back(static_cast<char>(raw & 0xff));
}

}  // namespace detail

inline std::variant<DepthImage, ColorImage> load_pnm(const std::string& path) {
    const std::string buf = detail::read_file(path);
    const auto h = detail::parse_pnm_header(buf, path);
    const std::size_t samples =
        static_cast<std::size_t>(h.width) * h.height * (h.is_ppm ? 3 : 1);
    const std::size_t bytes = samples * (h.bit_depth == 16 ? 2 : 1);
    if (buf.size() < h.payload_pos + bytes) {
        throw ParseError("pnm: " + path + ": truncated payload");
    }
    std::size_t pos = h.payload_pos;
    if (h.is_ppm) {
        ColorImage img(h.width, h.height, h.bit_depth);
        const double maxval = img.maxval();
        for (auto& v : img.rgb) v = detail::read_sample(buf, pos, h.bit_depth) / maxval;
        return img;
    }
    DepthImage img(h.width, h.height, h.bit_depth);
    for (auto& v : img.values) v = detail::read_sample(buf, pos, h.bit_depth);
    return img;
}

inline DepthImage load_pgm(const std::string& path) {
    auto v = load_pnm(path);
    if (!std::holds_alternative<DepthImage>(v)) {
        throw ParseError("pnm: " + path + ": expected a PGM depth map, found PPM");
    }
    return std::get<DepthImage>(std::move(v));
}

inline ColorImage load_ppm(const std::string& path) {
    auto v = load_pnm(path);
    if (!std::holds_alternative<ColorImage>(v)) {
        throw ParseError("pnm: " + path + ": expected a PPM color image, found PGM");
    }
    return std::get<ColorImage>(std::move(v));
}

inline void save_pgm(const DepthImage& img, const std::string& path) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n" + std::to_string(static_cast<int>(img.maxval())) + "\n";
    out.reserve(out.size() + img.values.size() * (img.bit_depth == 16 ? 2 : 1));
    for (const double v : img.values) detail::write_sample(out, v, img.bit_depth, img.maxval());
    std::ofstream f(path, std::ios::binary);
    if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
        throw IoError("cannot write " + path);
    }
}

inline void save_ppm(const ColorImage& img, const std::string& path) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n" + std::to_string(static_cast<int>(img.maxval())) + "\n";
    const double maxval = img.maxval();
    out.reserve(out.size() + img.rgb.size() * (img.bit_depth == 16 ? 2 : 1));
    for (const double v : img.rgb) detail::write_sample(out, v * maxval, img.bit_depth, maxval);
    std::ofstream f(path, std::ios::binary);
    if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
        throw IoError("cannot write " + path);
    }
}

}  // namespace hcg
