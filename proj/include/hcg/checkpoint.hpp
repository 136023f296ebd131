#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hcg/network.hpp"

namespace hcg {

// Checkpoint layout (all integers little-endian):
//   "HCGW" | u32 version | i32 scale | i32 channels | i32 aap_count
//   | u8 use_lde | u8 use_hag | u8 use_afp | f64 depth_max | u32 tensor_count
//   | per tensor: u32 name_len | name bytes | u32 rank (= 4) | u32 dims[4]
//                 | float32 payload
//   | u64 FNV-1a checksum of all preceding bytes

constexpr char kCheckpointMagic[4] = {'H', 'C', 'G', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
    std::string name;
    Shape shape;
    std::vector<float> values;
};

struct CheckpointData {
    NetworkConfig config;
    double depth_max = 0.0;
    std::vector<CheckpointTensor> tensors;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) throw ParseError("checkpoint: truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos++]) << (8 * i);
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const NetworkConfig& cfg, double depth_max,
                     const ParamStore<T>& params) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kCheckpointMagic, kCheckpointMagic + 4);
    detail::put_u32(buf, kCheckpointVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(cfg.scale));
    detail::put_u32(buf, static_cast<std::uint32_t>(cfg.channels));
    detail::put_u32(buf, static_cast<std::uint32_t>(cfg.aap_count));
    buf.push_back(cfg.use_lde ? 1 : 0);
    buf.push_back(cfg.use_hag ? 1 : 0);
    buf.push_back(cfg.use_afp ? 1 : 0);
    detail::put_f64(buf, depth_max);
    detail::put_u32(buf, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        detail::put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf.insert(buf.end(), name.begin(), name.end());
        detail::put_u32(buf, 4);
        detail::put_u32(buf, static_cast<std::uint32_t>(t->shape.n));
        detail::put_u32(buf, static_cast<std::uint32_t>(t->shape.c));
        detail::put_u32(buf, static_cast<std::uint32_t>(t->shape.h));
        detail::put_u32(buf, static_cast<std::uint32_t>(t->shape.w));
        for (const T v : t->data) detail::put_f32(buf, static_cast<float>(v));
    }
    detail::put_u64(buf, detail::fnv1a64(buf.data(), buf.size()));

    std::ofstream f(path, std::ios::binary);
    if (!f || !f.write(reinterpret_cast<const char*>(buf.data()),
                       static_cast<std::streamsize>(buf.size()))) {
        throw IoError("cannot write checkpoint " + path);
    }
}

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 12) throw ParseError("checkpoint: file too small");
    const std::uint64_t stored =
        detail::ByteReader{buf.data() + buf.size() - 8, 8}.u64();
    if (detail::fnv1a64(buf.data(), buf.size() - 8) != stored) {
        throw ChecksumError("checkpoint " + path + ": checksum mismatch");
    }

    detail::ByteReader r{buf.data(), buf.size() - 8};
    if (r.str(4) != std::string(kCheckpointMagic, 4)) {
        throw MagicError("checkpoint " + path + ": bad magic");
    }
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint " + path + ": unsupported version " +
                           std::to_string(version));
    }
    CheckpointData data;
    data.config.scale = static_cast<int>(r.u32());
    data.config.channels = static_cast<int>(r.u32());
    data.config.aap_count = static_cast<int>(r.u32());
    data.config.use_lde = r.u8() != 0;
    data.config.use_hag = r.u8() != 0;
    data.config.use_afp = r.u8() != 0;
    data.depth_max = r.f64();
    const std::uint32_t count = r.u32();
    data.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        CheckpointTensor t;
        t.name = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        if (rank != 4) throw ParseError("checkpoint: tensor " + t.name + " has rank != 4");
        t.shape.n = r.u32();
        t.shape.c = r.u32();
        t.shape.h = r.u32();
        t.shape.w = r.u32();
        const std::int64_t numel = t.shape.numel();
        t.values.resize(static_cast<std::size_t>(numel));
        for (auto& v : t.values) v = r.f32();
        data.tensors.push_back(std::move(t));
    }
    if (r.pos != r.size) throw ParseError("checkpoint: trailing bytes");
    return data;
}

/// Copies checkpoint tensors into an existing store, verifying names and
/// shapes against the active configuration.
template <typename T>
void load_into_store(const CheckpointData& data, ParamStore<T>& params) {
    if (data.tensors.size() != params.size()) {
        throw ShapeError("checkpoint holds " + std::to_string(data.tensors.size()) +
                         " tensors, active config expects " + std::to_string(params.size()));
    }
    std::size_t i = 0;
    for (auto& [name, t] : params) {
        const CheckpointTensor& src = data.tensors[i++];
        if (src.name != name) {
            throw ShapeError("checkpoint tensor '" + src.name + "' does not match expected '" +
                             name + "'");
        }
        if (!(src.shape == t->shape)) {
            throw ShapeError("checkpoint tensor '" + src.name + "' has shape " + src.shape.str() +
                             ", active config expects " + t->shape.str());
        }
        for (std::size_t k = 0; k < src.values.size(); ++k) {
            t->data[k] = static_cast<T>(src.values[k]);
        }
    }
}

/// Rebuilds the parameter set a checkpoint was saved from.
template <typename T>
HCGNetParams<T> params_from_checkpoint(const CheckpointData& data) {
    auto params = init_params<T>(data.config, 0);
    load_into_store(data, params.store);
    return params;
}

}  // namespace hcg
