// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <zlib.h>

namespace arrivalnet {

namespace {

constexpr char kMagic[] = "ARRIVALNET/1";
constexpr size_t kMagicLen = sizeof(kMagic) - 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("checkpoint: truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32_le(std::vector<unsigned char>& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    out.push_back(static_cast<unsigned char>(bits));
    out.push_back(static_cast<unsigned char>(bits >> 8));
    out.push_back(static_cast<unsigned char>(bits >> 16));
    out.push_back(static_cast<unsigned char>(bits >> 24));
}

float get_f32_le(const unsigned char* p) {
    const uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                          (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_checkpoint(const ModelConfig& cfg, const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");

    out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
    const std::string header = cfg.to_json();
    put_u32(out, static_cast<uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    uLong crc = crc32(0L, Z_NULL, 0);
    for (const auto& [name, tensor] : params.named()) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<uint32_t>(tensor.rank()));
        for (size_t i = 0; i < tensor.rank(); ++i) {
            put_u32(out, static_cast<uint32_t>(tensor.dim(i)));
        }
        std::vector<unsigned char> payload;
        payload.reserve(static_cast<size_t>(tensor.numel()) * 4);
        for (double v : tensor.data()) put_f32_le(payload, static_cast<float>(v));
        crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size()));
    }
    put_u32(out, static_cast<uint32_t>(crc));
    if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);

    char magic[kMagicLen];
    in.read(magic, static_cast<std::streamsize>(kMagicLen));
    if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) {
        throw FormatError("load_checkpoint: bad magic, not a model file");
    }

    const uint32_t header_len = get_u32(in);
    if (header_len > (1u << 20)) throw FormatError("load_checkpoint: implausible header length");
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (!in) throw FormatError("checkpoint: truncated header");

    Checkpoint ck{ModelConfig::from_json(header), {}};
    ck.config.validate();
    ck.params = init_params(ck.config, 0);

    uLong crc = crc32(0L, Z_NULL, 0);
    for (const auto& [name, tensor] : ck.params.named()) {
        const uint32_t name_len = get_u32(in);
        if (name_len > 4096) throw FormatError("load_checkpoint: implausible block name length");
        std::string got(name_len, '\0');
        in.read(got.data(), name_len);
        if (!in) throw FormatError("checkpoint: truncated block name");
        if (got != name) {
            throw FormatError("load_checkpoint: expected block '" + name + "', found '" + got +
                              "'");
        }
        const uint32_t ndim = get_u32(in);
        if (ndim != tensor.rank()) {
            throw ContractError("load_checkpoint: rank mismatch for block '" + name + "'");
        }
        int64_t numel = 1;
        for (uint32_t i = 0; i < ndim; ++i) {
            const uint32_t d = get_u32(in);
            if (static_cast<int64_t>(d) != tensor.dim(i)) {
                throw ContractError("load_checkpoint: shape mismatch for block '" + name + "'");
            }
            numel *= d;
        }
        std::vector<unsigned char> payload(static_cast<size_t>(numel) * 4);
        in.read(reinterpret_cast<char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
        if (!in) throw FormatError("checkpoint: truncated payload for block '" + name + "'");
        crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
        auto dst = const_cast<Tensor&>(tensor).mutable_data();
        for (int64_t i = 0; i < numel; ++i) {
            dst[i] = static_cast<double>(get_f32_le(payload.data() + i * 4));
        }
    }
    const uint32_t stored_crc = get_u32(in);
    if (stored_crc != static_cast<uint32_t>(crc)) {
        throw FormatError("load_checkpoint: CRC mismatch, file is corrupted");
    }
    return ck;
}

}  // namespace arrivalnet
