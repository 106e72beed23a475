#pragma once

// Little-endian scalar packing shared by the weight container and WAV code.

#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

namespace tcwunet::detail {

inline void put_u16_le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint16_t get_u16_le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline void put_f32_le(std::vector<std::uint8_t>& out, float v) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

inline float get_f32_le(const std::uint8_t* p) {
    return std::bit_cast<float>(get_u32_le(p));
}

// Bulk float copy; byte-swaps only on big-endian hosts.
inline void put_f32_block_le(std::vector<std::uint8_t>& out, const float* src,
                             std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        const std::size_t at = out.size();
        out.resize(at + count * 4);
        std::memcpy(out.data() + at, src, count * 4);
    } else {
        for (std::size_t i = 0; i < count; ++i) put_f32_le(out, src[i]);
    }
}

inline void get_f32_block_le(const std::uint8_t* src, float* dst, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(dst, src, count * 4);
    } else {
        for (std::size_t i = 0; i < count; ++i) dst[i] = get_f32_le(src + i * 4);
    }
}

} // namespace tcwunet::detail
