#pragma once

// 64-bit perceptual hash. Pipeline: luma -> bicubic resample to 32x32 ->
// orthonormal 2-D DCT-II -> top-left 8x8 coefficient block -> median of
// those 64 -> bit set iff coefficient > median. Bit 63 (MSB) carries the
// DC coefficient (u=0,v=0); bit index is 63 - (u*8 + v).
//
// The DCT is computed on the DC-shifted plane (pixels minus the first
// pixel value) with the DC term restored afterwards. By linearity the
// result is identical, but a constant image now yields exact zeros in
// every AC slot instead of 1e-13 round-off noise, so flat images hash
// reproducibly: nonzero constant gray -> 0x8000000000000000.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "ctv/dct.hpp"
#include "ctv/image.hpp"
#include "ctv/resample.hpp"

namespace ctv {

inline const Dct2d& phash_dct() {
    static const Dct2d dct(32);
    return dct;
}

inline std::uint64_t phash64(const Image& img) {
    const auto luma = luma_plane(img);
    std::vector<double> plane(luma.size());
    for (std::size_t i = 0; i < luma.size(); ++i)
        plane[i] = static_cast<double>(luma[i]);

    auto small = resample_plane(plane, img.width, img.height, 32, 32);
    for (double& v : small) v = static_cast<double>(clamp_u8(v));

    const double dc_value = small[0];
    for (double& v : small) v -= dc_value;
    auto coeffs = phash_dct().forward(small);
    coeffs[0] += 32.0 * dc_value;  // DC basis sums to N * alpha = 32 * (1/32)

    double block[64];
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v)
            block[u * 8 + v] = coeffs[static_cast<std::size_t>(u) * 32 + v];

    double sorted[64];
    std::copy(block, block + 64, sorted);
    std::sort(sorted, sorted + 64);
    const double median = 0.5 * (sorted[31] + sorted[32]);

    std::uint64_t hash = 0;
    for (int i = 0; i < 64; ++i) {
        if (block[i] > median) hash |= (1ULL << (63 - i));
    }
    return hash;
}

inline int hamming_distance(std::uint64_t a, std::uint64_t b) {
    return std::popcount(a ^ b);
}

inline std::string phash_hex(std::uint64_t h) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

inline bool parse_phash_hex(const std::string& text, std::uint64_t& out) {
    if (text.size() != 16) return false;
    std::uint64_t h = 0;
    for (char c : text) {
        int digit;
        if (c >= '0' && c <= '9')
            digit = c - '0';
        else if (c >= 'a' && c <= 'f')
            digit = c - 'a' + 10;
        else
            return false;
        h = (h << 4) | static_cast<std::uint64_t>(digit);
    }
    out = h;
    return true;
}

}  // namespace ctv
