#pragma once

// Separable bicubic resampling with the Catmull-Rom kernel (a = -0.5).
// Source coordinates use pixel-center mapping, edges clamp, and each
// 4-tap weight set is renormalized so rows/columns near the border keep
// unit gain. Identity-size resampling reproduces the input exactly.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ctv/image.hpp"

namespace ctv {

// Catmull-Rom cubic: a = -0.5.
inline double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return a * (((t - 5.0) * t + 8.0) * t - 4.0);
    return 0.0;
}

namespace detail {

struct TapSet {
    int idx[4];
    double w[4];
};

inline std::vector<TapSet> make_taps(int src_n, int dst_n) {
    std::vector<TapSet> taps(static_cast<std::size_t>(dst_n));
    const double scale = static_cast<double>(src_n) / dst_n;
    for (int d = 0; d < dst_n; ++d) {
        const double center = (d + 0.5) * scale - 0.5;
        const int base = static_cast<int>(std::floor(center)) - 1;
        TapSet& t = taps[static_cast<std::size_t>(d)];
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            int idx = base + k;
            t.w[k] = cubic_weight(center - idx);
            if (idx < 0) idx = 0;
            if (idx >= src_n) idx = src_n - 1;
            t.idx[k] = idx;
            sum += t.w[k];
        }
        for (double& w : t.w) w /= sum;
    }
    return taps;
}

}  // namespace detail

// Resamples one plane of doubles; used directly by the hash pipeline.
inline std::vector<double> resample_plane(const std::vector<double>& src, int sw,
                                          int sh, int dw, int dh) {
    if (sw <= 0 || sh <= 0 || dw <= 0 || dh <= 0)
        throw std::invalid_argument("bad resample dimensions");
    const auto xt = detail::make_taps(sw, dw);
    const auto yt = detail::make_taps(sh, dh);

    // Horizontal pass: sw x sh -> dw x sh.
    std::vector<double> mid(static_cast<std::size_t>(dw) * sh);
    for (int y = 0; y < sh; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * sw;
        for (int x = 0; x < dw; ++x) {
            const auto& t = xt[static_cast<std::size_t>(x)];
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += t.w[k] * row[t.idx[k]];
            mid[static_cast<std::size_t>(y) * dw + x] = acc;
        }
    }

    // Vertical pass: dw x sh -> dw x dh.
    std::vector<double> out(static_cast<std::size_t>(dw) * dh);
    for (int y = 0; y < dh; ++y) {
        const auto& t = yt[static_cast<std::size_t>(y)];
        for (int x = 0; x < dw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += t.w[k] * mid[static_cast<std::size_t>(t.idx[k]) * dw + x];
            out[static_cast<std::size_t>(y) * dw + x] = acc;
        }
    }
    return out;
}

inline std::uint8_t clamp_u8(double v) {
    if (v < 0.0) return 0;
    if (v > 255.0) return 255;
    return static_cast<std::uint8_t>(v + 0.5);
}

// Resamples an interleaved 8-bit image channel by channel.
inline Image resample_bicubic(const Image& src, int dw, int dh) {
    if (src.empty()) throw std::invalid_argument("resample of empty image");
    Image dst(dw, dh, src.channels);
    const std::size_t plane_n = static_cast<std::size_t>(src.width) * src.height;
    std::vector<double> plane(plane_n);
    for (int c = 0; c < src.channels; ++c) {
        for (std::size_t i = 0; i < plane_n; ++i)
            plane[i] = src.pixels[i * src.channels + c];
        const auto scaled = resample_plane(plane, src.width, src.height, dw, dh);
        const std::size_t out_n = scaled.size();
        for (std::size_t i = 0; i < out_n; ++i)
            dst.pixels[i * dst.channels + c] = clamp_u8(scaled[i]);
    }
    return dst;
}

}  // namespace ctv
