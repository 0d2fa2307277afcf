#pragma once

// In-memory image: interleaved 8-bit pixels, 1 (gray) or 3 (RGB) channels.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ctv {

struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("bad image dimensions");
        pixels.assign(static_cast<std::size_t>(w) * h * c, 0);
    }

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool empty() const { return pixels.empty(); }
};

// Rec.601 luma, rounded to nearest; gray images pass through.
inline std::vector<std::uint8_t> luma_plane(const Image& img) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(img.width) * img.height);
    if (img.channels == 1) {
        out = img.pixels;
        return out;
    }
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.pixels[i * 3 + 0];
        const double g = img.pixels[i * 3 + 1];
        const double b = img.pixels[i * 3 + 2];
        double y = 0.299 * r + 0.587 * g + 0.114 * b;
        if (y < 0.0) y = 0.0;
        if (y > 255.0) y = 255.0;
        out[i] = static_cast<std::uint8_t>(y + 0.5);
    }
    return out;
}

}  // namespace ctv
