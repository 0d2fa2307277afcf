#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctv/dct.hpp"
#include "ctv/image.hpp"
#include "ctv/phash.hpp"
#include "ctv/resample.hpp"
#include "ctv/rng.hpp"

namespace {

ctv::Image random_image(int w, int h, int channels, std::uint64_t seed) {
    ctv::Image img(w, h, channels);
    ctv::Xoshiro256 rng(seed);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Direct 2-D evaluation of the clamped Catmull-Rom resample; no separable
// passes, so it cross-checks the production tap/normalization logic.
std::vector<double> resample_plane_direct(const std::vector<double>& src, int sw,
                                          int sh, int dw, int dh) {
    std::vector<double> out(static_cast<std::size_t>(dw) * dh, 0.0);
    for (int dy = 0; dy < dh; ++dy) {
        const double cy = (dy + 0.5) * sh / static_cast<double>(dh) - 0.5;
        const int by = static_cast<int>(std::floor(cy)) - 1;
        double wy[4];
        double sy = 0.0;
        for (int j = 0; j < 4; ++j) {
            wy[j] = ctv::cubic_weight(cy - (by + j));
            sy += wy[j];
        }
        for (int dx = 0; dx < dw; ++dx) {
            const double cx = (dx + 0.5) * sw / static_cast<double>(dw) - 0.5;
            const int bx = static_cast<int>(std::floor(cx)) - 1;
            double wx[4];
            double sx = 0.0;
            for (int k = 0; k < 4; ++k) {
                wx[k] = ctv::cubic_weight(cx - (bx + k));
                sx += wx[k];
            }
            double acc = 0.0;
            for (int j = 0; j < 4; ++j) {
                int iy = by + j;
                iy = iy < 0 ? 0 : (iy >= sh ? sh - 1 : iy);
                for (int k = 0; k < 4; ++k) {
                    int ix = bx + k;
                    ix = ix < 0 ? 0 : (ix >= sw ? sw - 1 : ix);
                    acc += wy[j] * wx[k] * src[static_cast<std::size_t>(iy) * sw + ix];
                }
            }
            out[static_cast<std::size_t>(dy) * dw + dx] = acc / (sx * sy);
        }
    }
    return out;
}

// Textbook O(N^4) orthonormal DCT-II.
std::vector<double> dct2_direct(const std::vector<double>& p, int n) {
    const double pi = 3.14159265358979323846;
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int u = 0; u < n; ++u) {
        const double au = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int v = 0; v < n; ++v) {
            const double av = v == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            double acc = 0.0;
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    acc += p[static_cast<std::size_t>(x) * n + y] *
                           std::cos((2.0 * x + 1.0) * u * pi / (2.0 * n)) *
                           std::cos((2.0 * y + 1.0) * v * pi / (2.0 * n));
            out[static_cast<std::size_t>(u) * n + v] = au * av * acc;
        }
    }
    return out;
}

// Independent end-to-end hash: direct resample, plain (unshifted) direct
// DCT, median via full sort, bit 63 - (u*8+v) set iff coeff > median.
std::uint64_t phash64_reference(const ctv::Image& img) {
    const auto luma = ctv::luma_plane(img);
    std::vector<double> plane(luma.begin(), luma.end());
    auto small = resample_plane_direct(plane, img.width, img.height, 32, 32);
    for (double& v : small) v = static_cast<double>(ctv::clamp_u8(v));
    const auto coeffs = dct2_direct(small, 32);

    std::vector<double> block(64);
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v)
            block[static_cast<std::size_t>(u) * 8 + v] =
                coeffs[static_cast<std::size_t>(u) * 32 + v];
    auto sorted = block;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[31] + sorted[32]);
    std::uint64_t hash = 0;
    for (int i = 0; i < 64; ++i)
        if (block[static_cast<std::size_t>(i)] > median) hash |= (1ULL << (63 - i));
    return hash;
}

}  // namespace

TEST_CASE("cubic kernel hits the Catmull-Rom anchor values") {
    CHECK(ctv::cubic_weight(0.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(ctv::cubic_weight(1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(ctv::cubic_weight(-1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(ctv::cubic_weight(2.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(ctv::cubic_weight(0.5) == Catch::Approx(0.5625).margin(1e-15));
    CHECK(ctv::cubic_weight(1.5) == Catch::Approx(-0.0625).margin(1e-15));
}

TEST_CASE("cubic kernel taps form a partition of unity") {
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        const double s = ctv::cubic_weight(t + 1.0) + ctv::cubic_weight(t) +
                         ctv::cubic_weight(t - 1.0) + ctv::cubic_weight(t - 2.0);
        REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("same-size resample is the identity") {
    const auto img = random_image(23, 17, 3, 101);
    const auto out = ctv::resample_bicubic(img, 23, 17);
    REQUIRE(out.pixels == img.pixels);
}

TEST_CASE("separable resample matches direct 2-D evaluation") {
    ctv::Xoshiro256 rng(7);
    const int cases[][4] = {
        {40, 30, 32, 32}, {17, 53, 32, 32}, {32, 32, 32, 32},
        {200, 150, 32, 32}, {9, 9, 32, 32}, {64, 48, 224, 224},
    };
    for (const auto& c : cases) {
        std::vector<double> plane(static_cast<std::size_t>(c[0]) * c[1]);
        for (auto& v : plane) v = 255.0 * rng.next_double();
        const auto fast = ctv::resample_plane(plane, c[0], c[1], c[2], c[3]);
        const auto slow = resample_plane_direct(plane, c[0], c[1], c[2], c[3]);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i)
            REQUIRE(fast[i] == Catch::Approx(slow[i]).margin(1e-9));
    }
}

TEST_CASE("upscale of a constant plane stays constant") {
    std::vector<double> plane(static_cast<std::size_t>(10) * 10, 77.0);
    const auto out = ctv::resample_plane(plane, 10, 10, 37, 41);
    for (double v : out) REQUIRE(v == Catch::Approx(77.0).margin(1e-9));
}

TEST_CASE("fast DCT agrees with the direct N^4 formula") {
    for (std::uint64_t seed : {1ULL, 2ULL}) {
        ctv::Xoshiro256 rng(seed);
        const int n = 32;
        std::vector<double> p(static_cast<std::size_t>(n) * n);
        for (auto& v : p) v = 255.0 * rng.next_double();
        const auto fast = ctv::Dct2d(n).forward(p);
        const auto slow = dct2_direct(p, n);
        for (std::size_t i = 0; i < fast.size(); ++i)
            REQUIRE(fast[i] == Catch::Approx(slow[i]).margin(1e-8));
    }
}

TEST_CASE("DCT round-trips and preserves energy") {
    ctv::Xoshiro256 rng(3);
    const int n = 32;
    std::vector<double> p(static_cast<std::size_t>(n) * n);
    for (auto& v : p) v = 255.0 * rng.next_double() - 128.0;
    const ctv::Dct2d dct(n);
    const auto coeffs = dct.forward(p);
    const auto back = dct.inverse(coeffs);
    double e_in = 0.0, e_out = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        REQUIRE(back[i] == Catch::Approx(p[i]).margin(1e-9));
        e_in += p[i] * p[i];
        e_out += coeffs[i] * coeffs[i];
    }
    REQUIRE(e_out == Catch::Approx(e_in).epsilon(1e-12));
}

TEST_CASE("hash matches an independent end-to-end implementation") {
    const struct {
        int w, h, c;
        std::uint64_t seed;
    } cases[] = {
        {64, 64, 1, 11}, {100, 80, 3, 12}, {33, 47, 3, 13},
        {320, 240, 3, 14}, {16, 16, 1, 15}, {250, 250, 3, 16},
    };
    for (const auto& c : cases) {
        const auto img = random_image(c.w, c.h, c.c, c.seed);
        REQUIRE(ctv::phash64(img) == phash64_reference(img));
    }
}

TEST_CASE("constant nonzero image hashes to DC-only bit") {
    for (std::uint8_t gray : {1, 127, 200, 255}) {
        ctv::Image img(50, 40, 3);
        for (auto& p : img.pixels) p = gray;
        REQUIRE(ctv::phash64(img) == 0x8000000000000000ULL);
    }
}

TEST_CASE("all-black image hashes to zero") {
    ctv::Image img(64, 64, 1);
    REQUIRE(ctv::phash64(img) == 0);
}

TEST_CASE("at most half the hash bits can be set") {
    for (std::uint64_t seed = 20; seed < 40; ++seed) {
        const auto img = random_image(48, 48, 3, seed);
        const auto h = ctv::phash64(img);
        REQUIRE(std::popcount(h) <= 32);
    }
}

TEST_CASE("DC coefficient lands in the most significant bit") {
    // A bright textured image has a dominant positive DC term.
    auto img = random_image(60, 60, 1, 42);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(128 + p / 2);
    REQUIRE((ctv::phash64(img) >> 63) == 1);
}

TEST_CASE("hash ignores a small uniform brightness shift") {
    auto img = random_image(80, 60, 1, 55);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p % 200);
    auto shifted = img;
    for (auto& p : shifted.pixels) p = static_cast<std::uint8_t>(p + 3);
    REQUIRE(ctv::hamming_distance(ctv::phash64(img), ctv::phash64(shifted)) <= 2);
}

TEST_CASE("hamming distance behaves like a metric") {
    const auto a = ctv::phash64(random_image(40, 40, 3, 60));
    const auto b = ctv::phash64(random_image(40, 40, 3, 61));
    const auto c = ctv::phash64(random_image(40, 40, 3, 62));
    CHECK(ctv::hamming_distance(a, a) == 0);
    CHECK(ctv::hamming_distance(a, b) == ctv::hamming_distance(b, a));
    CHECK(ctv::hamming_distance(a, c) <=
          ctv::hamming_distance(a, b) + ctv::hamming_distance(b, c));
    CHECK(ctv::hamming_distance(0x0ULL, ~0x0ULL) == 64);
}

TEST_CASE("hex serialization round-trips") {
    for (std::uint64_t h : {0ULL, 0x8000000000000000ULL, 0xdeadbeefcafe1234ULL,
                            ~0ULL, 0x0123456789abcdefULL}) {
        const auto text = ctv::phash_hex(h);
        REQUIRE(text.size() == 16);
        std::uint64_t back = 0;
        REQUIRE(ctv::parse_phash_hex(text, back));
        REQUIRE(back == h);
    }
    CHECK(ctv::phash_hex(0x8000000000000000ULL) == "8000000000000000");
    std::uint64_t sink = 0;
    CHECK_FALSE(ctv::parse_phash_hex("ABCDEF0123456789", sink));  // uppercase
    CHECK_FALSE(ctv::parse_phash_hex("123", sink));
    CHECK_FALSE(ctv::parse_phash_hex("ghijklmnopqrstuv", sink));
}

TEST_CASE("resampling to thumbnail-scale keeps structure apart from noise") {
    // Two very different images should land far apart.
    ctv::Image left(100, 100, 1), right(100, 100, 1);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x) {
            left.at(x, y, 0) = static_cast<std::uint8_t>(x < 50 ? 230 : 20);
            right.at(x, y, 0) = static_cast<std::uint8_t>(y < 50 ? 230 : 20);
        }
    REQUIRE(ctv::hamming_distance(ctv::phash64(left), ctv::phash64(right)) > 10);
}
