#pragma once

// Deterministic random-number utilities. Split membership, shuffles and
// synthetic rendering all draw from xoshiro256** seeded via splitmix64,
// with hand-rolled bounded draws, so that the same seed reproduces the
// same artifacts bit-for-bit on every platform and standard library.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace ctv {

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound); rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller; the spare value is cached.
    double normal(double mean, double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return mean + sigma * radius * std::cos(angle);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Derives an independent stream from a base seed plus string tags
// (protocol, team, ...). Tag order matters.
inline Xoshiro256 derive_stream(std::uint64_t seed,
                                std::initializer_list<std::string_view> tags) {
    std::uint64_t h = seed ^ 0x6a09e667f3bcc908ULL;
    for (const auto& tag : tags) {
        std::uint64_t mix = h ^ fnv1a64(tag);
        h = splitmix64_next(mix);
    }
    return Xoshiro256(h);
}

inline Xoshiro256 derive_stream(std::uint64_t seed, std::string_view tag,
                                std::uint64_t index) {
    std::uint64_t mix = (seed ^ 0x6a09e667f3bcc908ULL) ^ fnv1a64(tag);
    std::uint64_t h = splitmix64_next(mix);
    std::uint64_t mix2 = h ^ (index * 0x9e3779b97f4a7c15ULL + 1);
    return Xoshiro256(splitmix64_next(mix2));
}

template <typename T>
void fisher_yates(std::vector<T>& items, Xoshiro256& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace ctv
