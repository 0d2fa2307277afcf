#pragma once

// Orthonormal 2-D DCT-II on square blocks. The hash path only needs the
// 32x32 forward transform, computed as C * P * C^T with a precomputed
// basis matrix. Orthonormal scaling: alpha(0) = sqrt(1/N), else sqrt(2/N).

#include <cmath>
#include <cstddef>
#include <vector>

namespace ctv {

class Dct2d {
public:
    explicit Dct2d(int n) : n_(n), basis_(static_cast<std::size_t>(n) * n) {
        const double pi = 3.14159265358979323846;
        for (int u = 0; u < n; ++u) {
            const double alpha =
                u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (int x = 0; x < n; ++x) {
                basis_[static_cast<std::size_t>(u) * n + x] =
                    alpha * std::cos((2.0 * x + 1.0) * u * pi / (2.0 * n));
            }
        }
    }

    int size() const { return n_; }

    // out[u*n+v] = sum_{x,y} basis[u,x] * in[x*n+y] * basis[v,y]
    std::vector<double> forward(const std::vector<double>& in) const {
        const int n = n_;
        // rows: tmp = in * C^T  (transform along y)
        std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0);
        for (int x = 0; x < n; ++x) {
            for (int v = 0; v < n; ++v) {
                double acc = 0.0;
                for (int y = 0; y < n; ++y)
                    acc += in[static_cast<std::size_t>(x) * n + y] *
                           basis_[static_cast<std::size_t>(v) * n + y];
                tmp[static_cast<std::size_t>(x) * n + v] = acc;
            }
        }
        // cols: out = C * tmp
        std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
        for (int u = 0; u < n; ++u) {
            for (int v = 0; v < n; ++v) {
                double acc = 0.0;
                for (int x = 0; x < n; ++x)
                    acc += basis_[static_cast<std::size_t>(u) * n + x] *
                           tmp[static_cast<std::size_t>(x) * n + v];
                out[static_cast<std::size_t>(u) * n + v] = acc;
            }
        }
        return out;
    }

    // Inverse of the orthonormal transform (transpose in both passes).
    std::vector<double> inverse(const std::vector<double>& in) const {
        const int n = n_;
        std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0);
        for (int u = 0; u < n; ++u) {
            for (int y = 0; y < n; ++y) {
                double acc = 0.0;
                for (int v = 0; v < n; ++v)
                    acc += in[static_cast<std::size_t>(u) * n + v] *
                           basis_[static_cast<std::size_t>(v) * n + y];
                tmp[static_cast<std::size_t>(u) * n + y] = acc;
            }
        }
        std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                double acc = 0.0;
                for (int u = 0; u < n; ++u)
                    acc += basis_[static_cast<std::size_t>(u) * n + x] *
                           tmp[static_cast<std::size_t>(u) * n + y];
                out[static_cast<std::size_t>(x) * n + y] = acc;
            }
        }
        return out;
    }

private:
    int n_;
    std::vector<double> basis_;  // basis_[u*n+x]
};

}  // namespace ctv
