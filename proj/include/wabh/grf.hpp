#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "wabh/error.hpp"

namespace wabh {

inline constexpr double grf_jitter = 1e-8;

namespace detail {

// Dense lower Cholesky of the 1-D squared-exponential kernel
// exp(-(d/s)^2) with a small diagonal jitter. The kernel matrix is
// numerically rank deficient for large s, so the jitter is required.
inline std::vector<double> se_kernel_chol(int n, double s) {
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = static_cast<double>(i - j) / s;
            a[static_cast<std::size_t>(i) * n + j] = std::exp(-d * d) + (i == j ? grf_jitter : 0.0);
        }
    // in-place lower Cholesky
    for (int j = 0; j < n; ++j) {
        double diag = a[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            double v = a[static_cast<std::size_t>(j) * n + k];
            diag -= v * v;
        }
        if (!(diag > 0.0))
            throw numeric_error("grf: covariance not positive definite after jitter");
        double ljj = std::sqrt(diag);
        a[static_cast<std::size_t>(j) * n + j] = ljj;
        for (int i = j + 1; i < n; ++i) {
            double v = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                v -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
            a[static_cast<std::size_t>(i) * n + j] = v / ljj;
        }
        for (int k = j + 1; k < n; ++k) a[static_cast<std::size_t>(j) * n + k] = 0.0;
    }
    return a;
}

}  // namespace detail

/// Sample a zero-mean Gaussian random field on an nx-by-ny grid with
/// covariance v * exp(-(||dz||_2 / s)^2). The squared-exponential kernel is
/// separable across axes, so the field is L_x Z L_y^T for iid normal Z and
/// per-axis Cholesky factors; this is exact up to the diagonal jitter.
/// Output is row-major with x fastest, matching HypothesisGrid::regular2d.
inline std::vector<double> grf_sample(int nx, int ny, double s, double v,
                                      std::mt19937_64& rng) {
    if (nx < 1 || ny < 1) throw value_error("grf_sample: grid must be nonempty");
    if (!(s > 0.0)) throw value_error("grf_sample: scale must be positive");
    if (v < 0.0) throw value_error("grf_sample: variance must be nonnegative");
    const std::size_t m = static_cast<std::size_t>(nx) * ny;
    if (v == 0.0) return std::vector<double>(m, 0.0);

    std::vector<double> lx = detail::se_kernel_chol(nx, s);
    std::vector<double> ly = nx == ny ? lx : detail::se_kernel_chol(ny, s);

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(m);
    for (auto& e : z) e = normal(rng);

    // tmp = L_x Z  (Z indexed [x][y])
    std::vector<double> tmp(m, 0.0);
    for (int x = 0; x < nx; ++x)
        for (int k = 0; k <= x; ++k) {
            double l = lx[static_cast<std::size_t>(x) * nx + k];
            if (l == 0.0) continue;
            const double* zrow = z.data() + static_cast<std::size_t>(k) * ny;
            double* trow = tmp.data() + static_cast<std::size_t>(x) * ny;
            for (int y = 0; y < ny; ++y) trow[y] += l * zrow[y];
        }
    // field[x][y] = sum_k tmp[x][k] L_y[y][k], emitted x-fastest
    const double scale = std::sqrt(v) / (1.0 + grf_jitter);
    std::vector<double> field(m);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double acc = 0.0;
            const double* trow = tmp.data() + static_cast<std::size_t>(x) * ny;
            const double* lrow = ly.data() + static_cast<std::size_t>(y) * ny;
            for (int k = 0; k <= y; ++k) acc += trow[k] * lrow[k];
            field[static_cast<std::size_t>(y) * nx + x] = scale * acc;
        }
    return field;
}

}  // namespace wabh
