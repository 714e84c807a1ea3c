#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/procedures.hpp"
#include "wabh/types.hpp"
#include "wabh/util.hpp"

namespace wabh {

inline constexpr double spatial_default_tau_s = 0.9;
inline constexpr double spatial_default_bandwidth = 4.5;  // in grid spacings

/// Constant prior from the Storey estimator: p_m = 1 - pi0_hat for all m.
inline PriorField constant_prior(const PValueVector& p, double kappa = 0.5) {
    double pi0 = storey_pi0(p.values, kappa);
    PriorField f;
    f.p.assign(p.values.size(), 1.0 - pi0);
    f.source = PriorSource::constant;
    std::ostringstream meta;
    meta << "storey kappa=" << kappa;
    f.meta = meta.str();
    return f;
}

/// Kernel-screening prior over the grid: the local fraction of p-values
/// above tau_s, Gaussian-weighted by distance, estimates the local null
/// share. Kernel sums are truncated at radius 4h (tail mass below 3e-4).
/// Only candidate tests enter the sums; non-candidates receive p = 0.
inline PriorField spatial_kernel_prior(const PValueVector& p, const HypothesisGrid& grid,
                                       double bandwidth = spatial_default_bandwidth,
                                       double tau_s = spatial_default_tau_s) {
    if (p.values.size() != grid.M)
        throw dimension_error("spatial_kernel_prior: p-value length != grid size");
    if (!(bandwidth > 0.0)) throw value_error("spatial_kernel_prior: bandwidth must be positive");
    if (!(tau_s > 0.0 && tau_s < 1.0))
        throw value_error("spatial_kernel_prior: tau_s must be in (0,1)");

    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * bandwidth)));
    const int r2max = radius * radius * (grid.dims == 3 ? 3 : 2);
    // Kernel values by integer squared distance.
    std::vector<double> kernel(static_cast<std::size_t>(r2max) + 1);
    for (int d2 = 0; d2 <= r2max; ++d2)
        kernel[d2] = std::exp(-static_cast<double>(d2) / (2.0 * bandwidth * bandwidth));

    // Bucket candidate tests by coordinates for the box sweep.
    int minc[3] = {0, 0, 0}, maxc[3] = {0, 0, 0};
    for (std::size_t m = 0; m < grid.M; ++m) {
        for (int d = 0; d < 3; ++d) {
            minc[d] = std::min(minc[d], grid.coords[m][d]);
            maxc[d] = std::max(maxc[d], grid.coords[m][d]);
        }
    }
    const int nx = maxc[0] - minc[0] + 1, ny = maxc[1] - minc[1] + 1, nz = maxc[2] - minc[2] + 1;
    auto cell = [&](const std::array<int, 3>& c) {
        return (static_cast<std::size_t>(c[2] - minc[2]) * ny + (c[1] - minc[1])) * nx +
               (c[0] - minc[0]);
    };
    std::vector<std::int64_t> occupant(static_cast<std::size_t>(nx) * ny * nz, -1);
    for (std::size_t m = 0; m < grid.M; ++m)
        if (grid.candidate_mask.empty() || grid.candidate_mask[m]) occupant[cell(grid.coords[m])] = static_cast<std::int64_t>(m);

    PriorField f;
    f.p.assign(grid.M, 0.0);
    f.source = PriorSource::spatial_kernel;
    std::ostringstream meta;
    meta << "kernel h=" << bandwidth << " tau_s=" << tau_s;
    f.meta = meta.str();

    const int zr = grid.dims == 3 ? radius : 0;
    parallel_for(grid.M, [&](std::size_t m) {
        if (!(grid.candidate_mask.empty() || grid.candidate_mask[m])) return;
        const auto& c = grid.coords[m];
        double wsum = 0.0, high = 0.0;
        for (int dz = -zr; dz <= zr; ++dz) {
            int z = c[2] + dz;
            if (z < minc[2] || z > maxc[2]) continue;
            for (int dy = -radius; dy <= radius; ++dy) {
                int y = c[1] + dy;
                if (y < minc[1] || y > maxc[1]) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    int x = c[0] + dx;
                    if (x < minc[0] || x > maxc[0]) continue;
                    int d2 = dx * dx + dy * dy + dz * dz;
                    if (d2 > r2max) continue;
                    std::int64_t j =
                        occupant[(static_cast<std::size_t>(z - minc[2]) * ny + (y - minc[1])) * nx +
                                 (x - minc[0])];
                    if (j < 0) continue;
                    double k = kernel[d2];
                    wsum += k;
                    high += k * (p.values[static_cast<std::size_t>(j)] > tau_s);
                }
            }
        }
        if (wsum <= 0.0) return;
        double null_share = std::min(1.0, high / ((1.0 - tau_s) * wsum));
        f.p[m] = 1.0 - null_share;
    });
    return f;
}

}  // namespace wabh
