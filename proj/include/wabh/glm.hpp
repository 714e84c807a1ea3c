#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/normal.hpp"
#include "wabh/types.hpp"
#include "wabh/util.hpp"

namespace wabh {

inline constexpr double irls_tol = 1e-10;
inline constexpr int irls_max_iter = 50;
inline constexpr double separation_bound = 15.0;  // |beta1| on the logit scale

/// Leave-one-out total lesion burden for test m: the mean of the other
/// lesion indicators per subject, passed through h. The logit transform
/// clamps its argument into [eps, 1-eps] with eps = 1/(2(M-1)) so all-zero
/// and all-one rows stay finite.
inline std::vector<double> total_lesion_covariate(const Dataset& data, std::size_t m,
                                                  Transform h) {
    if (data.M < 2) throw dimension_error("total_lesion_covariate: need at least two tests");
    const double denom = static_cast<double>(data.M - 1);
    const double eps = 1.0 / (2.0 * denom);
    std::vector<double> out(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < data.M; ++j) total += data.x(i, j);
        double loo = (total - data.x(i, m)) / denom;
        if (h == Transform::logit_transform) {
            loo = std::clamp(loo, eps, 1.0 - eps);
            out[i] = logit(loo);
        } else {
            out[i] = loo;
        }
    }
    return out;
}

/// Same covariate for every test at once (row totals computed once).
inline std::vector<double> all_lesion_covariates(const Dataset& data, Transform h) {
    if (data.M < 2) throw dimension_error("all_lesion_covariates: need at least two tests");
    const double denom = static_cast<double>(data.M - 1);
    const double eps = 1.0 / (2.0 * denom);
    std::vector<double> totals(data.n, 0.0);
    for (std::size_t i = 0; i < data.n; ++i)
        for (std::size_t j = 0; j < data.M; ++j) totals[i] += data.x(i, j);
    std::vector<double> out(data.n * data.M);
    for (std::size_t m = 0; m < data.M; ++m) {
        for (std::size_t i = 0; i < data.n; ++i) {
            double loo = (totals[i] - data.x(i, m)) / denom;
            if (h == Transform::logit_transform) loo = logit(std::clamp(loo, eps, 1.0 - eps));
            out[m * data.n + i] = loo;
        }
    }
    return out;
}

/// Single-covariate OLS R^2: squared sample correlation, 0 for a constant
/// covariate, capped just below 1.
inline double r_squared(std::span<const double> y, std::span<const double> xplus) {
    if (y.size() != xplus.size() || y.size() < 3)
        throw dimension_error("r_squared: need matching inputs with n >= 3");
    const double n = static_cast<double>(y.size());
    double my = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        mx += xplus[i];
    }
    my /= n;
    mx /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double dy = y[i] - my, dx = xplus[i] - mx;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    double r2 = (sxy * sxy) / (sxx * syy);
    return std::min(r2, 1.0 - 1e-12);
}

/// Closed-form fit diagnostics. S_m carries the power heterogeneity across
/// tests: the nuisance fit shrinks the per-test information by (1 - R^2).
/// SE approximates the Wald standard error of the outcome coefficient; there
/// the nuisance covariate acts as a variance inflation factor, 1/(1 - R^2),
/// on top of the outcome variance.
struct SeApprox {
    double se = 0.0;
    double s_m = 0.0;
};

inline SeApprox se_approx(std::span<const double> y, double xbar, double r2) {
    if (y.size() < 2) throw dimension_error("se_approx: need n >= 2");
    if (!(xbar > 0.0 && xbar < 1.0)) throw value_error("se_approx: Xbar must be in (0,1)");
    if (!(r2 >= 0.0 && r2 < 1.0)) throw value_error("se_approx: R^2 must be in [0,1)");
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    double s2y = ss / (n - 1.0);
    double base = 1.0 / (n * xbar * (1.0 - xbar));
    SeApprox a;
    a.s_m = std::sqrt(base * (1.0 - r2));
    a.se = std::sqrt(base / (s2y * (1.0 - r2)));
    return a;
}

namespace detail {

// Cholesky solve of a small SPD system (d <= 3). Returns false when the
// matrix is not positive definite.
template <int D>
bool chol_solve(const std::array<double, D * D>& A, const std::array<double, D>& rhs,
                std::array<double, D>& x) {
    std::array<double, D * D> L{};
    for (int j = 0; j < D; ++j) {
        double diag = A[j * D + j];
        for (int k = 0; k < j; ++k) diag -= L[j * D + k] * L[j * D + k];
        if (!(diag > 0.0)) return false;
        L[j * D + j] = std::sqrt(diag);
        for (int i = j + 1; i < D; ++i) {
            double v = A[i * D + j];
            for (int k = 0; k < j; ++k) v -= L[i * D + k] * L[j * D + k];
            L[i * D + j] = v / L[j * D + j];
        }
    }
    std::array<double, D> tmp{};
    for (int i = 0; i < D; ++i) {
        double v = rhs[i];
        for (int k = 0; k < i; ++k) v -= L[i * D + k] * tmp[k];
        tmp[i] = v / L[i * D + i];
    }
    for (int i = D - 1; i >= 0; --i) {
        double v = tmp[i];
        for (int k = i + 1; k < D; ++k) v -= L[k * D + i] * x[k];
        x[i] = v / L[i * D + i];
    }
    return true;
}

// Variance of coefficient 1 from the inverse of the SPD information matrix.
template <int D>
bool chol_var11(const std::array<double, D * D>& A, double& var) {
    std::array<double, D> e{};
    e[1] = 1.0;
    std::array<double, D> col{};
    if (!chol_solve<D>(A, e, col)) return false;
    var = col[1];
    return var > 0.0;
}

template <int D>
TestSummary fit_logistic_impl(std::span<const double> y, std::span<const std::uint8_t> xm,
                              std::span<const double> xplus, double xbar, double r2) {
    const std::size_t n = xm.size();
    TestSummary out;
    out.xbar = xbar;
    out.r2 = r2;
    out.s_m = std::sqrt((1.0 - r2) / (static_cast<double>(n) * xbar * (1.0 - xbar)));

    auto row = [&](std::size_t i, std::array<double, D>& z) {
        z[0] = 1.0;
        z[1] = y[i];
        if constexpr (D == 3) z[2] = xplus[i];
    };

    std::array<double, D> beta{};
    beta[0] = logit(xbar);

    std::array<double, D * D> info{};
    double dev = std::numeric_limits<double>::infinity();
    bool converged = false;
    int extra_step = 0;  // run one clean Newton step past the tolerance
    for (int iter = 0; iter < irls_max_iter; ++iter) {
        std::array<double, D * D> A{};
        std::array<double, D> score{};
        double new_dev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, D> z;
            row(i, z);
            double eta = 0.0;
            for (int k = 0; k < D; ++k) eta += z[k] * beta[k];
            double mu = std::clamp(expit(eta), 1e-12, 1.0 - 1e-12);
            double w = mu * (1.0 - mu);
            double resid = static_cast<double>(xm[i]) - mu;
            new_dev -= 2.0 * (xm[i] ? std::log(mu) : std::log(1.0 - mu));
            for (int a = 0; a < D; ++a) {
                score[a] += z[a] * resid;
                for (int b = 0; b <= a; ++b) A[a * D + b] += w * z[a] * z[b];
            }
        }
        for (int a = 0; a < D; ++a)
            for (int b = a + 1; b < D; ++b) A[a * D + b] = A[b * D + a];
        info = A;

        if (converged) break;
        std::array<double, D> step{};
        if (!chol_solve<D>(A, score, step)) {
            out.status = FitStatus::nonconverged;
            break;
        }
        for (int k = 0; k < D; ++k) beta[k] += step[k];

        if (std::abs(beta[1]) > separation_bound) {
            beta[1] = std::copysign(separation_bound, beta[1]);
            out.status = FitStatus::separated;
            converged = true;  // one more pass recomputes the information at the cap
            continue;
        }
        double rel = std::abs(new_dev - dev) / (std::abs(new_dev) + 1e-8);
        dev = new_dev;
        if (rel < irls_tol) {
            if (extra_step++ > 0) converged = true;  // final polishing step taken
        }
        if (iter == irls_max_iter - 1 && !converged) out.status = FitStatus::nonconverged;
    }
    if (!converged && out.status == FitStatus::ok) out.status = FitStatus::nonconverged;

    double var = 0.0;
    if (!chol_var11<D>(info, var)) {
        out.status = out.status == FitStatus::ok ? FitStatus::nonconverged : out.status;
        return out;
    }
    out.beta1 = beta[1];
    out.se = std::sqrt(var);
    out.pvalue = norm_sf(out.beta1 / out.se);
    return out;
}

}  // namespace detail

/// Per-test logistic fit, Wald test against beta1 <= 0. Pass an empty xplus
/// for the intercept + outcome model.
inline TestSummary fit_logistic(std::span<const double> y, std::span<const std::uint8_t> xm,
                                std::span<const double> xplus = {}) {
    if (y.size() != xm.size() || (!xplus.empty() && xplus.size() != y.size()))
        throw dimension_error("fit_logistic: input lengths differ");
    if (y.size() < 4) throw dimension_error("fit_logistic: need n >= 4");
    for (double v : y)
        if (!std::isfinite(v)) throw value_error("fit_logistic: non-finite outcome");

    const std::size_t n = y.size();
    std::size_t ones = 0;
    for (auto v : xm) ones += (v != 0);
    double xbar = static_cast<double>(ones) / static_cast<double>(n);
    if (ones == 0 || ones == n) {
        TestSummary out;
        out.xbar = xbar;
        out.status = FitStatus::degenerate;
        return out;
    }
    double r2 = xplus.empty() ? 0.0 : r_squared(y, xplus);
    return xplus.empty() ? detail::fit_logistic_impl<2>(y, xm, xplus, xbar, r2)
                         : detail::fit_logistic_impl<3>(y, xm, xplus, xbar, r2);
}

/// Fit every test of a dataset against the leave-one-out burden covariate.
/// The map over tests is data parallel with deterministic output ordering.
inline std::vector<TestSummary> fit_all_tests(const Dataset& data,
                                              unsigned nthreads = thread_count()) {
    std::vector<double> xplus_all = all_lesion_covariates(data, data.covariate_transform);
    std::vector<TestSummary> out(data.M);
    parallel_for(
        data.M,
        [&](std::size_t m) {
            std::span<const std::uint8_t> xm(data.X.data() + m * data.n, data.n);
            std::span<const double> xplus(xplus_all.data() + m * data.n, data.n);
            out[m] = fit_logistic(data.Y, xm, xplus);
        },
        nthreads);
    return out;
}

}  // namespace wabh
