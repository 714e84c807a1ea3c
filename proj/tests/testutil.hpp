#pragma once

// Shared oracles for the test suites: these stay independent of the library
// code paths they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace testutil {

/// One-sample Kolmogorov-Smirnov statistic against Uniform(0,1).
inline double ks_statistic_uniform(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(x[i] - lo), std::abs(x[i] - hi)));
    }
    return d;
}

/// Asymptotic KS p-value (Kolmogorov distribution with the small-sample
/// correction).
inline double ks_pvalue(double d, std::size_t n) {
    double sn = std::sqrt(static_cast<double>(n));
    double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Brute-force step-up oracle: test every candidate threshold
/// m*alpha/(pi0*M) and keep the largest self-consistent one.
struct StepupOracle {
    double threshold = 0.0;
    std::vector<char> decisions;
    std::size_t n_rejected = 0;
};

inline StepupOracle stepup_oracle(std::span<const double> q, double alpha, double pi0) {
    const std::size_t M = q.size();
    std::size_t k = 0;
    for (std::size_t m = 1; m <= M; ++m) {
        double cutoff = static_cast<double>(m) * alpha / (pi0 * static_cast<double>(M));
        std::size_t count = 0;
        for (double v : q) count += (v <= cutoff);
        if (count >= m) k = m;
    }
    StepupOracle out;
    out.decisions.assign(M, 0);
    if (k == 0) return out;
    out.threshold = std::min(alpha, static_cast<double>(k) * alpha / (pi0 * static_cast<double>(M)));
    for (std::size_t m = 0; m < M; ++m)
        if (q[m] <= out.threshold) {
            out.decisions[m] = 1;
            ++out.n_rejected;
        }
    return out;
}

/// Closed-form 2x2 log-odds oracle for logistic regression with a single
/// binary regressor: beta1 = log(ad/(bc)), SE = sqrt(1/a+1/b+1/c+1/d) with
/// a = #{y=1,x=1}, b = #{y=1,x=0}, c = #{y=0,x=1}, d = #{y=0,x=0}.
struct TwoByTwo {
    double beta1 = 0.0;
    double se = 0.0;
};

inline TwoByTwo log_odds_oracle(double a, double b, double c, double d) {
    TwoByTwo o;
    o.beta1 = std::log(a * d / (b * c));
    o.se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    return o;
}

/// Trapezoid quadrature for E[f(Z)], Z standard normal.
template <class F>
double gauss_expectation(F f, double lo = -10.0, double hi = 10.0, int steps = 200000) {
    const double h = (hi - lo) / steps;
    double sum = 0.0;
    for (int i = 0; i <= steps; ++i) {
        double z = lo + i * h;
        double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        sum += w * f(z) * std::exp(-0.5 * z * z);
    }
    return sum * h / std::sqrt(2.0 * M_PI);
}

}  // namespace testutil
