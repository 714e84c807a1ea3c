#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/normal.hpp"
#include "wabh/types.hpp"
#include "wabh/util.hpp"

namespace wabh {

inline constexpr double lagrange_tol = 1e-8;
inline constexpr double lambda_bracket_lo = 1e-8;
inline constexpr double lambda_bracket_hi = 1e8;
inline constexpr double prior_clamp_eps = 1e-6;

/// Power of a one-sided size-t normal test with effect-over-SE g.
inline double power_function(double t, double g) {
    if (!(t > 0.0 && t < 1.0)) throw value_error("power_function: t must be in (0,1)");
    return norm_sf(norm_sf_inv(t) - g);
}

/// Alternative density of the p-value at t: the derivative of the power
/// function, evaluated in log space so large g cannot overflow.
inline double density_ratio(double t, double g) {
    if (!(t > 0.0 && t < 1.0)) throw value_error("density_ratio: t must be in (0,1)");
    return std::exp(g * norm_sf_inv(t) - 0.5 * g * g);
}

/// c_m(lambda) = lambda (1-p)(1-alpha) / {p (1 + lambda alpha)}.
inline double c_of_lambda(double lambda, double p, double alpha) {
    if (!(lambda > 0.0)) throw value_error("c_of_lambda: lambda must be positive");
    p = std::clamp(p, prior_clamp_eps, 1.0 - prior_clamp_eps);
    return lambda * (1.0 - p) * (1.0 - alpha) / (p * (1.0 + lambda * alpha));
}

/// z-value whose upper-tail probability is the optimal per-test size:
/// t_m(lambda) = norm_sf(0.5 g + log(c)/g). Working on the z scale avoids a
/// tail round-trip when the power at the threshold is needed too.
inline double threshold_zvalue(double g, double log_c) {
    return 0.5 * g + log_c / g;
}

inline double threshold_of_lambda(double lambda, double g, double p, double alpha) {
    if (!(g > 0.0)) throw value_error("threshold_of_lambda: g must be positive");
    return norm_sf(threshold_zvalue(g, std::log(c_of_lambda(lambda, p, alpha))));
}

struct WeightProblem {
    std::vector<double> g;  // effect over predicted SE, eta_m / S_m
    std::vector<double> p;  // prior non-null probabilities
    double alpha = 0.05;

    void validate() const {
        if (g.empty() || g.size() != p.size())
            throw dimension_error("WeightProblem: g and p must be nonempty and equal length");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw value_error("WeightProblem: alpha must be in (0,1)");
        for (double gm : g)
            if (gm < 0.0 || !std::isfinite(gm))
                throw value_error("WeightProblem: g must be finite and nonnegative");
    }
};

struct LagrangeSolution {
    double lambda_hat = 0.0;
    double residual = 0.0;
    std::vector<double> thresholds;
};

namespace detail {

// Threshold rule: fills per-test z-values and the g used at this lambda.
// Tests with g <= 0 carry no information; they are marked with z = +inf
// (threshold 0, power 0).
using ThresholdRule = std::function<void(double lambda, std::vector<double>& z, std::vector<double>& g)>;

// G(lambda) of the Lagrange constraint:
//   sum (1-p) t - alpha [ sum (1-p) t + sum p F(t) ]
// accumulated by pairwise summation for reproducibility.
inline double lagrange_g(std::span<const double> p, double alpha,
                         std::span<const double> z, std::span<const double> g) {
    const std::size_t M = p.size();
    std::vector<double> null_terms(M), alt_terms(M);
    for (std::size_t m = 0; m < M; ++m) {
        if (!std::isfinite(z[m])) {
            null_terms[m] = 0.0;
            alt_terms[m] = 0.0;
            continue;
        }
        double t = norm_sf(z[m]);
        double F = norm_sf(z[m] - g[m]);
        null_terms[m] = (1.0 - p[m]) * t;
        alt_terms[m] = p[m] * F;
    }
    double sn = pairwise_sum(null_terms);
    double sa = pairwise_sum(alt_terms);
    return sn - alpha * (sn + sa);
}

inline LagrangeSolution solve_lambda_rule(std::span<const double> p, double alpha,
                                          const ThresholdRule& rule, double lo, double hi) {
    std::vector<double> z(p.size()), g(p.size());
    auto eval = [&](double lambda) {
        rule(lambda, z, g);
        return lagrange_g(p, alpha, z, g);
    };

    // Bracket by geometric expansion: G is decreasing in lambda, so walk the
    // ladder until the sign flips.
    double a = lo, fa = eval(a);
    double b = a, fb = fa;
    for (double lambda = a * 10.0; lambda <= hi * (1.0 + 1e-12); lambda *= 10.0) {
        b = std::min(lambda, hi);
        fb = eval(b);
        if (fa * fb <= 0.0) break;
        a = b;
        fa = fb;
    }
    if (fa * fb > 0.0) {
        std::ostringstream msg;
        msg << "solve_lambda: no sign change in [" << lo << ", " << hi << "]; G(" << lo
            << ") = " << eval(lo) << ", G(" << hi << ") = " << fb;
        throw numeric_error(msg.str());
    }

    // Illinois-style false position: halving the retained endpoint's value
    // prevents the stagnation plain regula falsi suffers when one side of
    // the bracket is much steeper. Runs past the residual tolerance until
    // the bracket itself is tight, so lambda_hat is accurate even where G is
    // shallow near its root.
    double best = std::abs(fa) < std::abs(fb) ? a : b;
    double best_f = std::abs(fa) < std::abs(fb) ? fa : fb;
    int side = 0;
    for (int iter = 0;
         iter < 200 && (std::abs(best_f) > lagrange_tol ||
                        std::abs(b - a) > 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b))));
         ++iter) {
        double mid;
        if (fb != fa) {
            mid = (a * fb - b * fa) / (fb - fa);
            if (!(mid > std::min(a, b) && mid < std::max(a, b))) mid = 0.5 * (a + b);
        } else {
            mid = 0.5 * (a + b);
        }
        double fm = eval(mid);
        if (std::abs(fm) < std::abs(best_f)) {
            best = mid;
            best_f = fm;
        }
        if (fa * fm <= 0.0) {
            b = mid;
            fb = fm;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = mid;
            fa = fm;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(a))) break;
    }

    LagrangeSolution sol;
    sol.lambda_hat = best;
    sol.residual = std::abs(best_f);
    rule(best, z, g);
    sol.thresholds.resize(p.size());
    for (std::size_t m = 0; m < p.size(); ++m)
        sol.thresholds[m] = std::isfinite(z[m]) ? norm_sf(z[m]) : 0.0;
    return sol;
}

inline ThresholdRule fixed_g_rule(const WeightProblem& problem) {
    return [&problem](double lambda, std::vector<double>& z, std::vector<double>& g) {
        for (std::size_t m = 0; m < problem.g.size(); ++m) {
            g[m] = problem.g[m];
            if (g[m] <= 0.0) {
                z[m] = std::numeric_limits<double>::infinity();
                continue;
            }
            double c = c_of_lambda(lambda, problem.p[m], problem.alpha);
            z[m] = threshold_zvalue(g[m], std::log(c));
        }
    };
}

}  // namespace detail

/// Constraint residual G(lambda) under the fixed-g threshold map.
/// Exposed so independent grid searches can probe the same function the
/// solver drives to zero.
inline double lagrange_residual(const WeightProblem& problem, double lambda) {
    problem.validate();
    std::vector<double> z(problem.g.size()), g(problem.g.size());
    detail::fixed_g_rule(problem)(lambda, z, g);
    return detail::lagrange_g(problem.p, problem.alpha, z, g);
}

/// Solve the Lagrange constraint for lambda under fixed per-test g.
inline LagrangeSolution solve_lambda(const WeightProblem& problem) {
    problem.validate();
    bool any = false;
    for (double gm : problem.g) any = any || gm > 0.0;
    if (!any) throw numeric_error("solve_lambda: all tests have g = 0");
    return detail::solve_lambda_rule(problem.p, problem.alpha, detail::fixed_g_rule(problem),
                                     lambda_bracket_lo, lambda_bracket_hi);
}

/// Optimal oracle weights w_m = t_m(lambda_hat) / mean(t). Tests with g = 0
/// receive weight 0 (they carry no power and the threshold map is undefined
/// there).
inline WeightScheme optimal_weights(const WeightProblem& problem, double eta = 0.0) {
    LagrangeSolution sol = solve_lambda(problem);
    double mean_t = pairwise_mean(sol.thresholds);
    if (!(mean_t > 0.0)) throw numeric_error("optimal_weights: degenerate thresholds");
    WeightScheme w;
    w.weights.resize(sol.thresholds.size());
    for (std::size_t m = 0; m < w.weights.size(); ++m) w.weights[m] = sol.thresholds[m] / mean_t;
    w.eta = eta;
    w.lambda_hat = sol.lambda_hat;
    w.source = WeightSource::optimal_fixed_eta;
    return w;
}

struct MmwResult {
    double eta_tilde = 0.0;
    double lambda_hat = 0.0;
};

namespace detail {

// Smallest lambda with c(lambda; tau) > 1, i.e. log c > 0, required by the
// MMW thresholds. Returns +inf when no lambda qualifies.
inline double mmw_lambda_floor(double tau, double alpha) {
    double denom = (1.0 - tau) * (1.0 - alpha) - tau * alpha;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return tau / denom;
}

inline ThresholdRule mmw_rule(std::span<const double> s, double s_min, double tau, double alpha) {
    return [s, s_min, tau, alpha](double lambda, std::vector<double>& z, std::vector<double>& g) {
        double log_c = std::log(c_of_lambda(lambda, tau, alpha));
        double eta = s_min * std::sqrt(2.0 * std::max(log_c, 0.0));
        for (std::size_t m = 0; m < s.size(); ++m) {
            g[m] = eta / s[m];
            z[m] = g[m] > 0.0 ? threshold_zvalue(g[m], log_c)
                              : std::numeric_limits<double>::infinity();
        }
    };
}

}  // namespace detail

/// Constraint residual under MMW thresholds, for oracle checks.
inline double mmw_residual(std::span<const double> s, double tau, double alpha, double lambda) {
    std::vector<double> p(s.size(), tau), z(s.size()), g(s.size());
    double s_min = *std::min_element(s.begin(), s.end());
    detail::mmw_rule(s, s_min, tau, alpha)(lambda, z, g);
    return detail::lagrange_g(p, alpha, z, g);
}

/// Monotone-minimum-weight effect size: the largest homogeneous eta keeping
/// weights non-increasing in S_m, eta = S_(1) sqrt(2 log c(lambda_hat)),
/// with lambda_hat solving the constraint under the MMW thresholds.
inline MmwResult mmw_eta(std::span<const double> s, double tau, double alpha) {
    if (s.empty()) throw dimension_error("mmw_eta: empty S vector");
    if (!(tau > 0.0 && tau < 1.0)) throw value_error("mmw_eta: tau must be in (0,1)");
    for (double v : s)
        if (!(v > 0.0)) throw value_error("mmw_eta: S values must be positive");

    double floor = detail::mmw_lambda_floor(tau, alpha);
    if (!std::isfinite(floor) || floor >= lambda_bracket_hi) {
        std::ostringstream msg;
        msg << "mmw_eta: infeasible, log c(lambda) <= 0 for all lambda (tau = " << tau
            << ", alpha = " << alpha << ")";
        throw numeric_error(msg.str());
    }
    double s_min = *std::min_element(s.begin(), s.end());
    std::vector<double> p(s.size(), tau);
    LagrangeSolution sol;
    try {
        sol = detail::solve_lambda_rule(p, alpha, detail::mmw_rule(s, s_min, tau, alpha),
                                        floor * (1.0 + 1e-9), lambda_bracket_hi);
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("mmw_eta: ") + e.what());
    }
    double log_c = std::log(c_of_lambda(sol.lambda_hat, tau, alpha));
    if (!(log_c > 0.0)) {
        std::ostringstream msg;
        msg << "mmw_eta: solution has log c(lambda_hat) = " << log_c << " <= 0 (lambda_hat = "
            << sol.lambda_hat << ")";
        throw numeric_error(msg.str());
    }
    return {s_min * std::sqrt(2.0 * log_c), sol.lambda_hat};
}

/// MMW weights for possibly heterogeneous priors: a single constraint solve
/// in which lambda enters the thresholds twice — the common effect size
/// eta(lambda) = S_(1) sqrt(2 log c(lambda; tau)) and each test's own
/// c_m(lambda, p_m). Weights are the resulting thresholds normalized to
/// mean 1. Monotonicity in S_m is guaranteed only conditional on p.
inline WeightScheme mmw_weights(std::span<const double> s, std::span<const double> p, double tau,
                                double alpha) {
    if (s.size() != p.size()) throw dimension_error("mmw_weights: S and p lengths differ");
    if (s.empty()) throw dimension_error("mmw_weights: empty problem");
    if (!(tau > 0.0 && tau < 1.0)) throw value_error("mmw_weights: tau must be in (0,1)");
    for (double v : s)
        if (!(v > 0.0)) throw value_error("mmw_weights: S values must be positive");
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw value_error("mmw_weights: priors must be in [0,1]");

    double floor = detail::mmw_lambda_floor(tau, alpha);
    if (!std::isfinite(floor) || floor >= lambda_bracket_hi) {
        std::ostringstream msg;
        msg << "mmw_weights: infeasible, log c(lambda) <= 0 for all lambda (tau = " << tau
            << ", alpha = " << alpha << ")";
        throw numeric_error(msg.str());
    }
    const double s_min = *std::min_element(s.begin(), s.end());
    std::vector<double> pc(p.begin(), p.end());
    for (double& v : pc) v = std::clamp(v, prior_clamp_eps, 1.0 - prior_clamp_eps);

    auto rule = [s, s_min, &pc, tau, alpha](double lambda, std::vector<double>& z,
                                            std::vector<double>& g) {
        double log_c_tau = std::log(c_of_lambda(lambda, tau, alpha));
        double eta = s_min * std::sqrt(2.0 * std::max(log_c_tau, 0.0));
        for (std::size_t m = 0; m < s.size(); ++m) {
            g[m] = eta / s[m];
            z[m] = g[m] > 0.0
                       ? threshold_zvalue(g[m], std::log(c_of_lambda(lambda, pc[m], alpha)))
                       : std::numeric_limits<double>::infinity();
        }
    };

    // With heterogeneous priors the lambda floor is itself a root: eta
    // vanishes there and every threshold collapses to zero. Start the
    // bracket at the first ladder point where the constraint is genuinely
    // positive so the solver converges to the interior root instead.
    std::vector<double> z(s.size()), g(s.size());
    double lo = -1.0;
    for (double mult = 1.0 + 1e-9; floor * mult < lambda_bracket_hi; mult *= 1.2) {
        rule(floor * mult, z, g);
        if (detail::lagrange_g(pc, alpha, z, g) > lagrange_tol) {
            lo = floor * mult;
            break;
        }
    }
    if (lo < 0.0)
        throw numeric_error(
            "mmw_weights: constraint has no interior root (the prior field carries no usable "
            "non-null mass)");
    LagrangeSolution sol;
    try {
        sol = detail::solve_lambda_rule(pc, alpha, rule, lo, lambda_bracket_hi);
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("mmw_weights: ") + e.what());
    }
    double mean_t = pairwise_mean(sol.thresholds);
    if (!(mean_t > 0.0)) throw numeric_error("mmw_weights: degenerate thresholds");
    WeightScheme w;
    w.weights.resize(sol.thresholds.size());
    for (std::size_t m = 0; m < w.weights.size(); ++m) w.weights[m] = sol.thresholds[m] / mean_t;
    w.eta = s_min * std::sqrt(2.0 * std::max(std::log(c_of_lambda(sol.lambda_hat, tau, alpha)), 0.0));
    w.lambda_hat = sol.lambda_hat;
    w.source = WeightSource::mmw;
    w.tau = tau;
    return w;
}

/// Fixed-eta weights from per-test S_m and priors.
inline WeightScheme fixed_eta_weights(std::span<const double> s, std::span<const double> p,
                                      double eta, double alpha) {
    if (s.size() != p.size()) throw dimension_error("fixed_eta_weights: S and p lengths differ");
    if (!(eta > 0.0)) throw value_error("fixed_eta_weights: eta must be positive");
    WeightProblem problem;
    problem.alpha = alpha;
    problem.g.resize(s.size());
    problem.p.assign(p.begin(), p.end());
    for (std::size_t m = 0; m < s.size(); ++m)
        problem.g[m] = std::isfinite(s[m]) && s[m] > 0.0 ? eta / s[m] : 0.0;
    return optimal_weights(problem, eta);
}

/// The 10% rule: indicator weights for Xbar in [0.1, 0.9], normalized to
/// mean 1.
inline WeightScheme ten_percent_rule(std::span<const double> xbar) {
    if (xbar.empty()) throw dimension_error("ten_percent_rule: empty input");
    std::size_t in_range = 0;
    for (double v : xbar) in_range += (v >= 0.1 && v <= 0.9);
    if (in_range == 0) throw numeric_error("ten_percent_rule: no tests with Xbar in [0.1, 0.9]");
    WeightScheme w;
    w.weights.resize(xbar.size());
    double scale = static_cast<double>(xbar.size()) / static_cast<double>(in_range);
    for (std::size_t m = 0; m < xbar.size(); ++m)
        w.weights[m] = (xbar[m] >= 0.1 && xbar[m] <= 0.9) ? scale : 0.0;
    w.source = WeightSource::ten_percent_rule;
    return w;
}

/// d t / d S of the threshold at (lambda, eta, S, tau): the closed form used
/// to certify the MMW monotonicity conditions.
inline double threshold_s_derivative(double lambda, double eta, double s, double tau,
                                     double alpha) {
    double log_c = std::log(c_of_lambda(lambda, tau, alpha));
    double z = eta / (2.0 * s) + log_c * s / eta;
    return -norm_pdf(z) * (log_c / eta - eta / (2.0 * s * s));
}

}  // namespace wabh
