#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/types.hpp"
#include "wabh/util.hpp"

namespace wabh {

// Degenerate pi0 estimates are clamped into (pi0_floor, 1] so the working
// level alpha/pi0 stays finite.
inline constexpr double pi0_floor = 1e-6;

/// Q_m = P_m / w_m. Zero weight maps to +infinity: the test stays in the
/// vector but can never be rejected.
inline std::vector<double> weighted_pvalues(const PValueVector& p, const WeightScheme& w) {
    if (p.values.size() != w.weights.size())
        throw dimension_error("weighted_pvalues: p-value and weight lengths differ");
    std::vector<double> q(p.values.size());
    for (std::size_t m = 0; m < q.size(); ++m) {
        double wm = w.weights[m];
        if (wm < 0.0) throw value_error("weighted_pvalues: negative weight");
        q[m] = wm > 0.0 ? p.values[m] / wm : std::numeric_limits<double>::infinity();
    }
    return q;
}

/// Step-up procedure on arbitrary per-test statistics at working level
/// alpha/pi0: k = max{m : Q_(m) <= m*alpha/(pi0*M)}, rejection threshold
/// min{alpha, k*alpha/(pi0*M)}. pi0 = 1 recovers plain BH.
inline DecisionSet bh_stepup(std::span<const double> q, double alpha, double pi0 = 1.0) {
    if (q.empty()) throw dimension_error("bh_stepup: empty input");
    if (!(alpha > 0.0 && alpha < 1.0)) throw value_error("bh_stepup: alpha must be in (0,1)");
    if (!(pi0 > 0.0 && pi0 <= 1.0)) throw value_error("bh_stepup: pi0 must be in (0,1]");

    const std::size_t M = q.size();
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });

    std::size_t k = 0;
    for (std::size_t m = M; m >= 1; --m) {
        double cutoff = static_cast<double>(m) * alpha / (pi0 * static_cast<double>(M));
        if (q[order[m - 1]] <= cutoff) {
            k = m;
            break;
        }
    }

    DecisionSet d;
    d.q_values.assign(q.begin(), q.end());
    d.pi0_hat = pi0;
    d.decisions.assign(M, 0);
    if (k == 0) {
        d.threshold = 0.0;
        d.n_rejected = 0;
        return d;
    }
    d.threshold = std::min(alpha, static_cast<double>(k) * alpha / (pi0 * static_cast<double>(M)));
    for (std::size_t m = 0; m < M; ++m) {
        if (q[m] <= d.threshold) {
            d.decisions[m] = 1;
            ++d.n_rejected;
        }
    }
    return d;
}

/// Storey null-proportion estimate {#(Q >= kappa) + 1} / {M(1 - kappa)},
/// clipped into (pi0_floor, 1].
inline double storey_pi0(std::span<const double> q, double kappa) {
    if (q.empty()) throw dimension_error("storey_pi0: empty input");
    if (!(kappa > 0.0 && kappa < 1.0)) throw value_error("storey_pi0: kappa must be in (0,1)");
    std::size_t count = 0;
    for (double v : q) count += (v >= kappa);
    double raw = (static_cast<double>(count) + 1.0) /
                 (static_cast<double>(q.size()) * (1.0 - kappa));
    return std::clamp(raw, pi0_floor, 1.0);
}

/// Prior-based null proportion: mean of (1 - p_m), clamped away from 0.
inline double prior_pi0(const PriorField& prior) {
    if (prior.p.empty()) throw dimension_error("prior_pi0: empty prior");
    std::vector<double> comp(prior.p.size());
    for (std::size_t m = 0; m < comp.size(); ++m) {
        if (prior.p[m] < 0.0 || prior.p[m] > 1.0)
            throw value_error("prior_pi0: prior probability outside [0,1]");
        comp[m] = 1.0 - prior.p[m];
    }
    return std::clamp(pairwise_mean(comp), pi0_floor, 1.0);
}

struct Pi0Spec {
    enum class Mode { fixed, storey, prior_mean };
    Mode mode = Mode::fixed;
    double fixed_value = 1.0;  // used by Mode::fixed
    double kappa = 0.5;        // used by Mode::storey

    static Pi0Spec fixed(double v) { return {Mode::fixed, v, 0.5}; }
    static Pi0Spec storey(double kappa = 0.5) { return {Mode::storey, 1.0, kappa}; }
    static Pi0Spec prior_mean() { return {Mode::prior_mean, 1.0, 0.5}; }
};

inline WeightImpact weight_impact(std::span<const double> w, double inconclusive_cutoff) {
    WeightImpact imp;
    if (w.empty()) return imp;
    std::size_t up = 0, inc = 0;
    for (double v : w) {
        up += (v >= 1.0);
        inc += (v < inconclusive_cutoff);
        imp.max_weight = std::max(imp.max_weight, v);
    }
    imp.frac_upweighted = static_cast<double>(up) / static_cast<double>(w.size());
    imp.frac_inconclusive = static_cast<double>(inc) / static_cast<double>(w.size());
    return imp;
}

/// Weighted adaptive BH: weight the p-values, estimate pi0 per the requested
/// mode, then run the step-up at level alpha/pi0 with the threshold capped
/// at alpha.
inline DecisionSet wabh(const PValueVector& p, const WeightScheme& w, double alpha,
                        const Pi0Spec& pi0_spec, const PriorField* prior = nullptr,
                        double inconclusive_cutoff = 0.1) {
    std::vector<double> q = weighted_pvalues(p, w);
    double pi0 = 1.0;
    switch (pi0_spec.mode) {
        case Pi0Spec::Mode::fixed:
            if (!(pi0_spec.fixed_value > 0.0 && pi0_spec.fixed_value <= 1.0))
                throw value_error("wabh: fixed pi0 must be in (0,1]");
            pi0 = std::max(pi0_spec.fixed_value, pi0_floor);
            break;
        case Pi0Spec::Mode::storey:
            pi0 = storey_pi0(q, pi0_spec.kappa);
            break;
        case Pi0Spec::Mode::prior_mean:
            if (prior == nullptr) throw value_error("wabh: prior-mean pi0 requires a prior field");
            pi0 = prior_pi0(*prior);
            break;
    }
    DecisionSet d = bh_stepup(q, alpha, pi0);
    d.impact = weight_impact(w.weights, inconclusive_cutoff);
    return d;
}

}  // namespace wabh
