#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wabh/error.hpp"
#include "wabh/glm.hpp"
#include "wabh/grf.hpp"
#include "wabh/prior.hpp"
#include "wabh/procedures.hpp"
#include "wabh/types.hpp"
#include "wabh/util.hpp"
#include "wabh/weights.hpp"

namespace wabh {

enum class ProcedureKind { bh, abh, wbh_ten, wabh_mmw, wabh_storey };

/// Screening threshold used by the simulation harness when building the
/// spatial prior (lower than the general default: see the wabh_mmw case).
inline constexpr double sim_prior_screen = 0.2;

struct ProcedureConfig {
    std::string name;
    ProcedureKind kind = ProcedureKind::bh;
    double tau = 0.9;     // MMW tuning level
    double kappa = 0.05;  // Storey threshold for the adaptive comparators

    static ProcedureConfig bh() { return {"bh", ProcedureKind::bh, 0.9, 0.05}; }
    static ProcedureConfig abh(double kappa = 0.05) {
        return {"abh", ProcedureKind::abh, 0.9, kappa};
    }
    static ProcedureConfig wbh_ten() { return {"ten-rule", ProcedureKind::wbh_ten, 0.9, 0.05}; }
    static ProcedureConfig wabh_mmw(double tau = 0.9) {
        return {"wabh-mmw", ProcedureKind::wabh_mmw, tau, 0.05};
    }
    static ProcedureConfig wabh_storey(double tau = 0.9, double kappa = 0.5) {
        return {"wabh-storey", ProcedureKind::wabh_storey, tau, kappa};
    }
};

struct SimConfig {
    int nx = 50, ny = 50;
    int K = 125;        // number of non-null tests
    double C = 1.5;     // power-heterogeneity scale
    double s = 5.0;     // signal clustering scale (0.01 encodes "low")
    double theta = 0.5; // effect-size scale
    int n = 200;        // subjects
    int B = 100;        // replicates
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::vector<ProcedureConfig> procedures;

    std::size_t M() const { return static_cast<std::size_t>(nx) * ny; }
    // The intercept field keeps the same clustering geometry on reduced
    // grids by shrinking the reference scale 50 proportionally.
    double intercept_scale() const { return 50.0 * std::max(nx, ny) / 100.0; }

    void validate() const {
        if (nx < 2 || ny < 2) throw value_error("SimConfig: grid too small");
        if (K < 0 || static_cast<std::size_t>(K) >= M())
            throw value_error("SimConfig: K must be in [0, M)");
        if (C < 0.0) throw value_error("SimConfig: C must be nonnegative");
        if (!(s > 0.0)) throw value_error("SimConfig: s must be positive");
        if (!(theta >= 0.0)) throw value_error("SimConfig: theta must be nonnegative");
        if (n < 10) throw value_error("SimConfig: need n >= 10");
        if (B < 1) throw value_error("SimConfig: need B >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw value_error("SimConfig: alpha in (0,1)");
        if (procedures.empty()) throw value_error("SimConfig: no procedures");
    }
};

struct ReplicateCounts {
    long V = 0;  // false discoveries
    long S = 0;  // true discoveries
    long R = 0;  // total discoveries
    long excluded = 0;  // tests dropped from candidacy (degenerate/nonconverged)
};

struct SimMetrics {
    std::string procedure;
    double fdr = 0.0, fdr_se = 0.0;
    double power = 0.0, power_se = 0.0;
    std::vector<ReplicateCounts> per_replicate;
};

/// Indices of the K largest field values, ties broken by lowest index.
inline std::vector<std::size_t> select_signals(std::span<const double> field, std::size_t K) {
    if (K > field.size()) throw dimension_error("select_signals: K exceeds number of tests");
    std::vector<std::size_t> order(field.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return field[a] > field[b]; });
    order.resize(K);
    std::sort(order.begin(), order.end());
    return order;
}

struct GeneratedData {
    Dataset data;
    std::vector<char> truth;  // H_m = 1 iff m is a signal
};

/// One draw of the generative model: clustered signal placement, a GRF
/// intercept field controlling lesion-frequency heterogeneity, a shared
/// subject frailty confounding lesion status with the outcome, and uniform
/// per-signal effect sizes.
inline GeneratedData generate_dataset(const SimConfig& cfg, std::mt19937_64& rng) {
    const std::size_t M = cfg.M();
    GeneratedData out;
    out.truth.assign(M, 0);

    std::vector<std::size_t> signals;
    if (cfg.K > 0) {
        std::vector<double> placement = grf_sample(cfg.nx, cfg.ny, cfg.s, 1.0, rng);
        signals = select_signals(placement, static_cast<std::size_t>(cfg.K));
        for (std::size_t m : signals) out.truth[m] = 1;
    }

    std::vector<double> alpha0m(M, 0.0);
    if (cfg.C > 0.0)
        alpha0m = grf_sample(cfg.nx, cfg.ny, cfg.intercept_scale(), cfg.C * cfg.C, rng);

    std::vector<double> alpha1m(M, 0.0);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * cfg.theta);
    for (std::size_t m : signals) alpha1m[m] = cfg.theta > 0.0 ? unif(rng) : 0.0;

    const std::size_t n = static_cast<std::size_t>(cfg.n);
    std::normal_distribution<double> frailty(0.0, 0.8);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<double> b(n);
    out.data.n = n;
    out.data.M = M;
    out.data.Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = frailty(rng);
        out.data.Y[i] = 0.5 * b[i] + noise(rng);
    }

    out.data.X.resize(n * M);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double base = -1.0 + b[i];
        for (std::size_t m = 0; m < M; ++m) {
            double pr = expit(base + alpha0m[m] + alpha1m[m] * out.data.Y[i]);
            out.data.X[m * n + i] = u01(rng) < pr ? 1 : 0;
        }
    }
    out.data.covariate_transform = Transform::logit_transform;
    return out;
}

namespace detail {

inline ReplicateCounts score_decisions(std::span<const char> decisions,
                                       std::span<const char> truth,
                                       std::span<const std::size_t> candidate_ids,
                                       long excluded) {
    ReplicateCounts c;
    c.excluded = excluded;
    for (std::size_t j = 0; j < decisions.size(); ++j) {
        if (!decisions[j]) continue;
        ++c.R;
        if (truth[candidate_ids[j]]) ++c.S; else ++c.V;
    }
    return c;
}

// Weighted run with a graceful degradation: when the prior field carries no
// usable signal (e.g. every p_m at the clamp floor, common under a global
// null), the budget constraint has no root and the weight solve is
// infeasible. Falling back to unit weights turns the procedure into
// unweighted adaptive BH for that replicate, which keeps the error-rate
// guarantee instead of aborting the experiment.
inline DecisionSet weighted_or_fallback(const PValueVector& pvals,
                                        std::span<const double> s_m,
                                        const PriorField& prior, double tau,
                                        double alpha) {
    WeightScheme w;
    try {
        w = mmw_weights(s_m, prior.p, tau, alpha);
    } catch (const numeric_error&) {
        w = WeightScheme::unit(pvals.values.size());
    }
    return wabh(pvals, w, alpha, Pi0Spec::prior_mean(), &prior);
}

}  // namespace detail

/// Generate one replicate, fit all tests, run every configured procedure on
/// the candidate set, and score against the truth labels. Degenerate and
/// nonconverged tests are excluded from candidacy and scored as
/// non-rejections.
inline std::vector<ReplicateCounts> run_replicate(const SimConfig& cfg, std::uint64_t seed_b,
                                                  unsigned fit_threads = 1) {
    std::mt19937_64 rng(seed_b);
    GeneratedData gen = generate_dataset(cfg, rng);
    std::vector<TestSummary> fits = fit_all_tests(gen.data, fit_threads);

    const std::size_t M = cfg.M();
    std::vector<std::size_t> candidate_ids;
    candidate_ids.reserve(M);
    for (std::size_t m = 0; m < M; ++m)
        if (fits[m].status == FitStatus::ok || fits[m].status == FitStatus::separated)
            candidate_ids.push_back(m);
    const long excluded = static_cast<long>(M - candidate_ids.size());
    if (candidate_ids.empty())
        return std::vector<ReplicateCounts>(cfg.procedures.size(), ReplicateCounts{0, 0, 0, excluded});

    PValueVector pvals;
    std::vector<double> s_m(candidate_ids.size()), xbar(candidate_ids.size());
    pvals.values.resize(candidate_ids.size());
    for (std::size_t j = 0; j < candidate_ids.size(); ++j) {
        const TestSummary& f = fits[candidate_ids[j]];
        pvals.values[j] = f.pvalue;
        s_m[j] = f.s_m;
        xbar[j] = f.xbar;
    }

    // Candidate-restricted grid for the spatial prior.
    HypothesisGrid grid = HypothesisGrid::regular2d(cfg.nx, cfg.ny);
    grid.candidate_mask.assign(M, 0);
    for (std::size_t m : candidate_ids) grid.candidate_mask[m] = 1;
    PValueVector pvals_full;
    pvals_full.values.assign(M, 1.0);
    for (std::size_t j = 0; j < candidate_ids.size(); ++j)
        pvals_full.values[candidate_ids[j]] = pvals.values[j];

    std::vector<ReplicateCounts> counts;
    counts.reserve(cfg.procedures.size());
    for (const ProcedureConfig& proc : cfg.procedures) {
        DecisionSet d;
        switch (proc.kind) {
            case ProcedureKind::bh:
                d = wabh(pvals, WeightScheme::unit(pvals.values.size()), cfg.alpha,
                         Pi0Spec::fixed(1.0));
                break;
            case ProcedureKind::abh:
                d = wabh(pvals, WeightScheme::unit(pvals.values.size()), cfg.alpha,
                         Pi0Spec::storey(proc.kappa));
                break;
            case ProcedureKind::wbh_ten:
                d = wabh(pvals, ten_percent_rule(xbar), cfg.alpha, Pi0Spec::fixed(1.0));
                break;
            case ProcedureKind::wabh_mmw: {
                // At simulation scale a loose screening cut gives each kernel
                // neighborhood enough exceedance events for a stable prior;
                // the default cut is too noisy on 2,500-site grids.
                PriorField full_prior = spatial_kernel_prior(
                    pvals_full, grid, spatial_default_bandwidth, sim_prior_screen);
                PriorField prior;
                prior.source = full_prior.source;
                prior.p.resize(candidate_ids.size());
                for (std::size_t j = 0; j < candidate_ids.size(); ++j)
                    prior.p[j] = full_prior.p[candidate_ids[j]];
                d = detail::weighted_or_fallback(pvals, s_m, prior, proc.tau, cfg.alpha);
                break;
            }
            case ProcedureKind::wabh_storey: {
                PriorField prior = constant_prior(pvals, proc.kappa);
                d = detail::weighted_or_fallback(pvals, s_m, prior, proc.tau, cfg.alpha);
                break;
            }
        }
        counts.push_back(detail::score_decisions(d.decisions, gen.truth, candidate_ids, excluded));
    }
    return counts;
}

/// Monte Carlo experiment: B independent replicates with per-replicate
/// seeds derived from (seed, b), aggregated in replicate order so results
/// do not depend on the parallel schedule.
inline std::vector<SimMetrics> run_experiment(const SimConfig& cfg,
                                              unsigned nthreads = thread_count()) {
    cfg.validate();
    const std::size_t B = static_cast<std::size_t>(cfg.B);
    std::vector<std::vector<ReplicateCounts>> all(B);
    parallel_for(
        B, [&](std::size_t b) { all[b] = run_replicate(cfg, derive_seed(cfg.seed, b)); },
        nthreads);

    std::vector<SimMetrics> out(cfg.procedures.size());
    for (std::size_t pidx = 0; pidx < cfg.procedures.size(); ++pidx) {
        SimMetrics& met = out[pidx];
        met.procedure = cfg.procedures[pidx].name;
        met.per_replicate.resize(B);
        std::vector<double> fdp(B), pwr(B);
        for (std::size_t b = 0; b < B; ++b) {
            const ReplicateCounts& c = all[b][pidx];
            met.per_replicate[b] = c;
            fdp[b] = c.R > 0 ? static_cast<double>(c.V) / static_cast<double>(c.R) : 0.0;
            pwr[b] = cfg.K > 0 ? static_cast<double>(c.S) / static_cast<double>(cfg.K) : 0.0;
        }
        auto mean_se = [&](std::span<const double> v, double& mean, double& se) {
            mean = pairwise_mean(v);
            if (v.size() < 2) {
                se = 0.0;
                return;
            }
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            se = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                           static_cast<double>(v.size()));
        };
        mean_se(fdp, met.fdr, met.fdr_se);
        mean_se(pwr, met.power, met.power_se);
    }
    return out;
}

}  // namespace wabh
