#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wabh/error.hpp"

namespace wabh {

/// Regular grid of hypotheses with integer coordinates per test.
/// Tests excluded from candidacy (e.g. voxels with no lesion variation)
/// stay in the vectors but carry candidate_mask = 0.
struct HypothesisGrid {
    std::size_t M = 0;
    int dims = 2;
    std::vector<std::array<int, 3>> coords;  // z-coordinate unused when dims == 2
    std::vector<char> candidate_mask;

    static HypothesisGrid regular2d(int nx, int ny) {
        if (nx < 1 || ny < 1) throw value_error("grid dimensions must be positive");
        HypothesisGrid g;
        g.M = static_cast<std::size_t>(nx) * ny;
        g.dims = 2;
        g.coords.reserve(g.M);
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) g.coords.push_back({x, y, 0});
        g.candidate_mask.assign(g.M, 1);
        return g;
    }

    std::size_t n_candidates() const {
        std::size_t c = 0;
        for (char m : candidate_mask) c += (m != 0);
        return c;
    }
};

struct PValueVector {
    std::vector<double> values;
    bool one_sided = true;
};

enum class WeightSource { optimal_fixed_eta, mmw, ten_percent_rule, unit };

inline const char* to_string(WeightSource s) {
    switch (s) {
        case WeightSource::optimal_fixed_eta: return "optimal-fixed-eta";
        case WeightSource::mmw: return "mmw";
        case WeightSource::ten_percent_rule: return "ten-percent-rule";
        case WeightSource::unit: return "unit";
    }
    return "?";
}

/// Normalized p-value weights together with the parameters that produced
/// them. Weights have mean 1 over the tests they were computed for.
struct WeightScheme {
    std::vector<double> weights;
    double eta = 0.0;
    double lambda_hat = 0.0;
    std::optional<double> tau;
    WeightSource source = WeightSource::unit;

    static WeightScheme unit(std::size_t M) {
        WeightScheme w;
        w.weights.assign(M, 1.0);
        w.source = WeightSource::unit;
        return w;
    }
};

struct WeightImpact {
    double frac_upweighted = 0.0;    // share of tests with w >= 1
    double frac_inconclusive = 0.0;  // share of tests with w < cutoff
    double max_weight = 0.0;
};

struct DecisionSet {
    std::vector<double> q_values;
    double threshold = 0.0;
    std::vector<char> decisions;
    double pi0_hat = 1.0;
    std::size_t n_rejected = 0;
    WeightImpact impact;
};

enum class PriorSource { external_file, constant, spatial_kernel };

inline const char* to_string(PriorSource s) {
    switch (s) {
        case PriorSource::external_file: return "external-file";
        case PriorSource::constant: return "constant";
        case PriorSource::spatial_kernel: return "spatial-kernel";
    }
    return "?";
}

/// Per-test non-null prior probabilities p_m.
struct PriorField {
    std::vector<double> p;
    PriorSource source = PriorSource::constant;
    std::string meta;
};

enum class Transform { identity, logit_transform };

/// Subjects-by-tests binary lesion data with a continuous outcome.
/// X is stored column-major (per-test contiguous) since every fit walks
/// one column.
struct Dataset {
    std::size_t n = 0;
    std::size_t M = 0;
    std::vector<double> Y;
    std::vector<std::uint8_t> X;  // X[m * n + i]
    Transform covariate_transform = Transform::identity;

    std::uint8_t x(std::size_t i, std::size_t m) const { return X[m * n + i]; }
};

enum class FitStatus { ok, degenerate, separated, nonconverged };

inline const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::degenerate: return "degenerate";
        case FitStatus::separated: return "separated";
        case FitStatus::nonconverged: return "nonconverged";
    }
    return "?";
}

/// Per-test sufficient statistics from the mass-univariate fits.
struct TestSummary {
    double xbar = 0.0;
    double r2 = 0.0;
    double s_m = 0.0;    // predicted SE heterogeneity statistic
    double beta1 = 0.0;
    double se = 0.0;
    double pvalue = 1.0;
    FitStatus status = FitStatus::ok;
};

}  // namespace wabh
