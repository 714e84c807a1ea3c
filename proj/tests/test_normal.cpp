#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wabh/normal.hpp"

using namespace wabh;

TEST_CASE("norm_sf matches known values") {
    CHECK(norm_sf(0.0) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(norm_sf(1.0) == Catch::Approx(0.15865525393145707).epsilon(1e-13));
    CHECK(norm_sf(1.959963984540054) == Catch::Approx(0.025).epsilon(1e-12));
    CHECK(norm_sf(-1.0) == Catch::Approx(0.8413447460685429).epsilon(1e-13));
}

TEST_CASE("norm_sf_inv round trip is relatively accurate over the full tail") {
    // log-spaced t from 1e-300 to 0.5
    for (double log10t = -300.0; log10t <= -0.31; log10t += 1.7) {
        double t = std::pow(10.0, log10t);
        double x = norm_sf_inv(t);
        double back = norm_sf(x);
        CHECK(std::abs(back / t - 1.0) < 1e-12);
    }
    // central region and upper half
    for (double t : {0.5, 0.6, 0.9, 0.99, 0.9999}) {
        double x = norm_sf_inv(t);
        CHECK(norm_sf(x) == Catch::Approx(t).epsilon(1e-12));
    }
}

TEST_CASE("norm_sf_inv rejects out-of-domain arguments") {
    CHECK_THROWS_AS(norm_sf_inv(0.0), value_error);
    CHECK_THROWS_AS(norm_sf_inv(1.0), value_error);
    CHECK_THROWS_AS(norm_sf_inv(-0.1), value_error);
}

TEST_CASE("expit and logit are inverse") {
    // Past |x| ~ 15 the round trip loses digits to 1 - expit(x) cancellation,
    // so the tight check stays in the well-conditioned range.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        double x = u(rng);
        CHECK(logit(expit(x)) == Catch::Approx(x).margin(1e-9));
    }
    CHECK(expit(40.0) == 1.0);
    CHECK(expit(-800.0) == 0.0);
}
