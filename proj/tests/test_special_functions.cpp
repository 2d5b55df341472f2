#include <cmath>
#include <random>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "doctest.h"
#include "oracles.hpp"

#include "beamsel/special_functions.hpp"

using namespace beamsel;

TEST_CASE("Marcum Q against quadrature on a coarse grid")
{
    for (double nu : {0.5, 1.0, 2.5, 8.0, 32.0})
        for (double a : {0.0, 0.5, 3.0, 10.0, 19.0})
            for (double b : {0.1, 1.0, 4.0, 12.0, 20.0}) {
                CAPTURE(nu);
                CAPTURE(a);
                CAPTURE(b);
                CHECK(std::abs(marcum_q(nu, a, b) - oracle::marcum_q_quadrature(nu, a, b)) < 1e-9);
            }
}

TEST_CASE("Marcum Q against the Boost noncentral chi-square distribution")
{
    for (double dof : {1.0, 4.0, 16.0, 64.0})
        for (double lambda : {0.5, 10.0, 100.0})
            for (double x : {0.5, 5.0, 30.0, 150.0}) {
                boost::math::non_central_chi_squared_distribution<double> d(dof, lambda);
                CHECK(noncentral_chi2_cdf(x, dof, lambda) == doctest::Approx(boost::math::cdf(d, x)).epsilon(1e-9));
                CHECK(marcum_q(dof / 2, std::sqrt(lambda), std::sqrt(x)) ==
                      doctest::Approx(boost::math::cdf(boost::math::complement(d, x))).epsilon(1e-8));
            }
}

TEST_CASE("complement identity and limits")
{
    for (double nu : {0.5, 3.0, 17.5})
        for (double a : {0.0, 2.0, 15.0})
            for (double b : {0.0, 1.0, 9.0, 25.0}) {
                CHECK(marcum_q(nu, a, b) + marcum_q_complement(nu, a, b) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(marcum_q(nu, a, b) >= 0.0);
                CHECK(marcum_q(nu, a, b) <= 1.0);
            }
    CHECK(marcum_q(2.0, 3.0, 0.0) == 1.0);
    CHECK(noncentral_chi2_cdf(INFINITY, 4.0, 2.0) == 1.0);
    CHECK(noncentral_chi2_sf(0.0, 4.0, 2.0) == 1.0);
}

TEST_CASE("Q_1(0, b) = exp(-b^2/2)")
{
    for (double b : {0.3, 1.0, 2.0, 5.0})
        CHECK(marcum_q(1.0, 0.0, b) == doctest::Approx(std::exp(-b * b / 2)).epsilon(1e-12));
}

TEST_CASE("monotone in a and b")
{
    double prev = 0.0;
    for (double a = 0.0; a <= 20.0; a += 0.5) {
        const double q = marcum_q(4.0, a, 6.0);
        CHECK(q >= prev - 1e-15);
        prev = q;
    }
    prev = 1.0;
    for (double b = 0.0; b <= 20.0; b += 0.5) {
        const double q = marcum_q(4.0, 3.0, b);
        CHECK(q <= prev + 1e-15);
        prev = q;
    }
}

TEST_CASE("small upper tails keep relative accuracy")
{
    // far tail: compare against Boost's complement
    boost::math::non_central_chi_squared_distribution<double> d(8.0, 4.0);
    const double x = 120.0;
    const double ref = boost::math::cdf(boost::math::complement(d, x));
    CHECK(ref < 1e-15);
    CHECK(noncentral_chi2_sf(x, 8.0, 4.0) == doctest::Approx(ref).epsilon(1e-6));
    // far lower tail through the complement
    boost::math::non_central_chi_squared_distribution<double> e(8.0, 200.0);
    const double lo = boost::math::cdf(e, 40.0);
    CHECK(lo < 1e-12);
    CHECK(marcum_q_complement(4.0, std::sqrt(200.0), std::sqrt(40.0)) == doctest::Approx(lo).epsilon(1e-6));
}

TEST_CASE("Monte Carlo: sum of squared Gaussians")
{
    std::mt19937_64 rng(17);
    const int dof = 6;
    const double mean = 0.8;  // per component
    const double lambda = dof * mean * mean;
    std::normal_distribution<double> n01;
    const int trials = 200000;
    for (double x : {3.0, 8.0, 15.0}) {
        int below = 0;
        std::mt19937_64 r = rng;
        for (int i = 0; i < trials; ++i) {
            double s = 0.0;
            for (int k = 0; k < dof; ++k) {
                const double z = mean + n01(r);
                s += z * z;
            }
            below += s <= x;
        }
        const double p = noncentral_chi2_cdf(x, dof, lambda);
        CHECK(std::abs(below / double(trials) - p) < 4.5 * std::sqrt(p * (1 - p) / trials));
    }
}

TEST_CASE("invalid arguments")
{
    CHECK_THROWS(marcum_q(0.0, 1.0, 1.0));
    CHECK_THROWS(marcum_q(1.0, -1.0, 1.0));
    CHECK_THROWS(noncentral_chi2_cdf(1.0, 0.0, 1.0));
}
