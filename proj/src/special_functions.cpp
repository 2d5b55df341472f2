#include "beamsel/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace beamsel {

namespace {

constexpr double kWeightCutoff = 1e-22;

enum class Tail { upper, lower };

// sum_k Poisson(k; half_nc) * {Q or P}(order + k, half_x)
double poisson_gamma_mixture(double order, double half_nc, double half_x, Tail tail)
{
    auto term = [&](double s) {
        return tail == Tail::upper ? boost::math::gamma_q(s, half_x) : boost::math::gamma_p(s, half_x);
    };

    if (half_nc == 0.0)
        return term(order);

    const double mode = std::floor(half_nc);
    const double log_w_mode = -half_nc + mode * std::log(half_nc) - std::lgamma(mode + 1.0);
    const double w_mode = std::exp(log_w_mode);

    double total = w_mode * term(order + mode);
    double weight_sum = w_mode;

    // Forward from the mode.
    double w = w_mode;
    for (double k = mode + 1.0;; k += 1.0) {
        w *= half_nc / k;
        if (w < kWeightCutoff * w_mode || w == 0.0)
            break;
        const double g = term(order + k);
        total += w * g;
        weight_sum += w;
        // Upper-tail gamma terms increase in k and lower-tail ones decrease,
        // so the lower tail may stop early once the terms are negligible.
        if (tail == Tail::lower && w * g < 1e-300)
            break;
    }

    // Backward from the mode.
    w = w_mode;
    for (double k = mode; k >= 1.0; k -= 1.0) {
        w *= k / half_nc;
        if (w < kWeightCutoff * w_mode || w == 0.0)
            break;
        const double g = term(order + k - 1.0);
        total += w * g;
        weight_sum += w;
        if (tail == Tail::upper && w * g < 1e-300)
            break;
    }

    (void)weight_sum;
    return std::clamp(total, 0.0, 1.0);
}

// The mixture is accurate where it is small; the larger tail is taken as
// one minus the smaller.
double tail_probability(double order, double half_nc, double half_x, Tail tail)
{
    const double direct = poisson_gamma_mixture(order, half_nc, half_x, tail);
    if (direct <= 0.5)
        return direct;
    const Tail other = tail == Tail::upper ? Tail::lower : Tail::upper;
    return std::clamp(1.0 - poisson_gamma_mixture(order, half_nc, half_x, other), 0.0, 1.0);
}

void check_marcum_args(double order, double a, double b)
{
    if (!std::isfinite(order) || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("marcum_q: arguments must be finite");
    if (!(order > 0.0) || a < 0.0 || b < 0.0)
        throw std::invalid_argument("marcum_q: requires order > 0, a >= 0, b >= 0");
}

void check_chi2_args(double x, double dof, double nc)
{
    if (std::isnan(x) || !std::isfinite(dof) || !std::isfinite(nc))
        throw std::invalid_argument("noncentral chi-square: arguments must be numbers");
    if (x < 0.0 || !(dof > 0.0) || nc < 0.0)
        throw std::invalid_argument("noncentral chi-square: requires x >= 0, dof > 0, noncentrality >= 0");
}

}  // namespace

double marcum_q(double order, double a, double b)
{
    check_marcum_args(order, a, b);
    if (b == 0.0)
        return 1.0;
    return tail_probability(order, 0.5 * a * a, 0.5 * b * b, Tail::upper);
}

double marcum_q_complement(double order, double a, double b)
{
    check_marcum_args(order, a, b);
    if (b == 0.0)
        return 0.0;
    return tail_probability(order, 0.5 * a * a, 0.5 * b * b, Tail::lower);
}

double noncentral_chi2_cdf(double x, double dof, double noncentrality)
{
    check_chi2_args(x, dof, noncentrality);
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    return tail_probability(0.5 * dof, 0.5 * noncentrality, 0.5 * x, Tail::lower);
}

double noncentral_chi2_sf(double x, double dof, double noncentrality)
{
    check_chi2_args(x, dof, noncentrality);
    if (x == 0.0)
        return 1.0;
    if (std::isinf(x))
        return 0.0;
    return tail_probability(0.5 * dof, 0.5 * noncentrality, 0.5 * x, Tail::upper);
}

}  // namespace beamsel
