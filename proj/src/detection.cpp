#include "beamsel/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "beamsel/environment.hpp"
#include "beamsel/special_functions.hpp"

namespace beamsel {

GroupHypothesisParams group_params(std::size_t n_beams, double big_gain, double small_gain, double noise_scale,
                                   std::size_t t_group)
{
    if (n_beams < 2 || !is_power_of_two(n_beams))
        throw std::invalid_argument("group_params: n_beams must be a power of two >= 2");
    if (!(big_gain > small_gain) || small_gain < 0.0)
        throw std::invalid_argument("group_params: requires G > g >= 0");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
        throw std::invalid_argument("group_params: noise_scale must be finite and >= 0");
    if (t_group < 1)
        throw std::invalid_argument("group_params: t_group must be >= 1");

    const double n = static_cast<double>(n_beams);
    GroupHypothesisParams p;
    p.n_beams = n_beams;
    p.big_gain = big_gain;
    p.small_gain = small_gain;
    p.noise_scale = noise_scale;
    p.t_group = t_group;

    p.g_prime = (n / 2.0 - 1.0) * small_gain + big_gain;
    p.mu0 = small_gain;
    p.mu1 = 2.0 * p.g_prime / n;
    p.sigma0_sq = 2.0 * small_gain * noise_scale;
    p.sigma1_sq = 4.0 * noise_scale * p.g_prime / n;

    const double denom = 2.0 * p.g_prime / n - small_gain;
    if (denom == 0.0)
        throw std::invalid_argument("group_params: degenerate threshold (g = 2 g'/N)");
    // Expanded so that sigma^2 = 0 stays finite.
    const double bracket = noise_scale * (1.0 - std::sqrt(n * small_gain / (2.0 * p.g_prime))) +
                           static_cast<double>(t_group) * (big_gain - small_gain) / n;
    p.gamma = 4.0 * small_gain * p.g_prime / denom * bracket;
    return p;
}

double test_statistic(std::span<const double> samples)
{
    double s = 0.0;
    for (double y : samples)
        s += y * y;
    return s;
}

bool detect_user(std::span<const double> samples, const GroupHypothesisParams& params)
{
    if (samples.size() != params.t_group)
        throw std::invalid_argument("detect_user: sample count differs from t_group");
    return test_statistic(samples) >= params.gamma;
}

namespace {

MarcumArgs make_args(const GroupHypothesisParams& p, double mu, double var, const char* what)
{
    if (!(var > 0.0))
        throw std::invalid_argument(std::string(what) + ": hypothesis variance is zero");
    const double t = static_cast<double>(p.t_group);
    MarcumArgs m;
    m.order = 0.5 * t;
    m.a = std::sqrt(t) * mu / std::sqrt(var);
    m.b = std::sqrt(std::max(p.gamma, 0.0)) / std::sqrt(var);
    m.zeta = m.b > 0.0 ? m.a / m.b : std::numeric_limits<double>::infinity();
    return m;
}

}  // namespace

MarcumArgs miss_args(const GroupHypothesisParams& params)
{
    return make_args(params, params.mu1, params.sigma1_sq, "miss_args");
}

MarcumArgs false_alarm_args(const GroupHypothesisParams& params)
{
    return make_args(params, params.mu0, params.sigma0_sq, "false_alarm_args");
}

double p_miss(const GroupHypothesisParams& params)
{
    const MarcumArgs m = miss_args(params);
    return marcum_q_complement(m.order, m.a, m.b);
}

double p_false(const GroupHypothesisParams& params)
{
    const MarcumArgs m = false_alarm_args(params);
    return marcum_q(m.order, m.a, m.b);
}

// log of e^{lambda b^2} E[e^{-lambda X}] for X ~ chi2_NC(T, a^2).
static double chernoff_log(double t, double a2, double b2, double lambda)
{
    const double s = 1.0 + 2.0 * lambda;
    return lambda * b2 - 0.5 * t * std::log(s) - lambda * a2 / s;
}

double optimal_lambda(const GroupHypothesisParams& params)
{
    const MarcumArgs m = miss_args(params);
    const double t = static_cast<double>(params.t_group);
    const double a2 = m.a * m.a;
    const double b2 = m.b * m.b;
    if (!(b2 < t + a2))
        throw std::domain_error("optimal_lambda: threshold not below the H1 mean of the statistic");
    // Stationary point in v = 1/(1 + 2 lambda): a^2 v^2 + T v - b^2 = 0.
    const double v = a2 > 0.0 ? 2.0 * b2 / (t + std::sqrt(t * t + 4.0 * a2 * b2)) : b2 / t;
    if (!(v > 0.0))
        return std::numeric_limits<double>::infinity();
    return 0.5 * (1.0 / v - 1.0);
}

double chernoff_pm_bound_at(const GroupHypothesisParams& params, double lambda)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("chernoff_pm_bound_at: lambda must be positive");
    const MarcumArgs m = miss_args(params);
    return std::exp(chernoff_log(static_cast<double>(params.t_group), m.a * m.a, m.b * m.b, lambda));
}

double chernoff_pm_bound(const GroupHypothesisParams& params)
{
    const MarcumArgs m = miss_args(params);
    if (!(m.b * m.b < static_cast<double>(params.t_group) + m.a * m.a))
        return 1.0;  // infimum over lambda > 0 is approached at lambda -> 0
    const double lambda = optimal_lambda(params);
    if (std::isinf(lambda))
        return 0.0;  // gamma = 0: the statistic is never below it
    return std::min(1.0, chernoff_pm_bound_at(params, lambda));
}

double Prefactor::value() const { return std::exp(log_value); }

Prefactor miss_prefactor(const GroupHypothesisParams& params)
{
    const MarcumArgs m = miss_args(params);
    const double t = static_cast<double>(params.t_group);
    Prefactor c;
    c.in_regime = m.zeta > 1.0;
    if (!c.in_regime || std::isinf(m.zeta)) {
        c.log_value = std::numeric_limits<double>::infinity();
        return c;
    }
    c.log_value = m.a * m.b + 0.5 * ((2.0 - t) * std::log(m.zeta) - std::log(2.0 * (m.zeta * m.zeta - 1.0)));
    return c;
}

Prefactor false_alarm_prefactor(const GroupHypothesisParams& params)
{
    const MarcumArgs m = false_alarm_args(params);
    const double t = static_cast<double>(params.t_group);
    const double n = static_cast<double>(params.n_beams);
    Prefactor c;
    c.in_regime = m.zeta < 1.0;
    if (!c.in_regime || m.zeta == 0.0) {
        c.log_value = std::numeric_limits<double>::infinity();
        return c;
    }
    c.log_value = m.a * m.b - n +
                  0.5 * ((2.0 - t) * std::log(m.zeta) - std::log(2.0 * std::abs(m.zeta * m.zeta - 1.0)));
    return c;
}

double detection_exponent(const GroupHypothesisParams& params, FalseAlarmExponent variant)
{
    if (!(params.noise_scale > 0.0))
        throw std::invalid_argument("detection_exponent: noise_scale must be positive");
    const double n = static_cast<double>(params.n_beams);
    const double logn = static_cast<double>(log2_exact(params.n_beams));
    const double total = static_cast<double>(params.t_group) * logn;
    const double scale = variant == FalseAlarmExponent::halved ? 2.0 : 1.0;
    return std::exp(-params.big_gain * total / (scale * n * params.noise_scale * logn));
}

}  // namespace beamsel
