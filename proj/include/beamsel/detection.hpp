#pragma once

#include <cstddef>
#include <span>

namespace beamsel {

/// Per-group hypothesis model for concurrent beam exploration. Under H1 the
/// user's beam is in the active group; under H0 it is not. Samples are
/// Normal(mu_l, sigma_l^2) with the group-power model, and the test compares
/// the sum of squared samples against gamma.
struct GroupHypothesisParams {
    std::size_t n_beams = 0;
    double big_gain = 0.0;    // G
    double small_gain = 0.0;  // g
    double noise_scale = 0.0; // sigma^2
    std::size_t t_group = 0;  // samples per group

    double g_prime = 0.0;  // (N/2 - 1) g + G
    double mu0 = 0.0;
    double mu1 = 0.0;
    double sigma0_sq = 0.0;
    double sigma1_sq = 0.0;
    double gamma = 0.0;
};

struct MarcumArgs {
    double order = 0.0;  // t_group / 2
    double a = 0.0;
    double b = 0.0;
    double zeta = 0.0;   // a / b
};

GroupHypothesisParams group_params(std::size_t n_beams, double big_gain, double small_gain, double noise_scale,
                                   std::size_t t_group);

/// Sum of squares of the group samples.
double test_statistic(std::span<const double> samples);

/// True when the statistic reaches gamma; equality counts as a detection.
bool detect_user(std::span<const double> samples, const GroupHypothesisParams& params);

/// Marcum arguments of the missed-detection (H1) and false-alarm (H0) events.
MarcumArgs miss_args(const GroupHypothesisParams& params);
MarcumArgs false_alarm_args(const GroupHypothesisParams& params);

double p_miss(const GroupHypothesisParams& params);
double p_false(const GroupHypothesisParams& params);

/// Chernoff bound on the missed-detection probability, P(X <= b^2) with
/// X ~ chi2_NC(t_group, a^2), evaluated at the optimal parameter.
double chernoff_pm_bound(const GroupHypothesisParams& params);
/// Minimizer of the Chernoff exponent over lambda > 0 (bound uses e^{-lambda X}).
double optimal_lambda(const GroupHypothesisParams& params);
/// Chernoff bound at an arbitrary lambda > 0, unclamped.
double chernoff_pm_bound_at(const GroupHypothesisParams& params, double lambda);

/// Log of a Cauchy-Schwarz prefactor together with whether its zeta regime holds.
struct Prefactor {
    double log_value = 0.0;
    bool in_regime = false;
    double value() const;
};

/// C1 = exp(a1 b1) sqrt(zeta1^{2(1 - T/2)} / (2 (zeta1^2 - 1))), valid for zeta1 > 1.
Prefactor miss_prefactor(const GroupHypothesisParams& params);
/// C0 = exp(a0 b0) exp(-N) sqrt(zeta0^{2(1 - T/2)} / (2 |zeta0^2 - 1|)), valid for zeta0 < 1.
Prefactor false_alarm_prefactor(const GroupHypothesisParams& params);

enum class FalseAlarmExponent {
    halved,  // -G T / (2 N sigma^2 log N)
    full,    // -G T / (N sigma^2 log N)
};

/// Exponential factor shared by the miss and false-alarm bounds; T = t_group * log2 N.
double detection_exponent(const GroupHypothesisParams& params,
                          FalseAlarmExponent variant = FalseAlarmExponent::halved);

}  // namespace beamsel
