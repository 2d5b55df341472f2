#include "beamsel/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "beamsel/environment.hpp"

namespace beamsel {

namespace {

double logn_of(std::size_t n_beams)
{
    if (n_beams < 2 || !is_power_of_two(n_beams))
        throw std::invalid_argument("bounds: beam count must be a power of two >= 2");
    return static_cast<double>(log2_exact(n_beams));
}

void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("bounds: ") + what + " must be positive and finite");
}

double change_exponent(double t, std::size_t n_beams, double delta_min, double sigma_max_sq, ExponentForm form)
{
    const double n = static_cast<double>(n_beams);
    const double logn = logn_of(n_beams);
    const double s = form == ExponentForm::with_sigma_max ? sigma_max_sq : 1.0;
    require_positive(s, "sigma_max^2");
    return std::exp(-delta_min * delta_min * t / (2.0 * n * logn * s));
}

}  // namespace

BoundValue make_bound(double raw)
{
    BoundValue b;
    b.raw = raw;
    b.value = std::isnan(raw) ? 1.0 : std::clamp(raw, 0.0, 1.0);
    b.vacuous = !(raw < 1.0);
    return b;
}

BoundValue bound_exhaustive(double t, std::size_t n_beams, double delta_min, double noise_scale, double mu_max)
{
    logn_of(n_beams);
    require_positive(delta_min, "delta_min");
    require_positive(noise_scale, "noise_scale");
    require_positive(mu_max, "mu_max");
    const double n = static_cast<double>(n_beams);
    return make_bound(n * std::exp(-t * delta_min * delta_min / (8.0 * n * noise_scale * mu_max)));
}

CbeBound bound_cbe(std::size_t t, std::size_t n_beams, double big_gain, double small_gain, double noise_scale,
                   FalseAlarmExponent variant)
{
    const double logn = logn_of(n_beams);
    const std::size_t per_group = t / static_cast<std::size_t>(logn);
    if (per_group < 1)
        throw std::invalid_argument("bound_cbe: budget smaller than the group count");
    const auto params = group_params(n_beams, big_gain, small_gain, noise_scale, per_group);

    CbeBound out;
    out.c1 = miss_prefactor(params);
    out.c0 = false_alarm_prefactor(params);
    out.in_regime = out.c1.in_regime && out.c0.in_regime;
    out.log_l1 = std::max(out.c1.log_value, out.c0.log_value);
    out.exponent = detection_exponent(params, variant);
    const double n = static_cast<double>(n_beams);
    const double scale = variant == FalseAlarmExponent::halved ? 2.0 : 1.0;
    const double log_raw = out.log_l1 + std::log(logn) -
                           big_gain * static_cast<double>(t) / (scale * n * noise_scale * logn);
    out.bound = make_bound(out.in_regime ? std::exp(log_raw) : std::numeric_limits<double>::infinity());
    return out;
}

BoundValue bound_karnin(double t, std::size_t n_beams, double big_gain, double small_gain)
{
    const double logn = logn_of(n_beams);
    if (!(big_gain > small_gain))
        throw std::invalid_argument("bound_karnin: requires G > g");
    const double n = static_cast<double>(n_beams);
    return make_bound(3.0 * logn * std::exp(-t * (big_gain - small_gain) / (8.0 * n * logn)));
}

BoundValue bound_sh_no_change(double t, std::size_t n_beams, double delta_min)
{
    const double logn = logn_of(n_beams);
    const double n = static_cast<double>(n_beams);
    return make_bound(logn * std::exp(-delta_min * delta_min * t / (2.0 * n * logn)));
}

PairRoundBound bound_pij_rc(double n_rc, double delta_plus, double delta_c, double delta_min, double t,
                            std::size_t n_beams, double sigma_max_sq, const ShapeLaw& within_round)
{
    if (delta_c == 0.0)
        throw std::invalid_argument("bound_pij_rc: delta_c must be nonzero");
    require_positive(n_rc, "n_rc");
    within_round.validate();

    PairRoundBound out;
    const double e = change_exponent(t, n_beams, delta_min, sigma_max_sq, ExponentForm::with_sigma_max);
    out.n_star = std::clamp(-n_rc * delta_plus / delta_c, 0.0, n_rc);
    const double f = within_round.cdf(out.n_star / n_rc);

    if (delta_plus >= 0.0 && delta_c > 0.0) {
        out.case_label = 1;
        out.bound = make_bound(1.0);
    } else if (delta_plus < 0.0 && delta_c > 0.0) {
        out.case_label = std::abs(delta_plus) > std::abs(delta_c) ? 2 : 3;
        // Case 2 has n* >= n_rc, so F = 1 and only the exponential remains.
        out.bound = make_bound(1.0 - f * (1.0 - e));
    } else if (delta_c < 0.0 && delta_plus > 0.0) {
        out.case_label = 4;
        // Changes before n* leave i ahead (bounded by 1); later ones decay.
        out.bound = make_bound(1.0 - (1.0 - f) * (1.0 - e));
    } else {
        // j ahead of i both before and after the change.
        out.case_label = 0;
        out.bound = make_bound(e);
    }
    return out;
}

BoundValue bound_pk_rc(double delta_min, double delta_c, double sigma_max_sq, const ShapeLaw& within_round)
{
    require_positive(delta_c, "delta_c");
    require_positive(sigma_max_sq, "sigma_max^2");
    within_round.validate();
    const double f = within_round.cdf(delta_min / delta_c);
    return make_bound(2.0 * (1.0 - f * (1.0 - std::exp(-delta_min * delta_min / (2.0 * sigma_max_sq)))));
}

std::vector<std::pair<std::int64_t, std::int64_t>> sh_round_slots(std::size_t t, std::size_t n_beams)
{
    const auto logn = static_cast<std::size_t>(logn_of(n_beams));
    std::vector<std::pair<std::int64_t, std::int64_t>> spans;
    std::int64_t used = 0;
    std::size_t size = n_beams;
    for (std::size_t r = 1; r <= logn; ++r, size /= 2) {
        const auto len = static_cast<std::int64_t>((t / (size * logn)) * size);
        spans.emplace_back(used + 1, used + len);
        used += len;
    }
    return spans;
}

RoundLaw round_law(const ChangeLaw& law, std::size_t t, std::size_t n_beams)
{
    const auto horizon = static_cast<std::int64_t>(t);
    RoundLaw out;
    double assigned = 0.0;
    for (const auto& [first, last] : sh_round_slots(t, n_beams)) {
        // The first post-change sample is slot t_c + 1.
        const double p = last >= first ? law.cdf(static_cast<double>(last - 1), horizon) -
                                             law.cdf(static_cast<double>(first - 2), horizon)
                                       : 0.0;
        out.prob.push_back(std::max(p, 0.0));
        assigned += out.prob.back();
    }
    out.beyond = std::max(0.0, 1.0 - assigned);
    return out;
}

double expected_late_rounds(const RoundLaw& law, std::size_t r_star)
{
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t r = std::max<std::size_t>(r_star, 1); r <= law.prob.size(); ++r) {
        mass += law.prob[r - 1];
        acc += static_cast<double>(r - r_star) * law.prob[r - 1];
    }
    return mass > 0.0 ? acc / mass : 0.0;
}

BoundValue bound_early_change(double t, std::size_t n_beams, std::size_t k, double delta_min, double sigma_max_sq,
                              ExponentForm form)
{
    const double logn = logn_of(n_beams);
    const double e = change_exponent(t, n_beams, delta_min, sigma_max_sq, form);
    return make_bound(2.0 * (logn + static_cast<double>(k) - 1.0) * e);
}

LateChangeBound bound_late_change(double t, std::size_t n_beams, std::size_t k, double delta_min,
                                  double sigma_max_sq, const RoundLaw& law, std::size_t r_star, ExponentForm form)
{
    LateChangeBound out;
    out.t1 = expected_late_rounds(law, r_star);
    const double n = static_cast<double>(n_beams);
    out.exponential = 2.0 * std::log2(2.0 * n * static_cast<double>(k)) *
                      change_exponent(t, n_beams, delta_min, sigma_max_sq, form);
    out.total = make_bound(out.t1 + out.exponential);
    return out;
}

LateChangeBound bound_sh_total(double t, std::size_t n_beams, std::size_t k, double delta_min,
                               double sigma_max_sq, const std::optional<RoundLaw>& law, std::size_t r_star,
                               ExponentForm form)
{
    const double logn = logn_of(n_beams);
    const double e = change_exponent(t, n_beams, delta_min, sigma_max_sq, form);
    LateChangeBound out;
    if (!law) {
        out.exponential = logn * e;
    } else {
        out.t1 = expected_late_rounds(*law, r_star);
        out.exponential = 2.0 * (2.0 * logn + static_cast<double>(k) - 1.0) * e;
    }
    out.total = make_bound(out.t1 + out.exponential);
    return out;
}

double kshes_round_factor(std::size_t n_beams, std::size_t k)
{
    logn_of(n_beams);
    if (k < 1)
        throw std::invalid_argument("kshes_round_factor: K must be >= 1");
    const double n = static_cast<double>(n_beams);
    const double kk = static_cast<double>(k);
    return std::log2(n * n / (2.0 * kk)) + kk * (2.0 * std::log2(2.0 * kk) + 1.0);
}

double kshes_safe_slot(double t, std::size_t n_beams, std::size_t k)
{
    const double logn = logn_of(n_beams);
    if (k < 1 || k > n_beams / 2)
        throw std::invalid_argument("kshes_safe_slot: K must lie in [1, N/2]");
    const double n = static_cast<double>(n_beams);
    const double two_k = 2.0 * static_cast<double>(k);
    return t * (std::log2(n / two_k) / logn * (1.0 - 1.0 / two_k) + 1.0 / two_k);
}

std::int64_t kshes_halving_end(std::size_t t, std::size_t n_beams, std::size_t r_star)
{
    const auto spans = sh_round_slots(t, n_beams);
    if (r_star == 0)
        return 0;
    if (r_star > spans.size())
        throw std::invalid_argument("kshes_halving_end: r* beyond the last round");
    return spans[r_star - 1].second;
}

std::vector<double> kshes_crossing_slots(std::size_t t, std::size_t n_beams, std::size_t r_star,
                                         std::span<const double> above, double pre_mean, double post_mean)
{
    const double delta_c = post_mean - pre_mean;
    require_positive(delta_c, "delta_c");
    const auto start = static_cast<double>(kshes_halving_end(t, n_beams, r_star));
    const double length = static_cast<double>(t) - start;
    std::vector<double> slots;
    for (double mu_i : above) {
        const double frac = std::clamp((post_mean - mu_i) / delta_c, 0.0, 1.0);
        slots.push_back(start + length * frac);
    }
    return slots;
}

KshesBound bound_kshes(std::size_t t, std::size_t n_beams, std::size_t k, double delta_min, double sigma_max_sq,
                       const ChangeLaw& law, std::size_t r_star, std::span<const double> crossing_slots)
{
    const double n = static_cast<double>(n_beams);
    const double logn = logn_of(n_beams);
    require_positive(sigma_max_sq, "sigma_max^2");
    if (crossing_slots.size() + 1 != k)
        throw std::invalid_argument("bound_kshes: need K - 1 crossing slots");

    KshesBound out;
    out.round_factor = kshes_round_factor(n_beams, k);
    out.safe_slot = kshes_safe_slot(static_cast<double>(t), n_beams, k);
    out.crossing_slots.assign(crossing_slots.begin(), crossing_slots.end());

    const double td = static_cast<double>(t);
    const double d2 = delta_min * delta_min;
    const double main_exp = std::exp(-d2 * td / (4.0 * n * logn * sigma_max_sq));
    const double slot_exp = std::exp(-d2 / (2.0 * n * logn * sigma_max_sq));

    const auto horizon = static_cast<std::int64_t>(t);
    const auto start = static_cast<double>(kshes_halving_end(t, n_beams, r_star));
    const double tail_from = 1.0 - law.cdf(start - 1.0, horizon);  // P(t_c >= start)
    for (double ti : crossing_slots) {
        double f = 0.0;
        if (tail_from > 0.0)
            f = std::clamp((law.cdf(ti, horizon) - law.cdf(start - 1.0, horizon)) / tail_from, 0.0, 1.0);
        out.crossing_sum += 1.0 - f * (1.0 - slot_exp);
    }
    out.general = make_bound(out.round_factor * main_exp + out.crossing_sum);
    out.early_window = make_bound(2.0 * (2.0 * logn + 2.0 * static_cast<double>(k) - 1.0) * main_exp);
    return out;
}

double mean_deviation_bound(double t_i, double eps, double noise_scale, double mu_i)
{
    require_positive(mu_i, "mu_i");
    require_positive(noise_scale, "noise_scale");
    const double sigma_i_sq = 2.0 * noise_scale * mu_i;
    return std::exp(-t_i * eps * eps / (4.0 * sigma_i_sq * mu_i));
}

}  // namespace beamsel
