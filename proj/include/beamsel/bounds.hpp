#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beamsel/change_law.hpp"
#include "beamsel/detection.hpp"

namespace beamsel {

/// Raw bound value (may exceed 1) and its clamp to [0, 1].
struct BoundValue {
    double raw = 0.0;
    double value = 0.0;
    bool vacuous = false;  // raw >= 1: the bound says nothing
};

BoundValue make_bound(double raw);

/// Selects the exponent of the SH change bounds: the default carries
/// sigma_max^2 in the denominator, the literal form omits it.
enum class ExponentForm { with_sigma_max, literal };

/// N exp(-T dmin^2 / (8 N sigma^2 mu_max)).
BoundValue bound_exhaustive(double t, std::size_t n_beams, double delta_min, double noise_scale, double mu_max);

struct CbeBound {
    BoundValue bound;
    Prefactor c1;
    Prefactor c0;
    double log_l1 = 0.0;    // log max(C1, C0)
    double exponent = 0.0;  // exp(-G T / (2 N sigma^2 log N))
    bool in_regime = false; // both prefactor regimes hold
};

/// L1 log N exp(-G T / (2 N sigma^2 log N)) with L1 = max(C1, C0); T is split
/// into floor(T / log2 N) samples per group.
CbeBound bound_cbe(std::size_t t, std::size_t n_beams, double big_gain, double small_gain, double noise_scale,
                   FalseAlarmExponent variant = FalseAlarmExponent::halved);

/// 3 log N exp(-T (G - g) / (8 N log N)).
BoundValue bound_karnin(double t, std::size_t n_beams, double big_gain, double small_gain);

/// log N exp(-dmin^2 T / (2 N log N)): SH with no change.
BoundValue bound_sh_no_change(double t, std::size_t n_beams, double delta_min);

struct PairRoundBound {
    BoundValue bound;
    int case_label = 0;  // 1..4 by the signs of (delta_plus, delta_c); 0 otherwise
    double n_star = 0.0; // -n_rc delta_plus / delta_c, clamped to [0, n_rc]
};

/// Bound on the probability that beam j (changing within the round) ends the
/// round below beam i. `within_round` is the CDF of the change slot within
/// the round, expressed on [0, 1].
PairRoundBound bound_pij_rc(double n_rc, double delta_plus, double delta_c, double delta_min, double t,
                            std::size_t n_beams, double sigma_max_sq, const ShapeLaw& within_round);

/// 2 [1 - F(n_max) (1 - exp(-dmin^2 / (2 sigma_max^2)))], n_max = n_rc dmin / dc.
BoundValue bound_pk_rc(double delta_min, double delta_c, double sigma_max_sq, const ShapeLaw& within_round);

/// Probability mass of the SH round that receives the first post-change
/// sample; index r - 1 for round r. `beyond` is the mass of changes after the
/// last sampled slot.
struct RoundLaw {
    std::vector<double> prob;
    double beyond = 0.0;
};

/// Slot span [first, last] of every SH round under floor allocations.
std::vector<std::pair<std::int64_t, std::int64_t>> sh_round_slots(std::size_t t, std::size_t n_beams);

RoundLaw round_law(const ChangeLaw& law, std::size_t t, std::size_t n_beams);

/// E[r_c - r* | r* <= r_c <= log N]; zero when that event has no mass.
double expected_late_rounds(const RoundLaw& law, std::size_t r_star);

/// 2 (log N + K - 1) exp(-dmin^2 T / (2 N log N sigma_max^2)).
BoundValue bound_early_change(double t, std::size_t n_beams, std::size_t k, double delta_min, double sigma_max_sq,
                              ExponentForm form = ExponentForm::with_sigma_max);

struct LateChangeBound {
    double t1 = 0.0;
    double exponential = 0.0;
    BoundValue total;
};

/// T1 + 2 log2(2 N K) exp(-dmin^2 T / (2 N log N sigma_max^2)).
LateChangeBound bound_late_change(double t, std::size_t n_beams, std::size_t k, double delta_min,
                                  double sigma_max_sq, const RoundLaw& law, std::size_t r_star,
                                  ExponentForm form = ExponentForm::with_sigma_max);

/// T1 + 2 (2 log N + K - 1) exp(...); with no change, log N exp(...).
LateChangeBound bound_sh_total(double t, std::size_t n_beams, std::size_t k, double delta_min,
                               double sigma_max_sq, const std::optional<RoundLaw>& law, std::size_t r_star,
                               ExponentForm form = ExponentForm::with_sigma_max);

/// log2(N^2 / 2K) + K (2 log2(2K) + 1).
double kshes_round_factor(std::size_t n_beams, std::size_t k);

/// T [(log(N/2K) / log N)(1 - 1/2K) + 1/2K].
double kshes_safe_slot(double t, std::size_t n_beams, std::size_t k);

struct KshesBound {
    BoundValue general;
    BoundValue early_window;  // valid only when the change lies inside the window
    double safe_slot = 0.0;
    double round_factor = 0.0;
    double crossing_sum = 0.0;
    std::vector<double> crossing_slots;
};

/// Slot after which K-SHES stops eliminating (end of round r*).
std::int64_t kshes_halving_end(std::size_t t, std::size_t n_beams, std::size_t r_star);

/// Absolute slots at which the changed beam's running sum would overtake each
/// of the K - 1 beams ranked above it, assuming the change lands at the start
/// of the equal-allocation phase. `above` holds their pre-change means.
std::vector<double> kshes_crossing_slots(std::size_t t, std::size_t n_beams, std::size_t r_star,
                                         std::span<const double> above, double pre_mean, double post_mean);

/// General K-SHES bound and its early-window form. F_{t_c}(t_i | r*) is the
/// change-slot CDF conditioned on t_c past the halving phase.
KshesBound bound_kshes(std::size_t t, std::size_t n_beams, std::size_t k, double delta_min, double sigma_max_sq,
                       const ChangeLaw& law, std::size_t r_star, std::span<const double> crossing_slots);

/// exp(-T_i eps^2 / (4 sigma_i^2 mu_i)) with sigma_i^2 = 2 sigma^2 mu_i.
double mean_deviation_bound(double t_i, double eps, double noise_scale, double mu_i);

}  // namespace beamsel
