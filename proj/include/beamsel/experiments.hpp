#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "beamsel/algorithms.hpp"
#include "beamsel/environment.hpp"

namespace beamsel {

enum class PolicyKind { exhaustive, cbe, sh, kshes };

std::string to_string(PolicyKind kind);
PolicyKind policy_from_string(const std::string& name);

struct PolicySpec {
    PolicyKind kind = PolicyKind::sh;
    std::size_t k = 1;   // K-SHES only
    int r_offset = 0;    // K-SHES only: added to floor(log2(N / 2K))

    std::string label() const;
};

/// Runs one policy on a realized environment and returns the selected beam.
std::size_t run_policy(const PolicySpec& policy, const BeamEnvironment& env, std::size_t budget, Rng& rng);

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for `errors` out of `trials` (default 95%).
WilsonInterval wilson_interval(std::size_t errors, std::size_t trials, double z = 1.959963984540054);

struct ErrorEstimate {
    std::string policy;
    std::size_t errors = 0;
    std::size_t trials = 0;
    double error = 0.0;
    WilsonInterval ci;
    double elapsed_s = 0.0;
};

struct RunOptions {
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

/// Error indicators of one sweep point: trial-major, one column per policy.
/// Every policy in a trial sees the same environment realization and the
/// same noise seed.
struct PointResult {
    std::vector<ErrorEstimate> estimates;
    std::vector<std::uint8_t> indicators;  // trials x policies
    std::size_t n_policies = 0;

    bool failed(std::size_t trial, std::size_t policy) const { return indicators[trial * n_policies + policy] != 0; }
};

/// The change slot is drawn over [0, change_horizon] (the budget when 0);
/// truth is the best beam at slot `budget`.
PointResult estimate_point(const EnvironmentSpec& env, std::size_t budget, const std::vector<PolicySpec>& policies,
                           const RunOptions& options, std::uint64_t point_id = 0, std::int64_t change_horizon = 0);

ErrorEstimate estimate_error(const PolicySpec& policy, const EnvironmentSpec& env, std::size_t budget,
                             const RunOptions& options);

struct PairedDifference {
    double mean = 0.0;  // error(a) - error(b)
    double se = 0.0;    // sd of per-trial differences / sqrt(trials)
    /// mean / se; +-inf when se is 0 and the mean is not.
    double z() const;
};

PairedDifference paired_difference(const PointResult& result, std::size_t a, std::size_t b);

using AxisValues = std::vector<std::pair<std::string, std::string>>;

struct SweepPoint {
    AxisValues axes;
    EnvironmentSpec env;
    std::size_t budget = 0;
    std::int64_t change_horizon = 0;
};

struct SweepRow {
    std::string policy;
    AxisValues axes;
    ErrorEstimate estimate;
    std::uint64_t seed = 0;
};

/// Runs every policy at every point with common random numbers per point.
std::vector<SweepRow> run_comparison_sweep(const std::vector<SweepPoint>& points,
                                           const std::vector<PolicySpec>& policies, const RunOptions& options);

struct ChangeWindowRow {
    std::string window;  // "early" or "late"
    std::int64_t first_slot = 0;
    std::int64_t last_slot = 0;
    ErrorEstimate sh;
    ErrorEstimate kshes;
    PairedDifference kshes_minus_sh;
};

/// Change confined to [0, kshes_safe_slot] ("early") or to the slots after
/// the K-SHES halving phase ("late"); `env` supplies everything but the law.
std::vector<ChangeWindowRow> run_change_location_study(const EnvironmentSpec& env, std::size_t budget,
                                                       const PolicySpec& kshes, const RunOptions& options);

// ---------------------------------------------------------------------------
// Case study: beam alignment followed by data transmission in one frame.

/// (1 - Pe) (T_D / T_tot) W log2(1 + xi0 D(N)) with T_D = T_tot - T.
double rate(std::size_t n_beams, double t, double t_total, double bandwidth_hz, double xi0, double pe);

struct CaseStudyConfig {
    CaseStudyChannel channel;
    std::vector<std::size_t> n_grid{8, 16, 32, 64, 128, 256, 512};
    std::vector<double> fractions{0.01, 0.02, 0.05, 0.1};
    std::size_t frame_slots = 35072;
    double blockage_db = 20.0;  // LOS-to-blocked power ratio of the best beam
    std::size_t k = 1;
};

struct RatePoint {
    std::size_t n_beams = 0;
    double fraction = 0.0;
    std::size_t budget = 0;
    bool feasible = false;
    ErrorEstimate estimate;
    double rate_bps = 0.0;
};

struct CaseStudyResult {
    std::vector<RatePoint> points;
    std::map<double, std::size_t> best_n_per_fraction;
    std::map<std::size_t, double> best_fraction_per_n;
};

/// Environment of one case-study cell: beam N-1 is blocked until a change slot
/// uniform over the frame, then line-of-sight; every other beam is silent.
EnvironmentSpec case_study_environment(const CaseStudyConfig& config, std::size_t n_beams);

CaseStudyResult optimize_case_study(const CaseStudyConfig& config, const RunOptions& options);

/// Runs fn(i) for i in [0, count) on `workers` threads. Each index is handled
/// exactly once; callers write to disjoint slots so results do not depend on
/// scheduling.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace beamsel
