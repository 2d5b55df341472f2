#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>

#include <Eigen/Core>

#include "beamsel/change_law.hpp"
#include "beamsel/rng.hpp"

namespace beamsel {

bool is_power_of_two(std::size_t n);
/// log2 of a power of two.
std::size_t log2_exact(std::size_t n);

struct StationaryGainPair {
    double big_gain = 1.0;    // G
    double small_gain = 0.0;  // g
    std::size_t best_index = 0;
};

/// Which beam undergoes the abrupt change: a fixed index, or the beam holding a
/// pre-change rank (1 = best) drawn uniformly from [first, last] per realization.
struct BeamTarget {
    std::size_t index = 0;
};
struct RankTarget {
    std::size_t first = 2;
    std::size_t last = 2;
};
using ChangeTarget = std::variant<BeamTarget, RankTarget>;

struct ChangeSchedule {
    ChangeTarget target = BeamTarget{};
    /// Overrides the changed beam's entry in the mean vector when present.
    std::optional<double> pre_mean;
    double post_mean = 0.0;
    ChangeLaw slot_law = ChangeLaw::fixed(0);
};

/// Ground-truth template: pre-change mean vector (linear power), the noise
/// scale sigma^2 and an optional single abrupt change. Immutable once built.
class EnvironmentSpec {
public:
    EnvironmentSpec(Eigen::VectorXd means, double noise_scale,
                    std::optional<ChangeSchedule> change = std::nullopt, bool allow_ties = false);

    std::size_t n_beams() const { return static_cast<std::size_t>(means_.size()); }
    const Eigen::VectorXd& means() const { return means_; }
    double noise_scale() const { return noise_scale_; }
    const std::optional<ChangeSchedule>& change() const { return change_; }
    bool allow_ties() const { return allow_ties_; }

    /// Beam index holding the given pre-change rank (1 = largest mean).
    std::size_t beam_with_rank(std::size_t rank) const;

private:
    Eigen::VectorXd means_;
    double noise_scale_;
    std::optional<ChangeSchedule> change_;
    bool allow_ties_;
};

struct RealizedChange {
    std::size_t beam = 0;
    double pre_mean = 0.0;
    double post_mean = 0.0;
    /// Slots t <= slot use pre_mean, t > slot use post_mean.
    std::int64_t slot = 0;
};

/// One realization of an EnvironmentSpec: the change beam and slot are fixed.
class BeamEnvironment {
public:
    BeamEnvironment(Eigen::VectorXd means, double noise_scale,
                    std::optional<RealizedChange> change = std::nullopt);

    std::size_t n_beams() const { return static_cast<std::size_t>(means_.size()); }
    double noise_scale() const { return noise_scale_; }
    const Eigen::VectorXd& base_means() const { return means_; }
    const std::optional<RealizedChange>& change() const { return change_; }
    bool stationary() const { return !change_.has_value(); }

    double mean_at(std::size_t beam, std::int64_t t) const;
    Eigen::VectorXd means_at(std::int64_t t) const;
    /// argmax_i mu_i(t); lowest index on ties.
    std::size_t best_beam_at(std::int64_t t) const;

private:
    Eigen::VectorXd means_;
    double noise_scale_;
    std::optional<RealizedChange> change_;
};

EnvironmentSpec make_stationary(std::size_t n_beams, const StationaryGainPair& gains, double noise_scale);

/// Binds the change beam and draws t_c for the horizon.
BeamEnvironment realize(const EnvironmentSpec& spec, std::int64_t horizon, Rng& rng);
BeamEnvironment realize_stationary(const EnvironmentSpec& spec);

double mean_at(const BeamEnvironment& env, std::size_t beam, std::int64_t t);

/// One received-power draw from Normal(mu_i(t), 2 sigma^2 mu_i(t)).
/// Zero-mean beams return exactly 0 without touching the generator.
double sample_beam(const BeamEnvironment& env, std::size_t beam, std::int64_t t, Rng& rng);

/// Group mean 2/N * sum mu_i(t); variance 2 sigma^2 times the group mean.
double group_mean(const BeamEnvironment& env, std::span<const std::size_t> group, std::int64_t t);
double group_variance(const BeamEnvironment& env, std::span<const std::size_t> group, std::int64_t t);
double sample_group(const BeamEnvironment& env, std::span<const std::size_t> group, std::int64_t t, Rng& rng);

// ---------------------------------------------------------------------------
// Case-study channel

struct PathLossModel {
    enum class Kind { free_space, log_distance };
    Kind kind = Kind::free_space;
    double exponent = 2.0;             // log_distance only
    double reference_distance_m = 1.0; // log_distance only
};

struct CaseStudyChannel {
    double distance_m = 100.0;
    double bandwidth_hz = 1e9;
    double tx_power_dbm = 40.0;
    double carrier_hz = 28e9;
    double noise_figure_db = 0.0;
    PathLossModel pathloss;
};

double path_loss_db(const CaseStudyChannel& channel);
double noise_power_dbm(const CaseStudyChannel& channel);
/// xi_0: linear SNR at the receiver without beam directivity.
double reference_snr(const CaseStudyChannel& channel);

/// Angular width 2 pi / N covered by each beam of an N-beam codebook.
double beamwidth(std::size_t n_beams);
/// Main-lobe directivity of a beam of width 2 pi / N; equals N.
double directivity_gain(std::size_t n_beams);

/// Noise-normalized means: the aligned beam carries xi_0 * directivity,
/// misaligned beams carry 0. noise_scale is 1 (noise power units).
EnvironmentSpec channel_to_means(const CaseStudyChannel& channel, std::size_t n_beams,
                                 std::size_t best_index = 0);

}  // namespace beamsel
