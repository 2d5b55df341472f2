#include "beamsel/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamsel {

namespace {

void require_power_of_two(std::size_t n)
{
    if (n < 2 || !is_power_of_two(n))
        throw std::invalid_argument("n_beams must be a power of two >= 2, got " + std::to_string(n));
}

// Largest mean excluding one index.
double max_excluding(const Eigen::VectorXd& means, std::size_t skip)
{
    double best = -1.0;
    for (Eigen::Index i = 0; i < means.size(); ++i)
        if (static_cast<std::size_t>(i) != skip)
            best = std::max(best, means[i]);
    return best;
}

bool unique_argmax(const Eigen::VectorXd& means)
{
    const double top = means.maxCoeff();
    return (means.array() == top).count() == 1;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t log2_exact(std::size_t n)
{
    if (!is_power_of_two(n))
        throw std::invalid_argument("log2_exact: not a power of two");
    std::size_t d = 0;
    while ((std::size_t{1} << d) < n)
        ++d;
    return d;
}

EnvironmentSpec::EnvironmentSpec(Eigen::VectorXd means, double noise_scale,
                                 std::optional<ChangeSchedule> change, bool allow_ties)
    : means_(std::move(means)), noise_scale_(noise_scale), change_(std::move(change)), allow_ties_(allow_ties)
{
    require_power_of_two(n_beams());
    if (!means_.allFinite() || (means_.array() < 0.0).any())
        throw std::invalid_argument("beam means must be finite and nonnegative");
    if (!std::isfinite(noise_scale_) || noise_scale_ < 0.0)
        throw std::invalid_argument("noise_scale must be finite and nonnegative");

    if (change_) {
        change_->slot_law.validate();
        if (const auto* b = std::get_if<BeamTarget>(&change_->target)) {
            if (b->index >= n_beams())
                throw std::out_of_range("changed beam index out of range");
            if (change_->pre_mean)
                means_[static_cast<Eigen::Index>(b->index)] = *change_->pre_mean;
            const double pre = means_[static_cast<Eigen::Index>(b->index)];
            if (!(change_->post_mean > max_excluding(means_, b->index)))
                throw std::invalid_argument("post-change mean must exceed every other beam mean");
            if (!(pre < change_->post_mean))
                throw std::invalid_argument("pre-change mean must be below the post-change mean");
        } else {
            const auto& r = std::get<RankTarget>(change_->target);
            if (r.first < 1 || r.first > r.last || r.last > n_beams())
                throw std::invalid_argument("change rank range must satisfy 1 <= first <= last <= n_beams");
            if (change_->pre_mean)
                throw std::invalid_argument("pre_mean override is only valid for a fixed changed beam");
            Eigen::VectorXd sorted = means_;
            std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
            const double ceiling = r.first == 1 ? sorted[1] : sorted[0];
            if (!(change_->post_mean > ceiling))
                throw std::invalid_argument("post-change mean must exceed every other beam mean");
        }
    }

    if (!allow_ties_ && !unique_argmax(means_))
        throw std::invalid_argument("beam means must have a unique maximum");
}

std::size_t EnvironmentSpec::beam_with_rank(std::size_t rank) const
{
    if (rank < 1 || rank > n_beams())
        throw std::out_of_range("rank out of range");
    std::vector<std::size_t> order(n_beams());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return means_[static_cast<Eigen::Index>(a)] > means_[static_cast<Eigen::Index>(b)];
    });
    return order[rank - 1];
}

BeamEnvironment::BeamEnvironment(Eigen::VectorXd means, double noise_scale, std::optional<RealizedChange> change)
    : means_(std::move(means)), noise_scale_(noise_scale), change_(change)
{
    if (change_) {
        if (change_->beam >= n_beams())
            throw std::out_of_range("changed beam index out of range");
        means_[static_cast<Eigen::Index>(change_->beam)] = change_->pre_mean;
    }
}

double BeamEnvironment::mean_at(std::size_t beam, std::int64_t t) const
{
    if (beam >= n_beams())
        throw std::out_of_range("beam index out of range");
    if (change_ && beam == change_->beam)
        return t <= change_->slot ? change_->pre_mean : change_->post_mean;
    return means_[static_cast<Eigen::Index>(beam)];
}

Eigen::VectorXd BeamEnvironment::means_at(std::int64_t t) const
{
    Eigen::VectorXd m = means_;
    if (change_ && t > change_->slot)
        m[static_cast<Eigen::Index>(change_->beam)] = change_->post_mean;
    return m;
}

std::size_t BeamEnvironment::best_beam_at(std::int64_t t) const
{
    Eigen::Index idx = 0;
    means_at(t).maxCoeff(&idx);
    return static_cast<std::size_t>(idx);
}

EnvironmentSpec make_stationary(std::size_t n_beams, const StationaryGainPair& gains, double noise_scale)
{
    require_power_of_two(n_beams);
    if (gains.best_index >= n_beams)
        throw std::out_of_range("best_index out of range");
    if (!(gains.small_gain >= 0.0) || !(gains.big_gain > gains.small_gain))
        throw std::invalid_argument("gains require G > g >= 0 (no unique argmax otherwise)");
    Eigen::VectorXd means = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_beams), gains.small_gain);
    means[static_cast<Eigen::Index>(gains.best_index)] = gains.big_gain;
    return EnvironmentSpec(std::move(means), noise_scale);
}

BeamEnvironment realize(const EnvironmentSpec& spec, std::int64_t horizon, Rng& rng)
{
    const auto& change = spec.change();
    if (!change)
        return BeamEnvironment(spec.means(), spec.noise_scale());

    std::size_t beam = 0;
    if (const auto* b = std::get_if<BeamTarget>(&change->target)) {
        beam = b->index;
    } else {
        const auto& r = std::get<RankTarget>(change->target);
        std::uniform_int_distribution<std::size_t> pick(r.first, r.last);
        beam = spec.beam_with_rank(pick(rng));
    }
    const std::int64_t slot = realize_change_slot(change->slot_law, horizon, rng);
    const double pre = spec.means()[static_cast<Eigen::Index>(beam)];
    return BeamEnvironment(spec.means(), spec.noise_scale(), RealizedChange{beam, pre, change->post_mean, slot});
}

BeamEnvironment realize_stationary(const EnvironmentSpec& spec)
{
    if (spec.change())
        throw std::invalid_argument("realize_stationary called on a changing environment");
    return BeamEnvironment(spec.means(), spec.noise_scale());
}

double mean_at(const BeamEnvironment& env, std::size_t beam, std::int64_t t) { return env.mean_at(beam, t); }

double sample_beam(const BeamEnvironment& env, std::size_t beam, std::int64_t t, Rng& rng)
{
    const double mu = env.mean_at(beam, t);
    if (mu == 0.0 || env.noise_scale() == 0.0)
        return mu;
    std::normal_distribution<double> draw(mu, std::sqrt(2.0 * env.noise_scale() * mu));
    return draw(rng);
}

double group_mean(const BeamEnvironment& env, std::span<const std::size_t> group, std::int64_t t)
{
    if (group.empty())
        throw std::invalid_argument("beam group must be nonempty");
    double sum = 0.0;
    for (std::size_t i : group)
        sum += env.mean_at(i, t);
    return 2.0 * sum / static_cast<double>(env.n_beams());
}

double group_variance(const BeamEnvironment& env, std::span<const std::size_t> group, std::int64_t t)
{
    return 2.0 * env.noise_scale() * group_mean(env, group, t);
}

double sample_group(const BeamEnvironment& env, std::span<const std::size_t> group, std::int64_t t, Rng& rng)
{
    const double mu = group_mean(env, group, t);
    if (mu == 0.0 || env.noise_scale() == 0.0)
        return mu;
    std::normal_distribution<double> draw(mu, std::sqrt(2.0 * env.noise_scale() * mu));
    return draw(rng);
}

// ---------------------------------------------------------------------------

double path_loss_db(const CaseStudyChannel& ch)
{
    if (!(ch.distance_m > 0.0) || !(ch.carrier_hz > 0.0))
        throw std::invalid_argument("distance and carrier frequency must be positive");
    constexpr double c = 299792458.0;
    auto fspl = [&](double d) { return 20.0 * std::log10(4.0 * std::numbers::pi * d * ch.carrier_hz / c); };
    switch (ch.pathloss.kind) {
    case PathLossModel::Kind::free_space:
        return fspl(ch.distance_m);
    case PathLossModel::Kind::log_distance: {
        const double d0 = ch.pathloss.reference_distance_m;
        if (!(d0 > 0.0) || !(ch.pathloss.exponent > 0.0))
            throw std::invalid_argument("log-distance path loss needs positive d0 and exponent");
        return fspl(d0) + 10.0 * ch.pathloss.exponent * std::log10(ch.distance_m / d0);
    }
    }
    return 0.0;
}

double noise_power_dbm(const CaseStudyChannel& ch)
{
    if (!(ch.bandwidth_hz > 0.0))
        throw std::invalid_argument("bandwidth must be positive");
    // kT0 at 290 K in dBm/Hz.
    const double kt0_dbm_hz = 10.0 * std::log10(1.380649e-23 * 290.0) + 30.0;
    return kt0_dbm_hz + 10.0 * std::log10(ch.bandwidth_hz) + ch.noise_figure_db;
}

double reference_snr(const CaseStudyChannel& ch)
{
    const double snr_db = ch.tx_power_dbm - path_loss_db(ch) - noise_power_dbm(ch);
    return std::pow(10.0, snr_db / 10.0);
}

double beamwidth(std::size_t n_beams)
{
    if (n_beams == 0)
        throw std::invalid_argument("n_beams must be positive");
    return 2.0 * std::numbers::pi / static_cast<double>(n_beams);
}

double directivity_gain(std::size_t n_beams) { return 2.0 * std::numbers::pi / beamwidth(n_beams); }

EnvironmentSpec channel_to_means(const CaseStudyChannel& channel, std::size_t n_beams, std::size_t best_index)
{
    require_power_of_two(n_beams);
    const double xi0 = reference_snr(channel);
    return make_stationary(n_beams, {xi0 * directivity_gain(n_beams), 0.0, best_index}, 1.0);
}

}  // namespace beamsel
