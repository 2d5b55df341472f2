#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "beamsel/detection.hpp"
#include "beamsel/environment.hpp"
#include "beamsel/grouping.hpp"
#include "beamsel/rng.hpp"

namespace beamsel {

struct RoundRecord {
    std::size_t round = 0;  // 1-based; 0 marks the final equal-allocation phase
    std::vector<std::size_t> surviving;  // ascending beam indices sampled in this round
    std::size_t samples_per_beam = 0;
    std::vector<double> statistics;  // per surviving beam (sums) or per group (sum of squares)
    std::int64_t first_slot = 0;
    std::int64_t last_slot = 0;
};

struct PolicyOutcome {
    std::size_t selected_beam = 0;
    std::vector<RoundRecord> rounds;
    std::size_t samples_used = 0;
    DetectionVector verdicts;  // CBE only
    bool nonstationary_input = false;  // CBE run on a changing environment
};

/// Reward source backed by an environment realization and a generator.
class GaussianRewards {
public:
    GaussianRewards(const BeamEnvironment& env, Rng& rng) : env_(env), rng_(rng) {}
    std::size_t n_beams() const { return env_.n_beams(); }
    double beam(std::size_t i, std::int64_t t) { return sample_beam(env_, i, t, rng_); }
    double group(std::span<const std::size_t> members, std::int64_t t) { return sample_group(env_, members, t, rng_); }

private:
    const BeamEnvironment& env_;
    Rng& rng_;
};

/// Deterministic reward source for hand traces: rewards come from callbacks.
class ScriptedRewards {
public:
    using BeamFn = std::function<double(std::size_t beam, std::int64_t t)>;
    using GroupFn = std::function<double(std::span<const std::size_t> members, std::int64_t t)>;

    ScriptedRewards(std::size_t n_beams, BeamFn beam_fn, GroupFn group_fn = {})
        : n_beams_(n_beams), beam_fn_(std::move(beam_fn)), group_fn_(std::move(group_fn))
    {
    }
    std::size_t n_beams() const { return n_beams_; }
    double beam(std::size_t i, std::int64_t t) { return beam_fn_(i, t); }
    double group(std::span<const std::size_t> members, std::int64_t t)
    {
        if (!group_fn_)
            throw std::logic_error("ScriptedRewards: no group script");
        return group_fn_(members, t);
    }

private:
    std::size_t n_beams_;
    BeamFn beam_fn_;
    GroupFn group_fn_;
};

namespace detail {

inline void check_beams(std::size_t n)
{
    if (n < 2 || !is_power_of_two(n))
        throw std::invalid_argument("policy: beam count must be a power of two >= 2");
}

/// Samples every beam of `beams` `reps` times in round-robin order starting at
/// slot t + 1; returns the per-beam sums and advances t.
template <class Source>
RoundRecord sample_round_robin(Source& src, const std::vector<std::size_t>& beams, std::size_t reps,
                               std::int64_t& t, std::size_t round)
{
    RoundRecord rec;
    rec.round = round;
    rec.surviving = beams;
    rec.samples_per_beam = reps;
    rec.statistics.assign(beams.size(), 0.0);
    rec.first_slot = t + 1;
    for (std::size_t rep = 0; rep < reps; ++rep)
        for (std::size_t j = 0; j < beams.size(); ++j)
            rec.statistics[j] += src.beam(beams[j], ++t);
    rec.last_slot = t;
    return rec;
}

/// Top half by statistic, lower index first on ties; result is ascending.
inline std::vector<std::size_t> keep_top_half(const RoundRecord& rec)
{
    std::vector<std::size_t> order(rec.surviving.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return rec.statistics[x] > rec.statistics[y];
    });
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < order.size() / 2; ++j)
        kept.push_back(rec.surviving[order[j]]);
    std::sort(kept.begin(), kept.end());
    return kept;
}

inline std::size_t argmax_lowest(const RoundRecord& rec)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < rec.statistics.size(); ++j)
        if (rec.statistics[j] > rec.statistics[best])
            best = j;
    return rec.surviving[best];
}

template <class Source>
std::vector<std::size_t> halving_rounds(Source& src, std::size_t total_budget, std::size_t n_rounds,
                                        PolicyOutcome& out, std::int64_t& t)
{
    const std::size_t n = src.n_beams();
    const std::size_t logn = log2_exact(n);
    std::vector<std::size_t> surviving(n);
    std::iota(surviving.begin(), surviving.end(), std::size_t{0});
    for (std::size_t r = 1; r <= n_rounds; ++r) {
        const std::size_t reps = total_budget / (surviving.size() * logn);
        if (reps == 0)
            throw std::invalid_argument("policy: budget leaves a round without samples");
        out.rounds.push_back(sample_round_robin(src, surviving, reps, t, r));
        out.samples_used += reps * surviving.size();
        surviving = keep_top_half(out.rounds.back());
    }
    return surviving;
}

}  // namespace detail

/// Equal allocation: floor(T/N) round-robin passes, argmax of the sums.
template <class Source>
PolicyOutcome run_exhaustive(Source& src, std::size_t budget)
{
    const std::size_t n = src.n_beams();
    detail::check_beams(n);
    if (budget < n)
        throw std::invalid_argument("run_exhaustive: budget smaller than the beam count");
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    PolicyOutcome out;
    std::int64_t t = 0;
    out.rounds.push_back(detail::sample_round_robin(src, all, budget / n, t, 0));
    out.samples_used = (budget / n) * n;
    out.selected_beam = detail::argmax_lowest(out.rounds.back());
    return out;
}

/// Sequential halving over log2 N rounds; round r gives each survivor
/// floor(T / (|S_r| log2 N)) samples.
template <class Source>
PolicyOutcome run_sh(Source& src, std::size_t budget)
{
    const std::size_t n = src.n_beams();
    detail::check_beams(n);
    const std::size_t logn = log2_exact(n);
    if (budget < n * logn)
        throw std::invalid_argument("run_sh: budget below N log2 N");
    PolicyOutcome out;
    std::int64_t t = 0;
    const auto last = detail::halving_rounds(src, budget, logn, out, t);
    out.selected_beam = last.front();
    return out;
}

/// Halving round after which K-SHES switches to equal allocation:
/// floor(log2(N / 2K)) + offset, clamped to [0, log2 N - 1].
std::size_t kshes_stop_round(std::size_t n_beams, std::size_t k, int offset = 0);

/// K-SHES: halving for r* rounds, then round-robin over the survivors with
/// every remaining slot; the decision uses post-r* sums only.
template <class Source>
PolicyOutcome run_kshes(Source& src, std::size_t budget, std::size_t k, int offset = 0)
{
    const std::size_t n = src.n_beams();
    detail::check_beams(n);
    if (k < 1 || k > n / 2)
        throw std::invalid_argument("run_kshes: K must lie in [1, N/2]");
    const std::size_t r_star = kshes_stop_round(n, k, offset);
    PolicyOutcome out;
    std::int64_t t = 0;
    const auto surviving = detail::halving_rounds(src, budget, r_star, out, t);
    const std::size_t remaining = budget - out.samples_used;
    const std::size_t reps = remaining / surviving.size();
    if (reps == 0)
        throw std::invalid_argument("run_kshes: no budget left after the halving rounds");
    out.rounds.push_back(detail::sample_round_robin(src, surviving, reps, t, 0));
    out.samples_used += reps * surviving.size();
    out.selected_beam = detail::argmax_lowest(out.rounds.back());
    return out;
}

/// Concurrent beam exploration: floor(T / log2 N) samples per Hamming group,
/// one detection verdict per group, bitwise decode.
template <class Source>
PolicyOutcome run_cbe(Source& src, std::size_t budget, const GroupHypothesisParams& params)
{
    const std::size_t n = src.n_beams();
    detail::check_beams(n);
    const std::size_t logn = log2_exact(n);
    if (budget < logn)
        throw std::invalid_argument("run_cbe: budget smaller than the group count");
    const std::size_t per_group = budget / logn;
    if (params.n_beams != n || params.t_group != per_group)
        throw std::invalid_argument("run_cbe: detection parameters do not match N and T");
    const GroupDesign design(n);
    PolicyOutcome out;
    std::int64_t t = 0;
    std::vector<double> samples(per_group);
    for (std::size_t k = 1; k <= logn; ++k) {
        RoundRecord rec;
        rec.round = k;
        rec.surviving = design.group(k);
        rec.samples_per_beam = per_group;
        rec.first_slot = t + 1;
        for (auto& y : samples)
            y = src.group(design.group(k), ++t);
        rec.last_slot = t;
        rec.statistics = {test_statistic(samples)};
        out.verdicts.push_back(detect_user(samples, params));
        out.rounds.push_back(std::move(rec));
    }
    out.samples_used = per_group * logn;
    out.selected_beam = decode(out.verdicts);
    return out;
}

/// G and g of a two-level mean vector (one strictly largest beam, all others equal).
StationaryGainPair two_level_gains(const Eigen::VectorXd& means);

PolicyOutcome run_exhaustive(const BeamEnvironment& env, std::size_t budget, Rng& rng);
PolicyOutcome run_sh(const BeamEnvironment& env, std::size_t budget, Rng& rng);
PolicyOutcome run_kshes(const BeamEnvironment& env, std::size_t budget, std::size_t k, Rng& rng, int offset = 0);
/// Detection parameters come from the environment's pre-change means, which must
/// be two-level with g > 0 (g = 0 makes the threshold zero and every group fires).
PolicyOutcome run_cbe(const BeamEnvironment& env, std::size_t budget, Rng& rng);

}  // namespace beamsel
