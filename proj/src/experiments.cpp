#include "beamsel/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "beamsel/bounds.hpp"

namespace beamsel {

std::string to_string(PolicyKind kind)
{
    switch (kind) {
    case PolicyKind::exhaustive:
        return "exhaustive";
    case PolicyKind::cbe:
        return "cbe";
    case PolicyKind::sh:
        return "sh";
    case PolicyKind::kshes:
        return "kshes";
    }
    return "unknown";
}

PolicyKind policy_from_string(const std::string& name)
{
    if (name == "exhaustive")
        return PolicyKind::exhaustive;
    if (name == "cbe")
        return PolicyKind::cbe;
    if (name == "sh")
        return PolicyKind::sh;
    if (name == "kshes")
        return PolicyKind::kshes;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string PolicySpec::label() const
{
    if (kind != PolicyKind::kshes)
        return to_string(kind);
    std::string s = "kshes(K=" + std::to_string(k);
    if (r_offset != 0)
        s += ",offset=" + std::to_string(r_offset);
    return s + ")";
}

std::size_t run_policy(const PolicySpec& policy, const BeamEnvironment& env, std::size_t budget, Rng& rng)
{
    switch (policy.kind) {
    case PolicyKind::exhaustive:
        return run_exhaustive(env, budget, rng).selected_beam;
    case PolicyKind::cbe:
        return run_cbe(env, budget, rng).selected_beam;
    case PolicyKind::sh:
        return run_sh(env, budget, rng).selected_beam;
    case PolicyKind::kshes:
        return run_kshes(env, budget, policy.k, rng, policy.r_offset).selected_beam;
    }
    throw std::logic_error("run_policy: unhandled policy");
}

WilsonInterval wilson_interval(std::size_t errors, std::size_t trials, double z)
{
    if (trials == 0)
        return {0.0, 1.0};
    if (errors > trials)
        throw std::invalid_argument("wilson_interval: more errors than trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

PointResult estimate_point(const EnvironmentSpec& env, std::size_t budget, const std::vector<PolicySpec>& policies,
                           const RunOptions& options, std::uint64_t point_id, std::int64_t change_horizon)
{
    if (policies.empty())
        throw std::invalid_argument("estimate_point: no policies");
    if (options.trials == 0)
        throw std::invalid_argument("estimate_point: trials must be >= 1");
    if (budget == 0)
        throw std::invalid_argument("estimate_point: budget must be >= 1");

    const auto start = std::chrono::steady_clock::now();
    const auto deadline = static_cast<std::int64_t>(budget);
    const std::int64_t horizon = change_horizon > 0 ? change_horizon : deadline;

    PointResult out;
    out.n_policies = policies.size();
    out.indicators.assign(options.trials * policies.size(), 0);

    parallel_for(options.trials, options.workers, [&](std::size_t trial) {
        Rng env_rng = make_stream(options.seed, {point_id, trial, 0});
        const BeamEnvironment realized = realize(env, horizon, env_rng);
        const std::size_t truth = realized.best_beam_at(deadline);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            Rng noise = make_stream(options.seed, {point_id, trial, 1});
            const std::size_t chosen = run_policy(policies[p], realized, budget, noise);
            out.indicators[trial * policies.size() + p] = chosen != truth ? 1 : 0;
        }
    });

    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (std::size_t p = 0; p < policies.size(); ++p) {
        ErrorEstimate e;
        e.policy = policies[p].label();
        e.trials = options.trials;
        for (std::size_t t = 0; t < options.trials; ++t)
            e.errors += out.indicators[t * policies.size() + p];
        e.error = static_cast<double>(e.errors) / static_cast<double>(e.trials);
        e.ci = wilson_interval(e.errors, e.trials);
        e.elapsed_s = elapsed;
        out.estimates.push_back(e);
    }
    return out;
}

ErrorEstimate estimate_error(const PolicySpec& policy, const EnvironmentSpec& env, std::size_t budget,
                             const RunOptions& options)
{
    return estimate_point(env, budget, {policy}, options).estimates.front();
}

double PairedDifference::z() const
{
    if (se > 0.0)
        return mean / se;
    if (mean == 0.0)
        return 0.0;
    return mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

PairedDifference paired_difference(const PointResult& result, std::size_t a, std::size_t b)
{
    if (a >= result.n_policies || b >= result.n_policies)
        throw std::out_of_range("paired_difference: policy index out of range");
    const std::size_t n = result.indicators.size() / result.n_policies;
    if (n < 2)
        throw std::invalid_argument("paired_difference: need at least two trials");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = static_cast<double>(result.failed(t, a)) - static_cast<double>(result.failed(t, b));
        sum += d;
        sum_sq += d * d;
    }
    const double nd = static_cast<double>(n);
    PairedDifference out;
    out.mean = sum / nd;
    const double var = std::max(0.0, (sum_sq - nd * out.mean * out.mean) / (nd - 1.0));
    out.se = std::sqrt(var / nd);
    return out;
}

std::vector<SweepRow> run_comparison_sweep(const std::vector<SweepPoint>& points,
                                           const std::vector<PolicySpec>& policies, const RunOptions& options)
{
    if (points.empty())
        throw std::invalid_argument("run_comparison_sweep: empty sweep");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& pt = points[i];
        const PointResult res = estimate_point(pt.env, pt.budget, policies, options, i, pt.change_horizon);
        for (std::size_t p = 0; p < policies.size(); ++p)
            rows.push_back({policies[p].label(), pt.axes, res.estimates[p], options.seed});
    }
    return rows;
}

std::vector<ChangeWindowRow> run_change_location_study(const EnvironmentSpec& env, std::size_t budget,
                                                       const PolicySpec& kshes, const RunOptions& options)
{
    if (!env.change())
        throw std::invalid_argument("run_change_location_study: environment has no change");
    if (kshes.kind != PolicyKind::kshes)
        throw std::invalid_argument("run_change_location_study: second policy must be K-SHES");
    const std::size_t n = env.n_beams();
    const std::size_t r_star = kshes_stop_round(n, kshes.k, kshes.r_offset);
    const auto safe = static_cast<std::int64_t>(std::floor(kshes_safe_slot(static_cast<double>(budget), n, kshes.k)));
    const std::int64_t halving_end = kshes_halving_end(budget, n, r_star);
    const auto horizon = static_cast<std::int64_t>(budget);

    const std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> windows = {
        {"early", {0, safe}},
        {"late", {halving_end, horizon}},
    };
    const std::vector<PolicySpec> policies = {PolicySpec{PolicyKind::sh}, kshes};

    std::vector<ChangeWindowRow> rows;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto schedule = *env.change();
        const auto [lo, hi] = windows[w].second;
        schedule.slot_law = ChangeLaw::uniform(static_cast<double>(lo), static_cast<double>(hi));
        const EnvironmentSpec windowed(env.means(), env.noise_scale(), schedule, env.allow_ties());
        const PointResult res = estimate_point(windowed, budget, policies, options, w);
        ChangeWindowRow row;
        row.window = windows[w].first;
        row.first_slot = lo;
        row.last_slot = hi;
        row.sh = res.estimates[0];
        row.kshes = res.estimates[1];
        row.kshes_minus_sh = paired_difference(res, 1, 0);
        rows.push_back(row);
    }
    return rows;
}

double rate(std::size_t n_beams, double t, double t_total, double bandwidth_hz, double xi0, double pe)
{
    if (!(pe >= 0.0 && pe <= 1.0))
        throw std::invalid_argument("rate: error probability must lie in [0, 1]");
    if (!(t >= 0.0) || !(t < t_total))
        throw std::invalid_argument("rate: requires 0 <= T < T_tot");
    if (!(bandwidth_hz > 0.0) || !(xi0 > 0.0))
        throw std::invalid_argument("rate: bandwidth and reference SNR must be positive");
    const double data_share = (t_total - t) / t_total;
    return (1.0 - pe) * data_share * bandwidth_hz * std::log2(1.0 + xi0 * directivity_gain(n_beams));
}

EnvironmentSpec case_study_environment(const CaseStudyConfig& config, std::size_t n_beams)
{
    const std::size_t best = n_beams - 1;
    const EnvironmentSpec los = channel_to_means(config.channel, n_beams, best);
    const double post = los.means()[static_cast<Eigen::Index>(best)];
    ChangeSchedule change;
    change.target = BeamTarget{best};
    change.pre_mean = post * std::pow(10.0, -config.blockage_db / 10.0);
    change.post_mean = post;
    change.slot_law = ChangeLaw::uniform(0.0, static_cast<double>(config.frame_slots));
    return EnvironmentSpec(los.means(), los.noise_scale(), change);
}

CaseStudyResult optimize_case_study(const CaseStudyConfig& config, const RunOptions& options)
{
    if (config.n_grid.empty() || config.fractions.empty())
        throw std::invalid_argument("optimize_case_study: empty grid");
    const double xi0 = reference_snr(config.channel);
    const auto frame = static_cast<double>(config.frame_slots);

    CaseStudyResult out;
    std::uint64_t point_id = 0;
    for (double f : config.fractions) {
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("optimize_case_study: fractions must lie in (0, 1)");
        for (std::size_t n : config.n_grid) {
            RatePoint rp;
            rp.n_beams = n;
            rp.fraction = f;
            rp.budget = static_cast<std::size_t>(std::floor(f * frame));
            rp.estimate.policy = PolicySpec{PolicyKind::kshes, config.k}.label();
            const std::size_t r_star = kshes_stop_round(n, config.k);
            // Every halving round and the final phase must get at least one sample per beam.
            rp.feasible = rp.budget >= n * log2_exact(n) && r_star < log2_exact(n);
            if (rp.feasible) {
                const auto env = case_study_environment(config, n);
                const PointResult res = estimate_point(env, rp.budget, {PolicySpec{PolicyKind::kshes, config.k}},
                                                       options, point_id,
                                                       static_cast<std::int64_t>(config.frame_slots));
                rp.estimate = res.estimates.front();
            } else {
                rp.estimate.error = 1.0;
                rp.estimate.ci = {1.0, 1.0};
            }
            rp.rate_bps = rate(n, static_cast<double>(rp.budget), frame, config.channel.bandwidth_hz, xi0,
                               rp.estimate.error);
            out.points.push_back(rp);
            ++point_id;
        }
    }

    std::map<double, double> best_rate_f;
    std::map<std::size_t, double> best_rate_n;
    for (const auto& rp : out.points) {
        auto it = best_rate_f.find(rp.fraction);
        if (it == best_rate_f.end() || rp.rate_bps > it->second) {
            best_rate_f[rp.fraction] = rp.rate_bps;
            out.best_n_per_fraction[rp.fraction] = rp.n_beams;
        }
        auto jt = best_rate_n.find(rp.n_beams);
        if (jt == best_rate_n.end() || rp.rate_bps > jt->second) {
            best_rate_n[rp.n_beams] = rp.rate_bps;
            out.best_fraction_per_n[rp.n_beams] = rp.fraction;
        }
    }
    return out;
}

}  // namespace beamsel
