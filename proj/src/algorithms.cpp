#include "beamsel/algorithms.hpp"

#include <cmath>

namespace beamsel {

std::size_t kshes_stop_round(std::size_t n_beams, std::size_t k, int offset)
{
    detail::check_beams(n_beams);
    if (k < 1 || k > n_beams / 2)
        throw std::invalid_argument("kshes_stop_round: K must lie in [1, N/2]");
    std::size_t base = 0;
    while ((n_beams >> (base + 1)) >= 2 * k)
        ++base;
    const long long r = static_cast<long long>(base) + offset;
    const long long hi = static_cast<long long>(log2_exact(n_beams)) - 1;
    return static_cast<std::size_t>(std::clamp(r, 0LL, hi));
}

StationaryGainPair two_level_gains(const Eigen::VectorXd& means)
{
    if (means.size() < 2)
        throw std::invalid_argument("two_level_gains: need at least two beams");
    Eigen::Index best = 0;
    const double big = means.maxCoeff(&best);
    double small = -1.0;
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        if (i == best)
            continue;
        if (small < 0.0)
            small = means[i];
        else if (means[i] != small)
            throw std::invalid_argument("two_level_gains: non-best beams differ in mean");
    }
    if (!(big > small))
        throw std::invalid_argument("two_level_gains: no unique best beam");
    return {big, small, static_cast<std::size_t>(best)};
}

PolicyOutcome run_exhaustive(const BeamEnvironment& env, std::size_t budget, Rng& rng)
{
    GaussianRewards src(env, rng);
    return run_exhaustive(src, budget);
}

PolicyOutcome run_sh(const BeamEnvironment& env, std::size_t budget, Rng& rng)
{
    GaussianRewards src(env, rng);
    return run_sh(src, budget);
}

PolicyOutcome run_kshes(const BeamEnvironment& env, std::size_t budget, std::size_t k, Rng& rng, int offset)
{
    GaussianRewards src(env, rng);
    return run_kshes(src, budget, k, offset);
}

PolicyOutcome run_cbe(const BeamEnvironment& env, std::size_t budget, Rng& rng)
{
    const std::size_t n = env.n_beams();
    detail::check_beams(n);
    const std::size_t logn = log2_exact(n);
    if (budget < logn)
        throw std::invalid_argument("run_cbe: budget smaller than the group count");
    const StationaryGainPair gains = two_level_gains(env.base_means());
    if (!(gains.small_gain > 0.0))
        throw std::invalid_argument("run_cbe: requires a positive side-lobe gain g");
    const auto params = group_params(n, gains.big_gain, gains.small_gain, env.noise_scale(), budget / logn);
    GaussianRewards src(env, rng);
    PolicyOutcome out = run_cbe(src, budget, params);
    out.nonstationary_input = !env.stationary();
    return out;
}

}  // namespace beamsel
