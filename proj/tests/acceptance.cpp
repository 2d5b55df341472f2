#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "beamsel/algorithms.hpp"
#include "beamsel/bounds.hpp"
#include "beamsel/config.hpp"
#include "beamsel/csv.hpp"
#include "beamsel/detection.hpp"
#include "beamsel/experiments.hpp"
#include "beamsel/grouping.hpp"
#include "beamsel/special_functions.hpp"

using namespace beamsel;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Ranks 1..13 close together, the rest far below; beam i holds rank i + 1.
Eigen::VectorXd top13_means()
{
    Eigen::VectorXd m(64);
    for (Eigen::Index i = 0; i < 64; ++i) {
        const double r = double(i + 1);
        m[i] = r <= 13 ? 1.0 - 0.005 * (r - 1) : 0.3 * (1.0 - 0.001 * (r - 14));
    }
    return m;
}

EnvironmentSpec top13_env(double post, double noise, std::size_t horizon)
{
    ChangeSchedule c;
    c.target = RankTarget{2, 13};  // top 20% of 64, excluding the best beam
    c.post_mean = post;
    c.slot_law = ChangeLaw::uniform(0, double(horizon));
    return EnvironmentSpec(top13_means(), noise, c);
}

EnvironmentSpec channel_env(std::size_t n, double distance_m, double noise = 1.0)
{
    CaseStudyChannel ch;
    ch.distance_m = distance_m;
    const double big = reference_snr(ch) * double(n);
    return make_stationary(n, StationaryGainPair{big, big * 1e-4, 0}, noise);
}

double se_of(double p, std::size_t n) { return std::sqrt(std::max(p * (1 - p), 0.0) / double(n)); }

Verdict grouping_round_trip()
{
    std::size_t checked = 0;
    for (std::size_t n = 2; n <= 1024; n *= 2) {
        const GroupDesign d = build_groups(n);
        for (std::size_t b = 0; b < n; ++b, ++checked)
            if (decode(encode(d, b)) != b)
                return {false, fmt("N=%zu beam %zu decodes wrongly", n, b)};
    }
    return {true, fmt("%zu beams over N=2..1024", checked)};
}

Verdict detection_table()
{
    // Detected column of the 16-beam table, groups B1..B4.
    const std::vector<std::set<int>> detected{
        {},        {1},       {2},       {1, 2},    {3},       {1, 3},    {2, 3},    {1, 2, 3},
        {4},       {1, 4},    {2, 4},    {1, 2, 4}, {3, 4},    {1, 3, 4}, {2, 3, 4}, {1, 2, 3, 4},
    };
    const GroupDesign d(16);
    for (std::size_t beam = 0; beam < 16; ++beam) {
        DetectionVector v(4);
        for (int k = 1; k <= 4; ++k)
            v[std::size_t(k - 1)] = detected[beam].count(k) > 0;
        if (decode(v) != beam)
            return {false, fmt("row f%zu decodes to %zu", beam, decode(v))};
        if (encode(d, beam) != v)
            return {false, fmt("row f%zu: membership differs", beam)};
    }
    return {true, "16 rows match"};
}

Verdict marcum_oracle()
{
    const std::vector<double> orders{0.5, 1, 1.5, 2, 2.5, 3, 4, 5, 6, 8, 10, 12, 14, 16, 18, 20, 24, 28, 30, 32};
    Rng rng(2718);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    double worst = 0.0;
    double worst_id = 0.0;
    std::size_t points = 0;
    for (double nu : orders)
        for (int j = 0; j < 10; ++j, ++points) {
            const double a = j == 0 ? 0.0 : u(rng);
            const double b = j == 9 ? 20.0 : u(rng);
            const double q = marcum_q(nu, a, b);
            worst = std::max(worst, std::abs(q - oracle::marcum_q_quadrature(nu, a, b)));
            worst_id = std::max(worst_id, std::abs(noncentral_chi2_cdf(b * b, 2 * nu, a * a) + q - 1.0));
        }
    return {worst <= 1e-8 && worst_id <= 1e-10,
            fmt("%zu points, max |Q - quad| = %.2e, max |F + Q - 1| = %.2e", points, worst, worst_id)};
}

Verdict detection_calibration()
{
    // H1: group 1 holds the aligned beam 1. H0: group 2 does not.
    const std::size_t n = 16;
    const std::size_t budget = 256;
    const std::size_t per_group = budget / 4;
    const std::size_t trials = 1000000;
    const GroupDesign d(n);
    bool ok = true;
    std::string detail;
    for (double dist : {100.0, 5000.0}) {
        Eigen::VectorXd m = channel_env(n, dist).means();
        std::swap(m[0], m[1]);
        const BeamEnvironment env(m, 1.0);
        const auto g = two_level_gains(m);
        const auto p = group_params(n, g.big_gain, g.small_gain, 1.0, per_group);
        const double pm = p_miss(p);
        const double pf = p_false(p);

        const std::size_t chunks = 64;
        std::vector<std::size_t> miss(chunks, 0);
        std::vector<std::size_t> fa(chunks, 0);
        parallel_for(chunks, 8, [&](std::size_t c) {
            Rng rng = make_stream(4, {static_cast<std::uint64_t>(dist), c});
            std::vector<double> y(per_group);
            for (std::size_t i = c; i < trials; i += chunks) {
                for (std::size_t s = 0; s < per_group; ++s)
                    y[s] = sample_group(env, d.group(1), std::int64_t(s + 1), rng);
                miss[c] += !detect_user(y, p);
                for (std::size_t s = 0; s < per_group; ++s)
                    y[s] = sample_group(env, d.group(2), std::int64_t(s + 1), rng);
                fa[c] += detect_user(y, p);
            }
        });
        double em = 0.0;
        double ef = 0.0;
        for (std::size_t c = 0; c < chunks; ++c) {
            em += double(miss[c]);
            ef += double(fa[c]);
        }
        em /= double(trials);
        ef /= double(trials);
        const bool cell = std::abs(em - pm) <= 3 * se_of(pm, trials) && std::abs(ef - pf) <= 3 * se_of(pf, trials);
        ok = ok && cell;
        detail += fmt("%gm: miss %.3g vs %.3g, false %.4g vs %.4g (z=%.2f); ", dist, em, pm, ef, pf,
                      se_of(pf, trials) > 0 ? (ef - pf) / se_of(pf, trials) : 0.0);
    }
    return {ok, detail + "1e6 trials/hypothesis, T=256"};
}

Verdict cbe_dominance()
{
    const std::vector<double> dists{100, 500, 1000, 2000, 5000};
    bool dom = true;
    bool tight = true;
    std::size_t tight_points = 0;
    std::size_t tight_fail = 0;
    std::string worst;
    std::uint64_t id = 0;
    for (double dist : dists) {
        const auto spec = channel_env(16, dist);
        const auto g = two_level_gains(spec.means());
        for (std::size_t t = 256; t <= 4096; t *= 2, ++id) {
            const auto res = estimate_point(spec, t, {PolicySpec{PolicyKind::cbe}}, RunOptions{10000, 5, 8}, id);
            const double err = res.estimates[0].error;
            const auto cb = bound_cbe(t, 16, g.big_gain, g.small_gain, 1.0);
            if (err > cb.bound.value) {
                dom = false;
                worst += fmt(" [%gm T=%zu err %.3g > %.3g]", dist, t, err, cb.bound.value);
            }
            if (g.small_gain <= 1e-3) {
                ++tight_points;
                const auto kb = bound_karnin(double(t), 16, g.big_gain, g.small_gain);
                if (cb.bound.value > kb.value) {
                    tight = false;
                    ++tight_fail;
                }
            }
        }
    }
    return {dom && tight, fmt("error <= bound_cbe: %s%s; bound_cbe <= karnin at g <= 1e-3: %zu/%zu points hold",
                              dom ? "all 25 points" : "violated", worst.c_str(), tight_points - tight_fail,
                              tight_points)};
}

Verdict sh_decay()
{
    const auto spec = make_stationary(64, StationaryGainPair{3.0, 1.0, 17}, 3.0);
    std::vector<double> errs;
    bool dom = true;
    std::string detail;
    std::uint64_t id = 0;
    for (std::size_t t = 512; t <= 8192; t *= 2, ++id) {
        const auto res = estimate_point(spec, t, {PolicySpec{PolicyKind::sh}}, RunOptions{10000, 3, 8}, id);
        const double err = res.estimates[0].error;
        const double b = bound_karnin(double(t), 64, 3.0, 1.0).value;
        dom = dom && err <= b;
        errs.push_back(err);
        detail += fmt("T=%zu %.4f<=%.3g ", t, err, b);
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < errs.size(); ++i)
        decreasing = decreasing && errs[i] > 0 && std::log(errs[i]) < std::log(errs[i - 1]);
    return {dom && decreasing, detail + (decreasing ? "(log error decreasing)" : "(not decreasing)")};
}

Verdict policy_ordering()
{
    const std::size_t t = 1024;
    const auto spec = top13_env(1.5, 0.2, t);
    const std::vector<PolicySpec> pols{PolicySpec{PolicyKind::kshes, 13}, PolicySpec{PolicyKind::sh},
                                       PolicySpec{PolicyKind::exhaustive}};
    const auto res = estimate_point(spec, t, pols, RunOptions{10000, 7, 8});
    const auto sh_ks = paired_difference(res, 1, 0);
    const auto ex_sh = paired_difference(res, 2, 1);
    const double ks = res.estimates[0].error;
    const double sh = res.estimates[1].error;
    const double ex = res.estimates[2].error;

    // Bound dominance for the two change-aware policies.
    const auto& law = spec.change()->slot_law;
    const double dmin = 0.3 * 0.001;  // smallest gap among the means
    const double smax = 2 * 0.2 * 1.5;
    const std::size_t rs = kshes_stop_round(64, 13);
    const auto sh_b = bound_sh_total(double(t), 64, 13, dmin, smax, round_law(law, t, 64), rs).total;
    std::vector<double> above;
    for (Eigen::Index i = 0; i < 12; ++i)
        above.push_back(spec.means()[i]);
    const auto slots = kshes_crossing_slots(t, 64, rs, above, spec.means()[12], 1.5);
    const auto ks_b = bound_kshes(t, 64, 13, dmin, smax, law, rs, slots).general;
    const bool dom = sh_b.value >= sh + 3 * se_of(sh, 10000) && ks_b.value >= ks + 3 * se_of(ks, 10000);

    const bool pass = sh_ks.z() >= 3 && ex_sh.z() >= 3 && dom;
    return {pass, fmt("kshes %.4f < sh %.4f < exhaustive %.4f; z(sh-kshes)=%.1f, z(ex-sh)=%.1f; bounds %.3g, %.3g "
                      "dominate",
                      ks, sh, ex, sh_ks.z(), ex_sh.z(), sh_b.value, ks_b.value)};
}

Verdict change_location()
{
    const std::size_t t = 4096;
    const auto spec = top13_env(1.6, 1.0, t);
    const auto rows = run_change_location_study(spec, t, PolicySpec{PolicyKind::kshes, 13}, RunOptions{10000, 7, 8});
    const auto& early = rows[0];
    const auto& late = rows[1];
    const bool pass = early.kshes_minus_sh.z() >= 3 && late.kshes_minus_sh.z() <= -3;
    return {pass, fmt("early [0,%lld]: sh %.4f <= kshes %.4f (z=%.1f); late [%lld,%lld]: kshes %.4f < sh %.4f (z=%.1f)",
                      (long long)early.last_slot, early.sh.error, early.kshes.error, early.kshes_minus_sh.z(),
                      (long long)late.first_slot, (long long)late.last_slot, late.kshes.error, late.sh.error,
                      late.kshes_minus_sh.z())};
}

Verdict change_round_curves()
{
    const std::vector<std::pair<std::string, ShapeLaw>> laws{{"uniform", ShapeLaw::make_uniform()},
                                                             {"beta(2,8)", ShapeLaw::make_beta(2, 8)},
                                                             {"beta(2,2)", ShapeLaw::make_beta(2, 2)},
                                                             {"beta(8,2)", ShapeLaw::make_beta(8, 2)}};
    const double dc = 1.0;
    const double smax = 0.5;
    std::vector<std::vector<double>> curves;
    bool mono = true;
    for (const auto& [name, law] : laws) {
        std::vector<double> c;
        for (int i = 1; i <= 50; ++i)
            c.push_back(bound_pk_rc(dc * i / 50.0, dc, smax, law).raw);
        for (std::size_t i = 1; i < c.size(); ++i)
            mono = mono && c[i] <= c[i - 1];
        mono = mono && c.back() < c.front();
        curves.push_back(c);
    }
    // beta(2,8): changes early in the round; beta(8,2): late.
    bool below = true;
    for (std::size_t i = 0; i < 50; ++i)
        below = below && curves[1][i] <= curves[3][i];
    return {mono && below, fmt("4 laws x 50 points: monotone %s; beta(2,8) <= beta(8,2) %s (at dmin=dc: %.3f vs %.3f)",
                               mono ? "yes" : "no", below ? "yes" : "no", curves[1].back(), curves[3].back())};
}

Verdict case_study()
{
    CaseStudyConfig cfg;
    const auto res = optimize_case_study(cfg, RunOptions{1000, 11, 8});
    std::string detail;
    bool mono = true;
    std::size_t prev = 0;
    for (const auto& [f, n] : res.best_n_per_fraction) {
        detail += fmt("%g%%->%zu ", f * 100, n);
        mono = mono && n >= prev;
        prev = n;
    }
    const bool at1 = res.best_n_per_fraction.at(0.01) == 64;
    const bool at10 = res.best_n_per_fraction.at(0.1) == 128;
    return {mono && at1 && at10, detail + fmt("(nondecreasing %s; 1%%->64 %s; 10%%->128 %s)", mono ? "yes" : "no",
                                              at1 ? "yes" : "no", at10 ? "yes" : "no")};
}

Verdict degenerate()
{
    // r* = 0 for K = N/2: K-SHES must replay exhaustive search.
    const std::size_t t = 1024;
    const auto spec = top13_env(1.5, 0.2, t);
    std::size_t agree = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        Rng env_rng = make_stream(s, {0});
        const auto env = realize(spec, std::int64_t(t), env_rng);
        Rng a = make_stream(s, {1});
        Rng b = a;
        agree += run_kshes(env, t, 32, a).selected_beam == run_exhaustive(env, t, b).selected_beam;
    }
    const auto quiet = make_stationary(16, StationaryGainPair{1.0, 0.001, 6}, 0.0);
    const auto res = estimate_point(quiet, 256,
                                    {PolicySpec{PolicyKind::exhaustive}, PolicySpec{PolicyKind::sh},
                                     PolicySpec{PolicyKind::kshes, 1}, PolicySpec{PolicyKind::kshes, 8},
                                     PolicySpec{PolicyKind::cbe}},
                                    RunOptions{1000, 1, 8});
    std::size_t errors = 0;
    for (const auto& e : res.estimates)
        errors += e.errors;
    return {agree == 1000 && errors == 0,
            fmt("kshes(r*=0) == exhaustive on %zu/1000 seeds; sigma^2=0 errors across 5 policies: %zu", agree, errors)};
}

Verdict determinism()
{
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "beamsel_acceptance_determinism";
    fs::remove_all(root);
    const Eigen::VectorXd mv = top13_means();
    const std::vector<double> m(mv.data(), mv.data() + mv.size());
    std::ostringstream means;
    for (std::size_t i = 0; i < m.size(); ++i)
        means << (i ? "," : "") << format_double(m[i]);
    const std::string text = R"({"command":"sweep","seed":20,"trials":3000,
        "environment":{"n_beams":64,"means":[)" + means.str() + R"(],"noise_scale":0.2,
          "change":{"rank":[2,13],"post":1.5,"law":{"kind":"uniform","lo":0,"hi":1,"relative":true}}},
        "policies":[{"name":"sh"},{"name":"kshes","k":13},{"name":"exhaustive"}],
        "sweep":{"budgets":[512,1024,2048]}})";
    auto cfg = parse_config(text);
    std::vector<std::string> outputs;
    for (std::size_t w : {1u, 3u, 8u}) {
        cfg.workers = w;
        cfg.output_dir = (root / std::to_string(w)).string();
        execute(cfg);
        std::ifstream in(root / std::to_string(w) / "sweep.csv", std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        outputs.push_back(s.str());
    }
    fs::remove_all(root);
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && !outputs[0].empty();
    return {same, fmt("sweep.csv with 1, 3, 8 workers: %s (%zu bytes)", same ? "byte-identical" : "DIFFERENT",
                      outputs[0].size())};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"grouping round-trip", grouping_round_trip},
        {"16-beam detection table", detection_table},
        {"Marcum Q oracle", marcum_oracle},
        {"detection calibration", detection_calibration},
        {"CBE bound dominance and tightness", cbe_dominance},
        {"SH no-change decay", sh_decay},
        {"K-SHES < SH < exhaustive", policy_ordering},
        {"change location", change_location},
        {"change-round bound curves", change_round_curves},
        {"case study optimum", case_study},
        {"degenerate reductions", degenerate},
        {"determinism across workers", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !v.pass;
        std::printf("%s %2zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria pass\n", criteria.size() - std::size_t(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
