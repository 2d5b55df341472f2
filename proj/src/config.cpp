#include "beamsel/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>

#include "json.hpp"

#include "beamsel/algorithms.hpp"
#include "beamsel/bounds.hpp"
#include "beamsel/csv.hpp"

namespace beamsel {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class Violations {
public:
    void add(const std::string& path, const std::string& msg) { list_.push_back(path + ": " + msg); }
    bool empty() const { return list_.empty(); }
    std::vector<std::string>& list() { return list_; }

private:
    std::vector<std::string> list_;
};

bool expect_object(Violations& v, const json& j, const std::string& path)
{
    if (!j.is_object()) {
        v.add(path, "expected an object");
        return false;
    }
    return true;
}

void allow_keys(Violations& v, const json& obj, const std::string& path, std::initializer_list<const char*> keys)
{
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
            v.add(path + "." + key, "unknown key");
    }
}

template <class T>
bool convert(const json& j, T& out)
{
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean())
            return false;
        out = j.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string())
            return false;
        out = j.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number())
            return false;
        out = j.get<double>();
    } else if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_unsigned())
            out = j.get<T>();
        else if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
            out = static_cast<T>(j.get<std::int64_t>());
        else
            return false;
    } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer())
            return false;
        out = j.get<T>();
    } else {
        if (!j.is_array())
            return false;
        out.clear();
        for (const auto& e : j) {
            typename T::value_type x{};
            if (!convert(e, x))
                return false;
            out.push_back(x);
        }
    }
    return true;
}

template <class T>
const char* type_name()
{
    if constexpr (std::is_same_v<T, bool>)
        return "a boolean";
    else if constexpr (std::is_same_v<T, std::string>)
        return "a string";
    else if constexpr (std::is_same_v<T, double>)
        return "a number";
    else if constexpr (std::is_unsigned_v<T>)
        return "a nonnegative integer";
    else if constexpr (std::is_integral_v<T>)
        return "an integer";
    else if constexpr (std::is_same_v<T, std::vector<double>>)
        return "an array of numbers";
    else if constexpr (std::is_same_v<T, std::vector<std::string>>)
        return "an array of strings";
    else
        return "an array of nonnegative integers";
}

/// Reads obj[key] into out when present; reports a type mismatch or, for
/// required keys, the absence. Returns true when a value was stored.
template <class T>
bool read(Violations& v, const json& obj, const char* key, const std::string& path, T& out, bool required = false)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (required)
            v.add(path + "." + key, "missing required key");
        return false;
    }
    if (!convert(*it, out)) {
        v.add(path + "." + key, std::string("expected ") + type_name<T>());
        return false;
    }
    return true;
}

const std::set<std::string> kCommands{"run", "sweep", "bounds", "casestudy"};
const std::vector<std::string> kStationaryBounds{"exhaustive", "karnin", "cbe", "sh_no_change"};
const std::vector<std::string> kChangeBounds{"sh_total", "early_change", "late_change", "kshes", "kshes_early"};

CaseStudyChannel parse_channel(Violations& v, const json& j, const std::string& path)
{
    CaseStudyChannel c;
    if (!expect_object(v, j, path))
        return c;
    allow_keys(v, j, path,
               {"distance_m", "bandwidth_hz", "tx_power_dbm", "carrier_hz", "noise_figure_db", "pathloss"});
    if (read(v, j, "distance_m", path, c.distance_m) && !(c.distance_m > 0.0))
        v.add(path + ".distance_m", "must be positive");
    if (read(v, j, "bandwidth_hz", path, c.bandwidth_hz) && !(c.bandwidth_hz > 0.0))
        v.add(path + ".bandwidth_hz", "must be positive");
    read(v, j, "tx_power_dbm", path, c.tx_power_dbm);
    if (read(v, j, "carrier_hz", path, c.carrier_hz) && !(c.carrier_hz > 0.0))
        v.add(path + ".carrier_hz", "must be positive");
    read(v, j, "noise_figure_db", path, c.noise_figure_db);
    if (const auto it = j.find("pathloss"); it != j.end()) {
        const std::string p = path + ".pathloss";
        if (expect_object(v, *it, p)) {
            allow_keys(v, *it, p, {"kind", "exponent", "reference_distance_m"});
            std::string kind = "free_space";
            read(v, *it, "kind", p, kind);
            if (kind == "free_space")
                c.pathloss.kind = PathLossModel::Kind::free_space;
            else if (kind == "log_distance")
                c.pathloss.kind = PathLossModel::Kind::log_distance;
            else
                v.add(p + ".kind", "expected free_space or log_distance");
            if (read(v, *it, "exponent", p, c.pathloss.exponent) && !(c.pathloss.exponent > 0.0))
                v.add(p + ".exponent", "must be positive");
            if (read(v, *it, "reference_distance_m", p, c.pathloss.reference_distance_m) &&
                !(c.pathloss.reference_distance_m > 0.0))
                v.add(p + ".reference_distance_m", "must be positive");
        }
    }
    return c;
}

json channel_to_json(const CaseStudyChannel& c)
{
    json pl{{"kind", c.pathloss.kind == PathLossModel::Kind::free_space ? "free_space" : "log_distance"}};
    if (c.pathloss.kind == PathLossModel::Kind::log_distance) {
        pl["exponent"] = c.pathloss.exponent;
        pl["reference_distance_m"] = c.pathloss.reference_distance_m;
    }
    return {{"distance_m", c.distance_m},     {"bandwidth_hz", c.bandwidth_hz},
            {"tx_power_dbm", c.tx_power_dbm}, {"carrier_hz", c.carrier_hz},
            {"noise_figure_db", c.noise_figure_db}, {"pathloss", pl}};
}

ChangeLaw parse_law(Violations& v, const json& j, const std::string& path)
{
    ChangeLaw law;
    if (!expect_object(v, j, path))
        return law;
    allow_keys(v, j, path, {"kind", "slot", "lo", "hi", "alpha", "beta", "relative"});
    std::string kind;
    read(v, j, "kind", path, kind, true);
    double lo = 0.0;
    double hi = 0.0;
    bool relative = false;
    if (kind == "fixed") {
        std::uint64_t slot = 0;
        read(v, j, "slot", path, slot, true);
        for (const char* k : {"lo", "hi", "alpha", "beta", "relative"})
            if (j.contains(k))
                v.add(path + "." + k, "not used by a fixed law");
        return ChangeLaw::fixed(static_cast<std::int64_t>(slot));
    }
    if (j.contains("slot"))
        v.add(path + ".slot", "only used by a fixed law");
    read(v, j, "lo", path, lo, true);
    read(v, j, "hi", path, hi, true);
    read(v, j, "relative", path, relative);
    if (kind == "uniform") {
        for (const char* k : {"alpha", "beta"})
            if (j.contains(k))
                v.add(path + "." + k, "only used by a beta law");
        law = relative ? ChangeLaw::uniform_fraction(lo, hi) : ChangeLaw::uniform(lo, hi);
    } else if (kind == "beta") {
        double a = 1.0;
        double b = 1.0;
        read(v, j, "alpha", path, a, true);
        read(v, j, "beta", path, b, true);
        law = relative ? ChangeLaw::beta_fraction(a, b, lo, hi) : ChangeLaw::beta(a, b, lo, hi);
    } else if (!kind.empty() || j.contains("kind")) {
        v.add(path + ".kind", "expected fixed, uniform or beta");
        return law;
    } else {
        return law;
    }
    try {
        law.validate();
    } catch (const std::exception& e) {
        v.add(path, e.what());
    }
    return law;
}

json law_to_json(const ChangeLaw& law)
{
    if (law.shape.kind == ShapeLaw::Kind::point && law.lo == law.hi && !law.relative)
        return {{"kind", "fixed"}, {"slot", static_cast<std::uint64_t>(law.lo)}};
    json j{{"lo", law.lo}, {"hi", law.hi}, {"relative", law.relative}};
    if (law.shape.kind == ShapeLaw::Kind::beta) {
        j["kind"] = "beta";
        j["alpha"] = law.shape.alpha;
        j["beta"] = law.shape.beta;
    } else {
        j["kind"] = "uniform";
    }
    return j;
}

EnvironmentConfig parse_environment(Violations& v, const json& j, const std::string& path)
{
    EnvironmentConfig env;
    if (!expect_object(v, j, path))
        return env;
    allow_keys(v, j, path, {"n_beams", "means", "gains", "channel", "sidelobe_db", "noise_scale", "change"});
    const bool have_n = read(v, j, "n_beams", path, env.n_beams, true);
    if (have_n && (env.n_beams < 2 || !is_power_of_two(env.n_beams)))
        v.add(path + ".n_beams", "must be a power of two >= 2, got " + std::to_string(env.n_beams));
    const bool n_ok = have_n && env.n_beams >= 2 && is_power_of_two(env.n_beams);

    const int sources = int(j.contains("means")) + int(j.contains("gains")) + int(j.contains("channel"));
    if (sources != 1)
        v.add(path, "exactly one of means, gains or channel is required");

    if (read(v, j, "means", path, env.means)) {
        if (n_ok && env.means.size() != env.n_beams)
            v.add(path + ".means", "length must equal n_beams");
        if (std::any_of(env.means.begin(), env.means.end(), [](double m) { return !(m >= 0.0) || !std::isfinite(m); }))
            v.add(path + ".means", "entries must be finite and nonnegative");
    }
    if (const auto it = j.find("gains"); it != j.end()) {
        const std::string p = path + ".gains";
        StationaryGainPair g;
        if (expect_object(v, *it, p)) {
            allow_keys(v, *it, p, {"G", "g", "best_index"});
            read(v, *it, "G", p, g.big_gain, true);
            read(v, *it, "g", p, g.small_gain, true);
            read(v, *it, "best_index", p, g.best_index);
            if (!(g.small_gain >= 0.0) || !(g.big_gain > g.small_gain))
                v.add(p, "requires G > g >= 0");
            if (n_ok && g.best_index >= env.n_beams)
                v.add(p + ".best_index", "must be below n_beams");
        }
        env.gains = g;
    }
    if (const auto it = j.find("channel"); it != j.end())
        env.channel = parse_channel(v, *it, path + ".channel");
    if (read(v, j, "sidelobe_db", path, env.sidelobe_db) && !j.contains("channel"))
        v.add(path + ".sidelobe_db", "only used with channel");
    if (read(v, j, "noise_scale", path, env.noise_scale) && !(env.noise_scale >= 0.0))
        v.add(path + ".noise_scale", "must be nonnegative");

    if (const auto it = j.find("change"); it != j.end()) {
        const std::string p = path + ".change";
        ChangeConfig c;
        if (expect_object(v, *it, p)) {
            allow_keys(v, *it, p, {"beam", "rank", "pre", "post", "law"});
            if (it->contains("beam") == it->contains("rank"))
                v.add(p, "exactly one of beam or rank is required");
            std::size_t beam = 0;
            if (read(v, *it, "beam", p, beam)) {
                c.beam = beam;
                if (n_ok && beam >= env.n_beams)
                    v.add(p + ".beam", "must be below n_beams");
            }
            std::vector<std::size_t> rank;
            if (read(v, *it, "rank", p, rank)) {
                if (rank.size() != 2 || rank[0] < 1 || rank[0] > rank[1] || (n_ok && rank[1] > env.n_beams))
                    v.add(p + ".rank", "expected [first, last] with 1 <= first <= last <= n_beams");
                else
                    c.rank = std::make_pair(rank[0], rank[1]);
            }
            double pre = 0.0;
            if (read(v, *it, "pre", p, pre)) {
                c.pre = pre;
                if (!(pre >= 0.0))
                    v.add(p + ".pre", "must be nonnegative");
            }
            if (read(v, *it, "post", p, c.post, true) && !(c.post >= 0.0))
                v.add(p + ".post", "must be nonnegative");
            if (const auto lt = it->find("law"); lt != it->end())
                c.law = parse_law(v, *lt, p + ".law");
            else
                v.add(p + ".law", "missing required key");
        }
        env.change = c;
    }
    return env;
}

json environment_to_json(const EnvironmentConfig& env)
{
    json j{{"n_beams", env.n_beams}, {"noise_scale", env.noise_scale}};
    if (env.gains)
        j["gains"] = {{"G", env.gains->big_gain}, {"g", env.gains->small_gain}, {"best_index", env.gains->best_index}};
    else if (env.channel) {
        j["channel"] = channel_to_json(*env.channel);
        j["sidelobe_db"] = env.sidelobe_db;
    } else
        j["means"] = env.means;
    if (env.change) {
        json c{{"post", env.change->post}, {"law", law_to_json(env.change->law)}};
        if (env.change->beam)
            c["beam"] = *env.change->beam;
        if (env.change->rank)
            c["rank"] = {env.change->rank->first, env.change->rank->second};
        if (env.change->pre)
            c["pre"] = *env.change->pre;
        j["change"] = c;
    }
    return j;
}

std::vector<PolicySpec> parse_policies(Violations& v, const json& j, const std::string& path,
                                       std::optional<std::size_t> n_beams)
{
    std::vector<PolicySpec> out;
    if (!j.is_array()) {
        v.add(path, "expected an array");
        return out;
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!expect_object(v, j[i], p))
            continue;
        allow_keys(v, j[i], p, {"name", "k", "r_offset"});
        PolicySpec spec;
        std::string name;
        if (read(v, j[i], "name", p, name, true)) {
            try {
                spec.kind = policy_from_string(name);
            } catch (const std::exception&) {
                v.add(p + ".name", "expected exhaustive, cbe, sh or kshes, got \"" + name + "\"");
                continue;
            }
        } else {
            continue;
        }
        const bool has_k = read(v, j[i], "k", p, spec.k);
        const bool has_off = read(v, j[i], "r_offset", p, spec.r_offset);
        if (spec.kind == PolicyKind::kshes) {
            if (!has_k)
                v.add(p + ".k", "missing required key");
            else if (spec.k < 1 || (n_beams && 2 * spec.k > *n_beams))
                v.add(p + ".k", "requires 1 <= k <= n_beams / 2");
        } else if (has_k || has_off) {
            v.add(p, "k and r_offset apply to kshes only");
        }
        if (!labels.insert(spec.label() + "/" + std::to_string(spec.r_offset)).second)
            v.add(p, "duplicate policy");
        out.push_back(spec);
    }
    if (out.empty() && j.empty())
        v.add(path, "at least one policy is required");
    return out;
}

json policy_to_json(const PolicySpec& p)
{
    json j{{"name", to_string(p.kind)}};
    if (p.kind == PolicyKind::kshes) {
        j["k"] = p.k;
        j["r_offset"] = p.r_offset;
    }
    return j;
}

void check_nonempty_budgets(Violations& v, const std::vector<std::size_t>& budgets, const std::string& path)
{
    if (budgets.empty())
        v.add(path, "axis must not be empty");
    if (std::any_of(budgets.begin(), budgets.end(), [](std::size_t b) { return b == 0; }))
        v.add(path, "budgets must be positive");
}

void check_distances(Violations& v, const json& block, const std::vector<double>& d, const std::string& path,
                     const std::optional<EnvironmentConfig>& env)
{
    if (!block.contains("distances_m"))
        return;
    if (d.empty())
        v.add(path, "axis must not be empty");
    if (std::any_of(d.begin(), d.end(), [](double x) { return !(x > 0.0); }))
        v.add(path, "distances must be positive");
    if (env && !env->channel)
        v.add(path, "requires environment.channel");
}

std::string hex64(std::uint64_t x)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// ---------------------------------------------------------------------------
// Bounds for the configured environment

struct ChangeSummary {
    std::size_t k = 1;           // pre-change rank of the changed beam
    double pre = 0.0;
    double post = 0.0;
    double delta_min = 0.0;
    double sigma_max_sq = 0.0;
    std::vector<double> above;   // pre-change means ranked above it
};

double smallest_gap(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[i - 1])
            gap = std::min(gap, values[i] - values[i - 1]);
    return gap;
}

ChangeSummary summarize_change(const EnvironmentSpec& spec)
{
    const auto& ch = *spec.change();
    std::vector<std::size_t> order(spec.n_beams());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    const auto& m = spec.means();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m[a] > m[b]; });

    ChangeSummary s;
    std::size_t beam = 0;
    if (const auto* bt = std::get_if<BeamTarget>(&ch.target)) {
        beam = bt->index;
        s.k = static_cast<std::size_t>(std::find(order.begin(), order.end(), beam) - order.begin()) + 1;
    } else {
        s.k = std::get<RankTarget>(ch.target).last;
        beam = order[s.k - 1];
    }
    s.pre = ch.pre_mean.value_or(m[static_cast<Eigen::Index>(beam)]);
    s.post = ch.post_mean;
    std::vector<double> vals;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (order[r] == beam)
            continue;
        vals.push_back(m[static_cast<Eigen::Index>(order[r])]);
        if (r + 1 < s.k)
            s.above.push_back(m[static_cast<Eigen::Index>(order[r])]);
    }
    vals.push_back(s.pre);
    vals.push_back(s.post);
    s.delta_min = smallest_gap(vals);
    s.sigma_max_sq = 2.0 * spec.noise_scale() * *std::max_element(vals.begin(), vals.end());
    return s;
}

struct BoundRow {
    std::string name;
    BoundValue value;
};

std::vector<BoundRow> evaluate_bounds(const RunConfig& cfg, const EnvironmentSpec& spec, std::size_t t)
{
    const std::size_t n = spec.n_beams();
    const auto form = cfg.bounds.literal_exponent ? ExponentForm::literal : ExponentForm::with_sigma_max;
    std::vector<std::string> names = cfg.bounds.names;
    std::vector<BoundRow> rows;

    if (!spec.change()) {
        const auto& m = spec.means();
        std::vector<double> sorted(m.data(), m.data() + m.size());
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const double top_gap = sorted[0] - sorted[1];
        const bool two_level = std::all_of(sorted.begin() + 1, sorted.end(), [&](double x) { return x == sorted[1]; });
        if (names.empty()) {
            names = {"exhaustive", "sh_no_change"};
            if (two_level) {
                names.push_back("karnin");
                if (sorted[1] > 0.0)
                    names.push_back("cbe");
            }
        }
        const auto td = static_cast<double>(t);
        for (const auto& name : names) {
            if (name == "exhaustive")
                rows.push_back({name, bound_exhaustive(td, n, top_gap, spec.noise_scale(), sorted[0])});
            else if (name == "sh_no_change")
                rows.push_back({name, bound_sh_no_change(td, n, top_gap)});
            else if (name == "karnin" || name == "cbe") {
                const StationaryGainPair g = two_level_gains(m);
                if (name == "karnin")
                    rows.push_back({name, bound_karnin(td, n, g.big_gain, g.small_gain)});
                else
                    rows.push_back({name, bound_cbe(t, n, g.big_gain, g.small_gain, spec.noise_scale(),
                                                    cfg.bounds.full_false_alarm_exponent ? FalseAlarmExponent::full
                                                                                 : FalseAlarmExponent::halved)
                                              .bound});
            } else
                throw std::invalid_argument("bound " + name + " needs an environment with a change");
        }
        return rows;
    }

    if (names.empty())
        names = kChangeBounds;
    const ChangeSummary s = summarize_change(spec);
    const auto& law = spec.change()->slot_law;
    const auto td = static_cast<double>(t);
    std::size_t k_policy = s.k;
    int offset = 0;
    for (const auto& p : cfg.policies)
        if (p.kind == PolicyKind::kshes) {
            k_policy = p.k;
            offset = p.r_offset;
            break;
        }
    const RoundLaw rl = round_law(law, t, n);
    const std::size_t r_star_sh = kshes_stop_round(n, std::min(s.k, n / 2), offset);
    for (const auto& name : names) {
        if (name == "sh_total")
            rows.push_back({name, bound_sh_total(td, n, s.k, s.delta_min, s.sigma_max_sq, rl, r_star_sh, form).total});
        else if (name == "early_change")
            rows.push_back({name, bound_early_change(td, n, s.k, s.delta_min, s.sigma_max_sq, form)});
        else if (name == "late_change")
            rows.push_back(
                {name, bound_late_change(td, n, s.k, s.delta_min, s.sigma_max_sq, rl, r_star_sh, form).total});
        else if (name == "kshes" || name == "kshes_early") {
            const std::size_t r_star = kshes_stop_round(n, k_policy, offset);
            std::vector<double> above = s.above;
            above.resize(k_policy - 1, above.empty() ? s.pre : above.back());
            const auto slots = kshes_crossing_slots(t, n, r_star, above, s.pre, s.post);
            const KshesBound kb = bound_kshes(t, n, k_policy, s.delta_min, s.sigma_max_sq, law, r_star, slots);
            rows.push_back({name, name == "kshes" ? kb.general : kb.early_window});
        } else
            throw std::invalid_argument("bound " + name + " needs a stationary environment");
    }
    return rows;
}

std::vector<std::optional<double>> distance_axis(const std::vector<double>& d)
{
    if (d.empty())
        return {std::nullopt};
    return {d.begin(), d.end()};
}

std::vector<std::string> sweep_columns(bool with_distance)
{
    std::vector<std::string> cols{"policy", "T"};
    if (with_distance)
        cols.push_back("distance_m");
    for (const char* c : {"error", "ci_lo", "ci_hi", "trials", "seed"})
        cols.emplace_back(c);
    return cols;
}

void write_sweep(const fs::path& file, const std::vector<SweepRow>& rows, bool with_distance)
{
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + file.string());
    CsvWriter w(os);
    w.row(sweep_columns(with_distance));
    for (const auto& r : rows) {
        std::vector<std::string> f{r.policy};
        for (const auto& [_, value] : r.axes)
            f.push_back(value);
        f.push_back(format_double(r.estimate.error));
        f.push_back(format_double(r.estimate.ci.lo));
        f.push_back(format_double(r.estimate.ci.hi));
        f.push_back(std::to_string(r.estimate.trials));
        f.push_back(std::to_string(r.seed));
        w.row(f);
    }
    if (!os)
        throw std::runtime_error("write failed: " + file.string());
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
          std::string msg = "invalid config";
          for (const auto& v : violations)
              msg += "\n  " + v;
          return msg;
      }()),
      violations_(std::move(violations))
{
}

RunConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("$: malformed JSON: ") + e.what()});
    }
    Violations v;
    RunConfig cfg;
    if (!expect_object(v, root, "$"))
        throw ConfigError(std::move(v.list()));
    allow_keys(v, root, "$",
               {"schema_version", "command", "seed", "output_dir", "trials", "workers", "environment", "policies",
                "budget", "sweep", "bounds", "casestudy"});
    int schema = kSchemaVersion;
    if (read(v, root, "schema_version", "$", schema) && schema != kSchemaVersion)
        v.add("$.schema_version", "unsupported version " + std::to_string(schema));
    if (read(v, root, "command", "$", cfg.command, true) && !kCommands.count(cfg.command))
        v.add("$.command", "expected run, sweep, bounds or casestudy");
    read(v, root, "seed", "$", cfg.seed);
    if (read(v, root, "output_dir", "$", cfg.output_dir) && cfg.output_dir.empty())
        v.add("$.output_dir", "must not be empty");
    if (read(v, root, "trials", "$", cfg.trials) && cfg.trials < 1)
        v.add("$.trials", "must be >= 1");
    if (read(v, root, "workers", "$", cfg.workers) && cfg.workers < 1)
        v.add("$.workers", "must be >= 1");

    const bool needs_env = cfg.command == "run" || cfg.command == "sweep" || cfg.command == "bounds";
    if (const auto it = root.find("environment"); it != root.end())
        cfg.environment = parse_environment(v, *it, "$.environment");
    else if (needs_env)
        v.add("$.environment", "missing required key");

    std::optional<std::size_t> n_beams;
    if (cfg.environment && cfg.environment->n_beams >= 2 && is_power_of_two(cfg.environment->n_beams))
        n_beams = cfg.environment->n_beams;
    if (const auto it = root.find("policies"); it != root.end())
        cfg.policies = parse_policies(v, *it, "$.policies", n_beams);
    else if (cfg.command == "run" || cfg.command == "sweep")
        v.add("$.policies", "missing required key");

    if (read(v, root, "budget", "$", cfg.budget, cfg.command == "run") && cfg.budget == 0)
        v.add("$.budget", "must be positive");

    if (const auto it = root.find("sweep"); it != root.end()) {
        if (expect_object(v, *it, "$.sweep")) {
            allow_keys(v, *it, "$.sweep", {"budgets", "distances_m"});
            if (read(v, *it, "budgets", "$.sweep", cfg.sweep.budgets, true))
                check_nonempty_budgets(v, cfg.sweep.budgets, "$.sweep.budgets");
            if (read(v, *it, "distances_m", "$.sweep", cfg.sweep.distances_m))
                check_distances(v, *it, cfg.sweep.distances_m, "$.sweep.distances_m", cfg.environment);
        }
    } else if (cfg.command == "sweep") {
        v.add("$.sweep", "missing required key");
    }

    if (const auto it = root.find("bounds"); it != root.end()) {
        if (expect_object(v, *it, "$.bounds")) {
            allow_keys(v, *it, "$.bounds", {"budgets", "distances_m", "names", "literal_exponent", "full_false_alarm_exponent"});
            if (read(v, *it, "budgets", "$.bounds", cfg.bounds.budgets, true))
                check_nonempty_budgets(v, cfg.bounds.budgets, "$.bounds.budgets");
            if (read(v, *it, "distances_m", "$.bounds", cfg.bounds.distances_m))
                check_distances(v, *it, cfg.bounds.distances_m, "$.bounds.distances_m", cfg.environment);
            if (read(v, *it, "names", "$.bounds", cfg.bounds.names)) {
                const bool change = cfg.environment && cfg.environment->change;
                const auto& allowed = change ? kChangeBounds : kStationaryBounds;
                for (const auto& name : cfg.bounds.names)
                    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
                        v.add("$.bounds.names", "\"" + name + "\" does not apply to this environment");
            }
            read(v, *it, "literal_exponent", "$.bounds", cfg.bounds.literal_exponent);
            read(v, *it, "full_false_alarm_exponent", "$.bounds", cfg.bounds.full_false_alarm_exponent);
        }
    } else if (cfg.command == "bounds") {
        v.add("$.bounds", "missing required key");
    }

    if (const auto it = root.find("casestudy"); it != root.end()) {
        const std::string p = "$.casestudy";
        if (expect_object(v, *it, p)) {
            auto& cs = cfg.casestudy;
            allow_keys(v, *it, p, {"channel", "n_grid", "fractions", "frame_slots", "blockage_db", "k"});
            if (const auto ct = it->find("channel"); ct != it->end())
                cs.channel = parse_channel(v, *ct, p + ".channel");
            if (read(v, *it, "n_grid", p, cs.n_grid) &&
                (cs.n_grid.empty() ||
                 std::any_of(cs.n_grid.begin(), cs.n_grid.end(), [](std::size_t n) { return n < 2 || !is_power_of_two(n); })))
                v.add(p + ".n_grid", "expected a nonempty list of powers of two >= 2");
            if (read(v, *it, "fractions", p, cs.fractions) &&
                (cs.fractions.empty() ||
                 std::any_of(cs.fractions.begin(), cs.fractions.end(), [](double f) { return !(f > 0.0 && f < 1.0); })))
                v.add(p + ".fractions", "expected a nonempty list in (0, 1)");
            if (read(v, *it, "frame_slots", p, cs.frame_slots) && cs.frame_slots < 2)
                v.add(p + ".frame_slots", "must be >= 2");
            read(v, *it, "blockage_db", p, cs.blockage_db);
            if (read(v, *it, "k", p, cs.k) && cs.k < 1)
                v.add(p + ".k", "must be >= 1");
        }
    }

    if (cfg.environment && v.empty()) {
        try {
            (void)build_environment(*cfg.environment);
        } catch (const std::exception& e) {
            v.add("$.environment", e.what());
        }
    }
    if (!v.empty())
        throw ConfigError(std::move(v.list()));
    return cfg;
}

std::string serialize_config(const RunConfig& cfg)
{
    json j{{"schema_version", kSchemaVersion}, {"command", cfg.command}, {"seed", cfg.seed},
           {"output_dir", cfg.output_dir},      {"trials", cfg.trials},   {"workers", cfg.workers}};
    if (cfg.environment)
        j["environment"] = environment_to_json(*cfg.environment);
    if (!cfg.policies.empty()) {
        json ps = json::array();
        for (const auto& p : cfg.policies)
            ps.push_back(policy_to_json(p));
        j["policies"] = ps;
    }
    if (cfg.budget > 0)
        j["budget"] = cfg.budget;
    if (!cfg.sweep.budgets.empty()) {
        j["sweep"] = {{"budgets", cfg.sweep.budgets}};
        if (!cfg.sweep.distances_m.empty())
            j["sweep"]["distances_m"] = cfg.sweep.distances_m;
    }
    if (!cfg.bounds.budgets.empty()) {
        json b{{"budgets", cfg.bounds.budgets},
               {"literal_exponent", cfg.bounds.literal_exponent},
               {"full_false_alarm_exponent", cfg.bounds.full_false_alarm_exponent}};
        if (!cfg.bounds.distances_m.empty())
            b["distances_m"] = cfg.bounds.distances_m;
        if (!cfg.bounds.names.empty())
            b["names"] = cfg.bounds.names;
        j["bounds"] = b;
    }
    if (cfg.command == "casestudy") {
        const auto& cs = cfg.casestudy;
        j["casestudy"] = {{"channel", channel_to_json(cs.channel)}, {"n_grid", cs.n_grid},
                          {"fractions", cs.fractions},              {"frame_slots", cs.frame_slots},
                          {"blockage_db", cs.blockage_db},          {"k", cs.k}};
    }
    return j.dump(2);
}

std::string config_hash(const RunConfig& config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize_config(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return hex64(h);
}

EnvironmentSpec build_environment(const EnvironmentConfig& env, std::optional<double> distance_m)
{
    const std::size_t n = env.n_beams;
    if (n < 2 || !is_power_of_two(n))
        throw std::invalid_argument("n_beams must be a power of two >= 2");
    Eigen::VectorXd means;
    double noise = env.noise_scale;
    if (env.gains) {
        means = make_stationary(n, *env.gains, noise).means();
    } else if (env.channel) {
        CaseStudyChannel ch = *env.channel;
        if (distance_m)
            ch.distance_m = *distance_m;
        const double big = reference_snr(ch) * directivity_gain(n);
        means = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), big * std::pow(10.0, env.sidelobe_db / 10.0));
        means[0] = big;
    } else {
        if (env.means.size() != n)
            throw std::invalid_argument("means length must equal n_beams");
        means = Eigen::Map<const Eigen::VectorXd>(env.means.data(), static_cast<Eigen::Index>(n));
    }
    if (distance_m && !env.channel)
        throw std::invalid_argument("distance axis requires a channel environment");

    std::optional<ChangeSchedule> change;
    if (env.change) {
        ChangeSchedule s;
        if (env.change->beam)
            s.target = BeamTarget{*env.change->beam};
        else if (env.change->rank)
            s.target = RankTarget{env.change->rank->first, env.change->rank->second};
        s.pre_mean = env.change->pre;
        s.post_mean = env.change->post;
        s.slot_law = env.change->law;
        change = s;
    }
    return EnvironmentSpec(std::move(means), noise, change);
}

ExecutionResult execute(const RunConfig& cfg)
{
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const RunOptions opts{cfg.trials, cfg.seed, cfg.workers};
    const std::string hash = config_hash(cfg);
    ExecutionResult result;
    json columns = json::object();

    if (cfg.command == "run" || cfg.command == "sweep") {
        std::vector<std::size_t> budgets = cfg.command == "run" ? std::vector<std::size_t>{cfg.budget} : cfg.sweep.budgets;
        const bool with_d = cfg.command == "sweep" && !cfg.sweep.distances_m.empty();
        std::vector<SweepPoint> points;
        for (const auto& d : distance_axis(cfg.command == "sweep" ? cfg.sweep.distances_m : std::vector<double>{}))
            for (std::size_t t : budgets) {
                SweepPoint p{{{"T", std::to_string(t)}}, build_environment(*cfg.environment, d), t, 0};
                if (d)
                    p.axes.emplace_back("distance_m", format_double(*d));
                points.push_back(std::move(p));
            }
        const auto rows = run_comparison_sweep(points, cfg.policies, opts);
        const std::string name = cfg.command == "run" ? "results.csv" : "sweep.csv";
        write_sweep(dir / name, rows, with_d);
        columns[name] = sweep_columns(with_d);
        result.artifacts.push_back((dir / name).string());
    } else if (cfg.command == "bounds") {
        const fs::path file = dir / "bounds.csv";
        std::ofstream os(file, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open " + file.string());
        CsvWriter w(os);
        const std::vector<std::string> cols{"config_hash", "bound", "grid_point", "value", "vacuous"};
        w.row(cols);
        for (const auto& d : distance_axis(cfg.bounds.distances_m)) {
            const EnvironmentSpec spec = build_environment(*cfg.environment, d);
            for (std::size_t t : cfg.bounds.budgets) {
                std::string point = "T=" + std::to_string(t);
                if (d)
                    point += ";distance_m=" + format_double(*d);
                for (const auto& row : evaluate_bounds(cfg, spec, t))
                    w.row({hash, row.name, point, format_double(row.value.value), row.value.vacuous ? "1" : "0"});
            }
        }
        if (!os)
            throw std::runtime_error("write failed: " + file.string());
        columns["bounds.csv"] = cols;
        result.artifacts.push_back(file.string());
    } else if (cfg.command == "casestudy") {
        const CaseStudyResult cs = optimize_case_study(cfg.casestudy, opts);
        const fs::path file = dir / "casestudy.csv";
        std::ofstream os(file, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open " + file.string());
        CsvWriter w(os);
        const std::vector<std::string> cols{"n_beams", "fraction", "budget", "feasible", "error",
                                            "ci_lo",   "ci_hi",    "trials", "rate_bps", "seed"};
        w.row(cols);
        for (const auto& p : cs.points)
            w.row({std::to_string(p.n_beams), format_double(p.fraction), std::to_string(p.budget),
                   p.feasible ? "1" : "0", format_double(p.estimate.error), format_double(p.estimate.ci.lo),
                   format_double(p.estimate.ci.hi), std::to_string(p.estimate.trials), format_double(p.rate_bps),
                   std::to_string(cfg.seed)});
        columns["casestudy.csv"] = cols;
        result.artifacts.push_back(file.string());

        const fs::path best = dir / "casestudy_optimum.csv";
        std::ofstream ob(best, std::ios::binary);
        CsvWriter wb(ob);
        const std::vector<std::string> bcols{"fraction", "best_n_beams"};
        wb.row(bcols);
        for (const auto& [f, n] : cs.best_n_per_fraction)
            wb.row({format_double(f), std::to_string(n)});
        if (!os || !ob)
            throw std::runtime_error("write failed in " + dir.string());
        columns["casestudy_optimum.csv"] = bcols;
        result.artifacts.push_back(best.string());
    } else {
        throw std::invalid_argument("unknown command " + cfg.command);
    }

    const json manifest{{"schema_version", kSchemaVersion},
                        {"command", cfg.command},
                        {"config", json::parse(serialize_config(cfg))},
                        {"config_hash", hash},
                        {"seed", cfg.seed},
                        {"timestamp", utc_timestamp()},
                        {"columns", columns},
                        {"artifacts", result.artifacts}};
    const fs::path mfile = dir / "manifest.json";
    std::ofstream mo(mfile, std::ios::binary);
    mo << manifest.dump(2) << '\n';
    if (!mo)
        throw std::runtime_error("write failed: " + mfile.string());
    result.artifacts.push_back(mfile.string());
    return result;
}

std::string config_reference()
{
    return R"(Config file (JSON). Unknown keys are rejected.
  schema_version     integer, must be 1 (optional)
  command            run | sweep | bounds | casestudy (required)
  seed               master seed, unsigned 64-bit (default 1)
  output_dir         directory for CSV files and manifest.json, created if missing (default "out")
  trials             Monte Carlo trials per point (default 1000)
  workers            worker threads; results do not depend on it (default 1)
  budget             run: time slots T (required for run)
  environment        required for run, sweep, bounds
    n_beams          N, power of two >= 2
    means            list of N mean received powers, linear, noise-normalized   | exactly one
    gains.G          aligned-beam mean, linear                                  | of means,
    gains.g          misaligned-beam mean, linear, g < G                        | gains or
    gains.best_index aligned beam index (default 0)                             | channel
    channel          free-space link: beam 0 gets xi0 * N, the rest xi0 * N * 10^(sidelobe_db/10)
      distance_m       meters (default 100)
      bandwidth_hz     Hz (default 1e9)
      tx_power_dbm     dBm (default 40)
      carrier_hz       Hz (default 28e9)
      noise_figure_db  dB (default 0)
      pathloss.kind    free_space | log_distance (default free_space)
      pathloss.exponent              log_distance only, dimensionless (default 2)
      pathloss.reference_distance_m  log_distance only, meters (default 1)
    sidelobe_db      dB relative to the main lobe, channel only (default -40)
    noise_scale      sigma^2: a sample has variance 2 sigma^2 mu (default 1)
    change           optional single abrupt change
      beam           changed beam index                                          | one of
      rank           [first, last]: pre-change rank (1 = best) drawn uniformly   | beam, rank
      pre            pre-change mean, linear (default: the beam's entry in means)
      post           post-change mean, linear (required)
      law.kind       fixed | uniform | beta
      law.slot       fixed: change slot (samples after it see the post mean)
      law.lo, law.hi window in slots, or fractions of the horizon if law.relative
      law.alpha, law.beta   beta shape parameters
      law.relative   boolean (default false)
  policies           list of {name: exhaustive | cbe | sh | kshes, k, r_offset}
    k                kshes: number of beams kept after halving, 1 <= k <= N/2
    r_offset         kshes: integer added to the stop round floor(log2(N/2k)) (default 0)
  sweep              sweep axes (the grid is their product)
    budgets          list of T in slots (required, nonempty)
    distances_m      list of meters, channel environments only
  bounds
    budgets          list of T in slots (required, nonempty)
    distances_m      list of meters, channel environments only
    names            stationary: exhaustive, karnin, cbe, sh_no_change
                     with change: sh_total, early_change, late_change, kshes, kshes_early
                     (default: all that apply). With a change, K is the changed beam's
                     pre-change rank (the last rank of a range), dmin the smallest gap
                     between distinct means, sigma_max^2 = 2 sigma^2 max mean.
    literal_exponent     boolean: SH change bounds without sigma_max^2 (default false)
    full_false_alarm_exponent    boolean: CBE false-alarm exponent without the factor 2 (default false)
  casestudy          K-SHES alignment then data in one frame
    channel          as environment.channel
    n_grid           list of N (default 8..512)
    fractions        alignment share T/T_frame, each in (0, 1) (default 0.01 0.02 0.05 0.1)
    frame_slots      slots per frame (default 35072)
    blockage_db      dB loss of the best beam before the change (default 20)
    k                K-SHES k (default 1)
Outputs: results.csv | sweep.csv (policy, T[, distance_m], error, ci_lo, ci_hi, trials, seed),
  bounds.csv (config_hash, bound, grid_point, value, vacuous), casestudy.csv, casestudy_optimum.csv,
  manifest.json (config, seed, config_hash, timestamp, column lists).
)";
}

}  // namespace beamsel
