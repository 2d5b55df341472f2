#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "beamsel/config.hpp"

using namespace beamsel;
namespace fs = std::filesystem;

static const char* kMinimal = R"({
  "command": "run",
  "budget": 512,
  "environment": {"n_beams": 16, "gains": {"G": 1.5, "g": 1.0}},
  "policies": [{"name": "sh"}]
})";

static std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

static fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("beamsel_test_" + name);
    fs::remove_all(p);
    return p;
}

TEST_CASE("minimal stationary config is valid")
{
    const auto cfg = parse_config(kMinimal);
    CHECK(cfg.command == "run");
    CHECK(cfg.seed == 1);
    CHECK(cfg.trials == 1000);
    REQUIRE(cfg.environment);
    CHECK(cfg.environment->n_beams == 16);
}

static std::vector<std::string> violations_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.violations();
    }
    return {};
}

TEST_CASE("non power of two beam count is rejected by name")
{
    const auto v = violations_of(R"({"command":"run","budget":512,
        "environment":{"n_beams":48,"gains":{"G":1.5,"g":1.0}},"policies":[{"name":"sh"}]})");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("n_beams") != std::string::npos);
}

TEST_CASE("every violation is reported")
{
    const auto v = violations_of(R"({"command":"sweep","colour":1,"trials":"many",
        "environment":{"n_beams":16,"means":[1,2]},"policies":[{"name":"sh","k":2}],"sweep":{"budgets":[]}})");
    CHECK(v.size() == 5);
    auto has = [&](const char* s) {
        return std::any_of(v.begin(), v.end(), [&](const std::string& x) { return x.find(s) != std::string::npos; });
    };
    CHECK(has("$.colour: unknown key"));
    CHECK(has("$.trials"));
    CHECK(has("$.environment.means"));
    CHECK(has("$.policies[0]"));
    CHECK(has("$.sweep.budgets"));
}

TEST_CASE("missing keys and type mismatches")
{
    CHECK(violations_of("{}").size() == 1);
    CHECK(violations_of(R"({"command":"run"})").size() == 3);
    CHECK(!violations_of(R"({"command":"bounds","environment":{"n_beams":16,"gains":{"G":"big","g":0}},
        "bounds":{"budgets":[64]}})")
               .empty());
    CHECK(!violations_of("not json").empty());
    CHECK(!violations_of(R"({"command":"run","budget":64,"environment":{"n_beams":16,"gains":{"G":1,"g":0},
        "means":[1]},"policies":[{"name":"sh"}]})")
               .empty());
}

TEST_CASE("serialization round trip is idempotent")
{
    const char* full = R"({"command":"sweep","seed":99,"trials":50,"workers":3,"output_dir":"x",
        "environment":{"n_beams":64,"means":[],"noise_scale":0.2,
          "change":{"rank":[2,13],"post":1.5,"law":{"kind":"beta","alpha":2,"beta":8,"lo":0,"hi":1,"relative":true}}},
        "policies":[{"name":"sh"},{"name":"kshes","k":13,"r_offset":-1},{"name":"exhaustive"}],
        "sweep":{"budgets":[1024,2048]}})";
    nlohmann::json j = nlohmann::json::parse(full);
    std::vector<double> m(64);
    for (std::size_t i = 0; i < 64; ++i)
        m[i] = 1.0 - 0.01 * double(i);
    j["environment"]["means"] = m;
    const std::string once = serialize_config(parse_config(j.dump()));
    const std::string twice = serialize_config(parse_config(once));
    CHECK(once == twice);
    CHECK(config_hash(parse_config(once)) == config_hash(parse_config(twice)));
    const auto cfg = parse_config(once);
    CHECK(cfg.policies[1].r_offset == -1);
    CHECK(cfg.environment->change->rank->second == 13);
    CHECK(cfg.environment->change->law.shape.alpha == 2.0);

    const std::string chan = serialize_config(parse_config(R"({"command":"casestudy",
        "casestudy":{"channel":{"distance_m":50,"pathloss":{"kind":"log_distance","exponent":2.5}},"n_grid":[16,32]}})"));
    CHECK(chan == serialize_config(parse_config(chan)));
}

TEST_CASE("config hash changes with the config")
{
    auto a = parse_config(kMinimal);
    auto b = a;
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("bounds command: one row per grid point and bound name")
{
    const auto dir = scratch("bounds");
    const std::string text = R"({"command":"bounds","output_dir":")" + dir.string() + R"(",
        "environment":{"n_beams":16,"channel":{"distance_m":100}},
        "bounds":{"budgets":[256,512,1024,2048,4096],"distances_m":[100,500,1000,2000,5000]}})";
    const auto cfg = parse_config(text);
    const auto res = execute(cfg);
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "manifest.json"));
    std::ifstream in(dir / "bounds.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "config_hash,bound,grid_point,value,vacuous\r");
    int rows = 0;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == 5 * 5 * 4);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config_hash"] == config_hash(cfg));
    CHECK(manifest["columns"]["bounds.csv"].size() == 5);
    fs::remove_all(dir);
}

TEST_CASE("sweep rerun is byte-identical and reproducible from the manifest")
{
    const auto dir = scratch("sweep");
    const std::string text = R"({"command":"sweep","seed":5,"trials":300,"output_dir":")" + (dir / "a").string() + R"(",
        "environment":{"n_beams":16,"gains":{"G":1.4,"g":1.0,"best_index":3},"noise_scale":1.0},
        "policies":[{"name":"sh"},{"name":"exhaustive"},{"name":"kshes","k":2}],
        "sweep":{"budgets":[128,512]}})";
    auto cfg = parse_config(text);
    execute(cfg);
    const std::string first = slurp(dir / "a" / "sweep.csv");
    cfg.workers = 5;
    cfg.output_dir = (dir / "b").string();
    execute(cfg);
    CHECK(slurp(dir / "b" / "sweep.csv") == first);

    const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest["seed"] == 5);
    auto again = parse_config(manifest["config"].dump());
    again.output_dir = (dir / "c").string();
    execute(again);
    CHECK(slurp(dir / "c" / "sweep.csv") == first);
    CHECK(first.rfind("policy,T,error,ci_lo,ci_hi,trials,seed\r\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("missing output directory is created")
{
    const auto dir = scratch("nested") / "deeper" / "still";
    auto cfg = parse_config(kMinimal);
    cfg.trials = 20;
    cfg.output_dir = dir.string();
    const auto res = execute(cfg);
    CHECK(fs::exists(dir / "results.csv"));
    CHECK(res.artifacts.size() == 2);
    fs::remove_all(scratch("nested"));
}

TEST_CASE("change bounds and case study commands run")
{
    const auto dir = scratch("misc");
    std::vector<double> m(64);
    for (std::size_t i = 0; i < 64; ++i)
        m[i] = i < 13 ? 1.0 - 0.005 * double(i) : 0.3;
    nlohmann::json j{{"command", "bounds"},
                     {"output_dir", (dir / "b").string()},
                     {"environment",
                      {{"n_beams", 64},
                       {"means", m},
                       {"noise_scale", 0.2},
                       {"change", {{"rank", {2, 13}}, {"post", 1.5}, {"law", {{"kind", "uniform"}, {"lo", 0}, {"hi", 1024}}}}}}},
                     {"policies", {{{"name", "kshes"}, {"k", 13}}}},
                     {"bounds", {{"budgets", {1024, 4096}}}}};
    execute(parse_config(j.dump()));
    std::ifstream in(dir / "b" / "bounds.csv");
    std::string line;
    int rows = -1;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == 2 * 5);

    const auto cs = parse_config(R"({"command":"casestudy","trials":20,"output_dir":")" + (dir / "c").string() +
                                 R"(","casestudy":{"n_grid":[8,16],"fractions":[0.01,0.05]}})");
    const auto res = execute(cs);
    CHECK(fs::exists(dir / "c" / "casestudy.csv"));
    CHECK(fs::exists(dir / "c" / "casestudy_optimum.csv"));
    CHECK(res.artifacts.size() == 3);
    fs::remove_all(dir);
}

TEST_CASE("reference lists every key")
{
    const std::string ref = config_reference();
    for (const char* key : {"command", "seed", "output_dir", "trials", "workers", "budget", "n_beams", "means",
                            "gains.G", "gains.g", "best_index", "distance_m", "bandwidth_hz", "tx_power_dbm",
                            "carrier_hz", "noise_figure_db", "pathloss.kind", "sidelobe_db", "noise_scale",
                            "rank", "post", "law.kind", "policies", "r_offset", "budgets", "distances_m", "names",
                            "literal_exponent", "full_false_alarm_exponent", "n_grid", "fractions", "frame_slots",
                            "blockage_db", "schema_version"})
        CHECK_MESSAGE(ref.find(key) != std::string::npos, key);
}
