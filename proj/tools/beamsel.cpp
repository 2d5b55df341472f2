#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "beamsel/config.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, const std::vector<std::string>& violations = {})
{
    nlohmann::json err{{"error", {{"kind", kind}, {"message", message}}}};
    if (!violations.empty())
        err["error"]["violations"] = violations;
    std::cerr << err.dump() << '\n';
    return kind == "config" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Beam selection simulator: Monte Carlo error, analytic bounds and the rate case study."};
    app.footer(std::string("\nEvery flag may also be set through the environment variable shown; flags win.\n\n") +
               beamsel::config_reference());

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t workers = 0;
    std::size_t trials = 0;
    bool print_config = false;

    app.add_option("-c,--config", config_path, "JSON config file")->required()->envname("BEAMSEL_CONFIG");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)")->envname("BEAMSEL_SEED");
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides config)")->envname("BEAMSEL_OUT");
    auto* workers_opt = app.add_option("--workers", workers, "worker threads (overrides config)")
                            ->check(CLI::PositiveNumber)
                            ->envname("BEAMSEL_WORKERS");
    auto* trials_opt = app.add_option("--trials", trials, "trials per point (overrides config)")
                           ->check(CLI::PositiveNumber)
                           ->envname("BEAMSEL_TRIALS");
    app.add_flag("--print-config", print_config, "print the canonical config after overrides and exit");

    CLI11_PARSE(app, argc, argv);

    std::ifstream in(config_path);
    if (!in)
        return fail("io", "cannot read config " + config_path);
    std::stringstream text;
    text << in.rdbuf();

    beamsel::RunConfig cfg;
    try {
        cfg = beamsel::parse_config(text.str());
    } catch (const beamsel::ConfigError& e) {
        return fail("config", "invalid config " + config_path, e.violations());
    }
    if (*seed_opt)
        cfg.seed = seed;
    if (*out_opt)
        cfg.output_dir = out_dir;
    if (*workers_opt)
        cfg.workers = workers;
    if (*trials_opt)
        cfg.trials = trials;

    if (print_config) {
        std::cout << beamsel::serialize_config(cfg) << '\n';
        return 0;
    }
    try {
        const auto result = beamsel::execute(cfg);
        for (const auto& path : result.artifacts)
            std::cout << path << '\n';
        return result.exit_code;
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
}
