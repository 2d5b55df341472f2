#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "beamsel/environment.hpp"
#include "beamsel/experiments.hpp"

namespace beamsel {

inline constexpr int kSchemaVersion = 1;

struct ChangeConfig {
    std::optional<std::size_t> beam;
    std::optional<std::pair<std::size_t, std::size_t>> rank;
    std::optional<double> pre;
    double post = 0.0;
    ChangeLaw law = ChangeLaw::fixed(0);
};

/// Exactly one of `means`, `gains` or `channel` describes the beams.
struct EnvironmentConfig {
    std::size_t n_beams = 0;
    std::vector<double> means;
    std::optional<StationaryGainPair> gains;
    std::optional<CaseStudyChannel> channel;
    double sidelobe_db = -40.0;  // channel only: g = G 10^(sidelobe_db / 10)
    double noise_scale = 1.0;
    std::optional<ChangeConfig> change;
};

struct SweepConfig {
    std::vector<std::size_t> budgets;
    std::vector<double> distances_m;  // channel environments only
};

struct BoundsConfig {
    std::vector<std::size_t> budgets;
    std::vector<double> distances_m;
    std::vector<std::string> names;  // empty: every bound that applies
    bool literal_exponent = false;   // SH change bounds without sigma_max^2
    bool full_false_alarm_exponent = false;  // CBE false-alarm exponent without the factor 2
};

struct RunConfig {
    std::string command;  // run | sweep | bounds | casestudy
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::size_t trials = 1000;
    std::size_t workers = 1;
    std::optional<EnvironmentConfig> environment;
    std::vector<PolicySpec> policies;
    std::size_t budget = 0;
    SweepConfig sweep;
    BoundsConfig bounds;
    CaseStudyConfig casestudy;
};

/// Every schema violation found, one "path: message" entry each.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

RunConfig parse_config(const std::string& text);
/// Canonical JSON text (sorted keys, defaults filled in).
std::string serialize_config(const RunConfig& config);
/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Mean vector, noise and change of the environment block; `distance_m`
/// overrides the channel distance when given.
EnvironmentSpec build_environment(const EnvironmentConfig& env, std::optional<double> distance_m = std::nullopt);

struct ExecutionResult {
    int exit_code = 0;
    std::vector<std::string> artifacts;
};

/// Runs the command and writes its CSV files plus manifest.json into
/// output_dir (created when missing).
ExecutionResult execute(const RunConfig& config);

/// Reference of every config key with units, for --help.
std::string config_reference();

}  // namespace beamsel
