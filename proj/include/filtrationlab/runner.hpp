#pragma once

#include "filtrationlab/bsde.hpp"
#include "filtrationlab/scenarios.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace filtrationlab {

inline constexpr int kSchemaVersion = 1;

/// Malformed scenario file. The message carries the line and the field path.
class SchemaError : public Error {
public:
    using Error::Error;
};

struct BsdeParams {
    DriverParams driver{0.05, 0.1, 0.0, 1.0};
    double recovery = 0.6;
    double recovery_slope = 0.0;
};

struct ScenarioEntry {
    std::string id;
    ScenarioDescriptor descriptor;
    /// Taken from the file when present, otherwise from the generator.
    std::optional<ExpectedVerdict> expected;
    std::optional<BsdeParams> bsde;
};

std::vector<ScenarioEntry> parse_scenarios(const std::string& text);
std::vector<ScenarioEntry> load_scenarios(const std::string& path);
std::string dump_scenarios(const std::vector<ScenarioEntry>& entries);

enum class Suite { azema, invariance, bsde, all };
Suite suite_from_string(const std::string& name);

struct RunConfig {
    std::string scenarios;
    Suite suite = Suite::all;
    double tol = 1e-9;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string format = "csv";
    int jobs = 1;
};

struct ScenarioOutcome {
    std::string id;
    bool matched = true;
    std::vector<std::string> mismatches;
    std::string verdict = "-";
    std::string expected = "-";
    double max_residual = 0.0;
    double wall_ms = 0.0;
    std::string report;     ///< JSON text, deterministic
    std::string bsde_csv;   ///< empty unless the bsde suite ran
    bool generation_error = false;
};

/// Runs the requested suites on one scenario. Never throws: failures land in mismatches.
ScenarioOutcome run_scenario(const ScenarioEntry& entry, Suite suite, double tol, std::uint64_t seed);

/// 0 when every verdict matched and every residual is within tol, 1 otherwise, 2 on I/O or schema errors.
int run(const RunConfig& config, std::ostream& log);

} // namespace filtrationlab
