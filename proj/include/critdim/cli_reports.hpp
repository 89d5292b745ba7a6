#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "critdim/cf_engine.hpp"
#include "critdim/map_core.hpp"
#include "critdim/partition.hpp"

namespace critdim {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

/// Exit codes shared by every command.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSoftFlag = 2;

/// How the target rotation number is given: an explicit quotient list or a
/// generator from cf_engine.
struct TargetSpec {
    std::string kind = "list";  // list, golden, periodic, prescribed_growth, random_bounded
    std::vector<Integer> quotients;  // list, or the word for periodic
    double tau = 1.0;
    std::uint64_t max_a = 2;
    std::uint64_t seed = 0;
};

struct MapConfig {
    std::string family = "arnold_cubic";
    std::optional<std::string> omega;  // decimal string
    std::optional<TargetSpec> target;
    int m = 1;
    std::string a1 = "0";
    std::string a2 = "0";
    std::optional<std::string> u_star;
    unsigned precision_bits = kDefaultPrecisionBits;
};

struct AnalysisConfig {
    int depth = 8;
    std::vector<double> gamma{0.5};
    /// Defaults to the growth exponent of a prescribed_growth target, else 0.
    std::optional<double> tau;
    std::size_t samples = 200;
    std::uint64_t seed = 0;
    std::optional<int> level;
    std::vector<int> levels;
    double eps = 0.05;
    std::optional<double> d;
};

struct RunConfig {
    MapConfig map;
    AnalysisConfig analysis;
    std::string out;
    std::string format = "json";
};

/// Reads {"map": {...}, "analysis": {...}, "output": {...}}; missing fields keep
/// their defaults. Throws InvalidInputError on malformed input.
RunConfig parse_config(const Json& document);
RunConfig load_config(const std::string& path);
/// Throws InvalidInputError unless exactly one of omega / target is set,
/// depth >= 3, every gamma is in (0, 1) and precision_bits >= 128.
void validate_config(const RunConfig& config);
Json config_to_json(const RunConfig& config);

/// Quotient list for the target, padded with ones to depth + 4 so the tuner
/// can look past the requested depth. Short explicit lists get the same tail.
std::vector<Integer> target_quotients(const TargetSpec& target, std::size_t depth);
std::vector<Integer> parse_quotient_list(const std::string& text);
/// "5..12" or "4,5,7".
std::vector<int> parse_levels(const std::string& text);

MapSpec map_from_config(const MapConfig& config, const Real& omega);
Json map_to_json(const MapSpec& spec);

/// Renders a Real with the significant digits its precision supports.
std::string decimal(const Real& x, unsigned bits);
/// Shortest round-trip decimal rendering of a double.
std::string decimal(double x);

Json cf_to_json(const ContinuedFraction& cf, std::size_t max_entries = 64);
Json profile_to_json(const DiophantineProfile& profile);

/// Wraps a payload with schema_version, command and precision metadata.
Json envelope(const std::string& command, unsigned precision_bits, Json payload);
Json error_json(const std::string& command, const std::exception& error);
/// Deterministic serialization: fixed field order, two-space indent, trailing newline.
std::string emit(const Json& report);

std::string atoms_csv(const DynamicalPartition& partition);

struct CommandResult {
    int exit_code = kExitPass;
    std::string body;
    std::string format = "json";
};

/// Runs one subcommand end to end. Module errors become an error report with
/// exit code 1; nothing escapes as an exception.
CommandResult run_command(const std::string& command, const RunConfig& config);

/// The subcommand names accepted by run_command.
const std::vector<std::string>& command_names();

}  // namespace critdim
