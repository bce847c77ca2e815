#pragma once

#include "collide/audit.hpp"
#include "collide/simulation.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace collide {

enum class Command { Simulate, Audit, Converge, Oracle };

std::string to_string(Command command);

/// Oracle subcommand selection and thresholds.
struct OracleSettings {
    /// any of "analytic", "brute_force", "truncation"; empty = all that apply
    std::vector<std::string> cases;
    double l1_tolerance = 2e-2;
    double m0_tolerance = 1e-2;
    double brute_force_tolerance = 1e-12;
    std::size_t random_states = 100;
    std::uint64_t seed = 7;
};

struct RunConfig {
    Command command = Command::Simulate;
    SimulationSetup setup;
    bool allow_noncompliant = false;
    std::filesystem::path output_dir = "out";
    AuditConfig audit;
    std::vector<double> converge_n_values;
    OracleSettings oracle;
    /// every key = value pair as written, for the run report
    std::map<std::string, std::string> entries;
};

/**
 * Parses the flat `dotted.key = value` format (one assignment per line,
 * `#` starts a comment) and validates it for the given command.
 *
 * Unset keys take documented defaults (grid.cells = 128, time.method = rk4,
 * grid.zmin = 1e-4 * grid.n, ...). All problems are collected and thrown
 * together as one ConfigError. Relative file paths inside the config are
 * resolved against base_dir.
 */
RunConfig parse_config_text(std::string_view text, Command command, const std::filesystem::path& base_dir = ".");

RunConfig parse_config(const std::filesystem::path& path, Command command);

/// Whitespace/comma separated two-column numeric table; `#` lines and a
/// non-numeric header row are skipped.
std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(const std::filesystem::path& path);

} // namespace collide
