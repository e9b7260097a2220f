#pragma once

#include <optional>
#include <string>
#include <vector>

namespace homog {

struct ConfigIssue {
    int line = 0;  // 0: not tied to a file line (flag or cross-field check)
    std::string message;
};

/// Fully merged run configuration for every subcommand. Parsed from a
/// key-value config file ([geometry]/[physics]/[discretization]/[run]
/// sections) with command-line overrides applied on top.
struct RunConfig {
    std::string subcommand;

    // [geometry]
    std::string radius_kind = "constant";  // constant | linear | bump
    double r0 = 0.25;
    double radius_slope = 0.05;
    double radius_amp = 0.05;
    double radius_sigma = 0.2;
    double r_min = 0.0;  // 0: derive from the radius function by sampling
    double r_max = 0.0;

    // [physics]
    double d_h = 1.0;
    double d_l = 1.0;
    std::string velocity = "none";  // none | stream
    double velocity_amp = 1.0;
    std::string boundary = "decay";  // constant | decay | ramp
    double boundary_c = 1.0;
    double boundary_rate = 1.0;
    double boundary_slope = 0.0;
    std::string initial = "sine";  // constant | sine
    double initial_c = 1.0;
    double initial_amp = 0.5;

    // [discretization]
    double epsilon = 1.0 / 8.0;
    double h = 0.0;  // 0: eps / h_ratio
    int h_ratio = 32;
    double dt = 0.0;  // 0: equal to h
    double macro_h = 1.0 / 64.0;
    int radial_m = 24;
    int cell_n = 128;

    // [run]
    std::vector<double> eps_list{1.0 / 8, 1.0 / 16, 1.0 / 32};
    std::vector<double> radii;  // cell-table samples
    double horizon = 0.25;
    std::string out_dir = ".";
    unsigned seed = 1234;
    bool strict = false;
    int sample_every = 10;

    /// Canonical text form; identical configs serialize identically.
    std::string canonical() const;
    /// FNV-1a hash of the canonical form, as fixed-width hex.
    std::string hash() const;
    /// Standard header comment carried by every output file.
    std::string header_comment() const;
};

struct ParseResult {
    RunConfig config;
    std::vector<ConfigIssue> errors;
    std::vector<ConfigIssue> warnings;
    bool ok() const { return errors.empty(); }
};

/// Parses the config file (empty path: defaults only) and, when `validate`
/// is set, checks all fields, reporting every violation rather than
/// stopping at the first.
ParseResult parse_config(const std::string& path, const RunConfig& defaults = {},
                         bool validate = true);

/// Applies one "section.key=value" override (CLI flags funnel through
/// here); unknown keys or malformed values are reported.
void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value,
                    std::vector<ConfigIssue>& errors, int line = 0);

/// Cross-field validation shared by file parsing and flag-only runs.
void validate_config(const RunConfig& cfg, std::vector<ConfigIssue>& errors,
                     std::vector<ConfigIssue>& warnings);

}  // namespace homog
