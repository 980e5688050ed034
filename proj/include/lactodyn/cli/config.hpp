#pragma once

// Flat `key = value` configuration files.
//
//   # comment
//   scenario = dip                 # start from a canonical scenario
//   model = 2d
//   params.C = 1.0
//   signal.F.kind = trapezoid      # constant | trapezoid | dip | file
//   signal.F.base = 0.5
//   signal.J.coupling = -0.5
//   integrator.rel_tol = 1e-10
//   run.horizon = 5000
//   detect.dip_fraction = 0.01
//   shooting.max_iterations = 50
//
// Signal names are F, J (2D control) and J0, J1, J2 (4D controls). Keys
// after `scenario` override its defaults; `signal.<S>.kind` is applied
// before the other keys of that signal regardless of order.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lactodyn/scenarios.hpp"

namespace lactodyn::cli {

struct LoadedConfig {
    ScenarioConfig config;
    /// Files read while loading (the config itself and signal files).
    std::vector<std::filesystem::path> inputs;
};

/// Relative signal file paths are resolved against `base_dir`. Throws
/// ParseError carrying the offending line number.
LoadedConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");

/// Either a config file path, or a bare scenario name resolved as
/// `$LACTODYN_SEED_DIR/<name>.cfg` when that file exists, else the built-in
/// default of that name.
LoadedConfig load_config(const std::string& path_or_name);

/// Every field written out, so parse_config(serialize_config(c)).config == c.
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace lactodyn::cli
