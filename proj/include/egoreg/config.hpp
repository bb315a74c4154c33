#pragma once

#include "egoreg/controller.hpp"
#include "egoreg/simulator.hpp"

#include <string>

namespace egoreg {

/// Everything a run file can set. Missing keys keep these defaults.
struct RunConfig {
    Scenario scenario;
    ControllerSettings controllers;
    ConvergenceWindow window;
};

/// Defaults for a named scenario kind before any file overrides.
RunConfig default_config(ScenarioKind kind = ScenarioKind::Case1);

/// Parses YAML text. Unknown keys, wrong types and out-of-range values throw
/// ConfigError with "source:line: key: reason".
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a file; unreadable files throw ConfigError.
RunConfig load_config(const std::string& path);

/// Canonical YAML with every key spelled out; doubles keep 17 digits, so
/// parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& cfg);

}  // namespace egoreg
