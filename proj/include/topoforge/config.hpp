#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topoforge/runner.hpp"

namespace topoforge {

/// Names accepted by `preset = ...`.
const std::vector<std::string>& preset_names();

/// Defaults of a named benchmark (control net, degrees, load, volume fraction). Throws Parse for an
/// unknown name.
RunConfig preset_config(const std::string& name);

/// Geometry, design domain, supports and load of the benchmark named by `config.preset`, built
/// with the configured control net.
Problem build_problem(const RunConfig& config);

/// Parses sectioned `key = value` text. The preset named in the text supplies the defaults; every
/// other key overrides one field. Unknown keys, bad values and a missing preset are parse errors
/// carrying the source name and line number.
RunConfig parse_config_text(std::string_view text, std::string_view source_name = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical text of every field; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Sets one field by its dotted name (`problem.max_holes`, `topology.mu0`, `preset`, ...).
void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value);

}  // namespace topoforge
