#pragma once

#include <json.hpp>

#include <filesystem>

#include "lumen/experiments.hpp"

namespace lumen {

// Everything a run needs, as read from a config file. Unset file sections
// fall back to the built-in defaults (the benchmark preset).
struct RunConfig {
  bench::BenchmarkSpec benchmark;

  // Component checks re-thrown with section-qualified field paths
  // ("agent.alpha", "lumen.ranges.diameter", ...).
  void validate() const;
};

RunConfig default_config();

nlohmann::json to_json(const RunConfig& config);

// Merges the given object over the defaults. Unknown keys, wrong types and
// malformed intervals raise ValidationError naming the full field path.
RunConfig config_from_json(const nlohmann::json& j);

// load_json_file + config_from_json + validate.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace lumen
