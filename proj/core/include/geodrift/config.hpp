#pragma once

// Flat key = value configuration files for the pipeline and the simulator.
// Lines are "key = value"; '#' starts a comment; blank lines are ignored.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "geodrift/pipeline.hpp"
#include "geodrift/sim.hpp"

namespace geodrift {

struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
  std::size_t column = 0;  // of the value
};

struct KeyValueFile {
  std::string source;
  std::map<std::string, ConfigEntry> entries;
};

// Throws ParseError on a malformed line or a duplicate key.
KeyValueFile parse_key_values(std::string_view text, const std::string& source);
KeyValueFile read_key_values(const std::filesystem::path& path);

// One documented, typed setting of a config struct.
template <class Config>
struct ConfigKey {
  std::string name;
  std::string description;
  std::function<std::string(const Config&)> get;
  // Throws std::invalid_argument on a malformed value.
  std::function<void(Config&, const std::string&)> set;
};

const std::vector<ConfigKey<PipelineConfig>>& pipeline_config_keys();
const std::vector<ConfigKey<ScenarioSpec>>& scenario_config_keys();

// Applies every entry; throws ParseError naming the line for an unknown key
// or a malformed value, and DataError when the result fails validation.
PipelineConfig pipeline_config_from(const KeyValueFile& file,
                                    PipelineConfig base = PipelineConfig{});
ScenarioSpec scenario_spec_from(const KeyValueFile& file, ScenarioSpec base = ScenarioSpec{});

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);

// Every key with its current value; parses back to the same config.
std::string to_config_text(const PipelineConfig& config);
std::string to_config_text(const ScenarioSpec& spec);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace geodrift
