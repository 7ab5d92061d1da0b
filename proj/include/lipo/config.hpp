#pragma once

#include <stdexcept>
#include <string>

#include "lipo/pipeline.hpp"

namespace lipo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration, one entry per line, '#' comments.
/// Every pipeline default is overridable; unknown keys are errors.
/// Angles are given in degrees.
PipelineConfig parse_config_text(const std::string& text, const std::string& source_name);

PipelineConfig parse_config_file(const std::string& path);

/// All recognized keys with their current values, in config file syntax.
std::string config_to_text(const PipelineConfig& cfg);

}  // namespace lipo
