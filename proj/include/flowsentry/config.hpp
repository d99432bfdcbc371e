#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "flowsentry/pipeline.hpp"

namespace flowsentry {

// Full operator configuration: pipeline parameters plus file locations.
struct AppConfig {
    PipelineConfig pipeline;
    std::string journal = "flowsentry-journal.jsonl";
    std::string model;    // model file to load/save; empty = in-memory only
    std::string reports;  // report sink for watch; empty = stderr
    std::string rules;    // rule sink; empty = stdout
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// key = value lines, '#' comments. Keys mirror the PipelineConfig fields
// (durations in seconds): classify_window, fit_window, grace, epsilon,
// consecutive_m, block_ttl, refit_interval, listen, whitelist (comma
// separated addresses/prefixes), anomaly_grid (fit|classify),
// flow_count_mode (active|completed), min_fit_samples, fit_history, dialect,
// thresholds.* for the classifier knobs, and the journal/model/reports/rules
// paths. Unknown keys are errors. Throws ConfigError with the line number.
void apply_config(std::istream& in, AppConfig& config);

// Single "key value" assignment, used for flag overrides too.
void apply_config_entry(const std::string& key, const std::string& value, AppConfig& config);

// Cross-field checks; run after the last override is applied.
void validate_app_config(const AppConfig& config);

AppConfig load_config_file(const std::string& path);  // throws ConfigError

}  // namespace flowsentry
