#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ocreval/adapters.hpp"
#include "ocreval/dataset.hpp"
#include "ocreval/metrics.hpp"
#include "ocreval/textnorm.hpp"

namespace ocreval::config {

struct RunConfig {
  std::string manifest_path;
  std::string predictions_path;
  adapters::AdapterConfig adapter;
  // Every scenario has an entry; markup stripping defaults on for documents.
  std::map<Scenario, textnorm::NormOptions> norm;
  metrics::BleuParams bleu;
  metrics::MeteorParams meteor;
  std::vector<dataset::Axis> stratify = {dataset::Axis::scenario, dataset::Axis::language};
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  RunConfig();
  bool operator==(const RunConfig&) const = default;

  void validate() const;  // parameter ranges; throws ConfigError
};

// Strict JSON reader: unknown keys and wrong types are ConfigErrors. Missing
// keys keep their defaults.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

adapters::AdapterConfig parse_adapter_config(std::string_view json_text);
adapters::AdapterConfig load_adapter_config(const std::filesystem::path& path);

metrics::ScoringOptions scoring_options(const RunConfig& config, Scenario scenario, Language language);

// Compact JSON of everything that affects scores; identical stamps mean
// comparable reports.
std::string scoring_stamp(const RunConfig& config);

// Compact JSON describing a run for the predictions header.
std::string run_stamp(const RunConfig& config, const dataset::Manifest& manifest);

}  // namespace ocreval::config
