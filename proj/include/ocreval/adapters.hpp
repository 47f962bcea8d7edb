#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocreval/dataset.hpp"

namespace ocreval::adapters {

struct Prediction {
  std::string sample_id;
  std::string model_id;
  std::string output;
  double latency_ms = 0.0;
  int attempt = 1;
  std::string adapter;
  std::optional<std::string> error;

  bool operator==(const Prediction&) const = default;
};

enum class AdapterKind { replay, vision_chat, rest_ocr, command };

std::string_view to_string(AdapterKind k);
std::optional<AdapterKind> parse_adapter_kind(std::string_view s);

struct AdapterConfig {
  AdapterKind kind = AdapterKind::replay;
  std::string endpoint;
  std::string model_name;
  std::string auth_env;          // name of the variable holding the credential
  std::string request_template;  // rest_ocr; empty posts the raw image bytes
  std::string response_path;     // rest_ocr; e.g. "result.pages[].text"
  std::string command_line;      // command; "{image}" is replaced per sample
  std::string replay_path;       // replay; a predictions file
  std::string prompt;            // overrides the per-scenario prompt when set
  int max_parallel = 1;
  double timeout_s = 60.0;
  int max_retries = 2;
  double backoff_ms = 500.0;  // first retry delay, doubled each retry
  double temperature = 0.0;   // vision_chat
  // Extra HTTP headers; "{auth}" in a value is replaced by the credential.
  std::map<std::string, std::string> headers;
  // JSON object merged into the vision_chat request body.
  std::string extra_body;
  std::string content_type;  // rest_ocr; defaults by body kind

  bool operator==(const AdapterConfig&) const = default;

  // Kind-specific required fields and ranges; throws ConfigError.
  void validate() const;
  std::string model_id() const;
};

// Resolves auth_env; throws ConfigError when the variable is unset or empty.
std::string resolve_credential(const AdapterConfig& config);

using CompletionCallback = std::function<void(std::size_t index, const Prediction&)>;

// One Prediction per sample, in manifest order. Configuration problems
// throw ConfigError before any request is sent; per-sample failures are
// retried and then recorded in Prediction::error. on_complete, when set, is
// called from worker threads as each sample finishes.
std::vector<Prediction> run_adapter(const dataset::Manifest& manifest, const AdapterConfig& config,
                                    const CompletionCallback& on_complete = {});

struct ReplayEntry {
  std::string output;
  std::optional<std::string> error;
  std::string model_id;
};

// sample_id -> output from a predictions file. Throws Error with a line
// number on malformed records and on duplicate ids.
std::map<std::string, ReplayEntry> replay_load(const std::filesystem::path& path);

struct PredictionsFile {
  std::string run_stamp;  // compact JSON of the run header; empty if absent
  std::vector<Prediction> predictions;
};

std::string serialize_predictions(const std::vector<Prediction>& predictions, const std::string& run_stamp);
PredictionsFile parse_predictions(std::string_view content);
PredictionsFile read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                       const std::string& run_stamp);

// Helpers exposed for testing.
std::string base64_encode(std::string_view bytes);
std::string mime_type_for(const std::filesystem::path& path);
// Dotted path with [n] indexing and [] fan-out (joined with newlines).
std::string extract_response(std::string_view body, std::string_view path);

}  // namespace ocreval::adapters
