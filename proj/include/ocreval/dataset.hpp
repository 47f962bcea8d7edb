#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocreval/common.hpp"

namespace ocreval::dataset {

struct Sample {
  std::string id;
  std::string image;  // local path (relative to the manifest) or URI
  std::string ground_truth;
  Scenario scenario = Scenario::scene;
  Language language = Language::en;
  Granularity granularity = Granularity::line;
  std::string source;

  bool operator==(const Sample&) const = default;
};

struct Manifest {
  std::string name;
  std::string version;
  std::vector<Sample> samples;
  std::map<Scenario, std::string> prompt_overrides;
  // Directory relative image paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  bool operator==(const Manifest& other) const {
    return name == other.name && version == other.version && samples == other.samples &&
           prompt_overrides == other.prompt_overrides;
  }
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based; 0 for file-level problems
  std::string message;
};

// Every problem found in a manifest, in line order.
class ManifestError : public Error {
 public:
  explicit ManifestError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Version recorded for manifests without a header record.
inline constexpr const char* kUnversioned = "unversioned";

struct LoadOptions {
  bool check_images = true;
};

// The header record is optional; without one the name falls back to the file
// stem (load_manifest) or stays empty (parse_manifest).
Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
Manifest parse_manifest(std::string_view content, const std::filesystem::path& base_dir,
                        const LoadOptions& options = {});

std::string serialize(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

enum class Axis { scenario, language, granularity, source };

std::string_view to_string(Axis axis);
std::optional<Axis> parse_axis(std::string_view s);
// Comma-separated axis list; throws ConfigError on unknown names.
std::vector<Axis> parse_axes(std::string_view csv);

using GroupKey = std::vector<std::string>;

std::string axis_value(const Sample& sample, Axis axis);
GroupKey group_key(const Sample& sample, const std::vector<Axis>& axes);
// "en/line"; "all" for the empty key.
std::string group_label(const GroupKey& key);

std::map<GroupKey, std::vector<Sample>> stratify(const std::vector<Sample>& samples,
                                                 const std::vector<Axis>& axes);

std::string default_prompt(Scenario scenario);
std::string prompt_for(const Manifest& manifest, Scenario scenario);

bool is_uri(std::string_view image);
bool is_valid_uri(std::string_view image);
std::filesystem::path resolve_image(const Manifest& manifest, const Sample& sample);

}  // namespace ocreval::dataset
