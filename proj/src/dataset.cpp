#include "ocreval/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace ocreval::dataset {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::ostringstream os;
  for (std::size_t i = 0; i < diagnostics.size(); ++i) {
    if (i) os << '\n';
    if (diagnostics[i].line > 0) os << "line " << diagnostics[i].line << ": ";
    os << diagnostics[i].message;
  }
  return os.str();
}

const std::set<std::string>& sample_fields() {
  static const std::set<std::string> f = {"record", "id", "image", "ground_truth", "scenario",
                                          "language", "granularity", "source"};
  return f;
}

const std::set<std::string>& header_fields() {
  static const std::set<std::string> f = {"record", "name", "version", "prompt_overrides"};
  return f;
}

struct LineParser {
  std::size_t line;
  std::vector<Diagnostic>& out;

  void error(std::string message) { out.push_back({line, std::move(message)}); }

  std::optional<std::string> string_field(const json& record, const char* field, bool required,
                                          bool allow_empty) {
    auto it = record.find(field);
    if (it == record.end()) {
      if (required) error(std::string("missing field \"") + field + "\"");
      return std::nullopt;
    }
    if (!it->is_string()) {
      error(std::string("field \"") + field + "\" must be a string");
      return std::nullopt;
    }
    auto value = it->get<std::string>();
    if (!allow_empty && value.empty()) {
      error(std::string("field \"") + field + "\" must not be empty");
      return std::nullopt;
    }
    return value;
  }

  template <typename Enum, typename Parse>
  std::optional<Enum> enum_field(const json& record, const char* field, Parse parse,
                                 std::string_view allowed) {
    auto raw = string_field(record, field, true, false);
    if (!raw) return std::nullopt;
    auto value = parse(*raw);
    if (!value) {
      error(std::string("field \"") + field + "\" has invalid value \"" + *raw + "\" (expected one of " +
            std::string(allowed) + ")");
    }
    return value;
  }
};

}  // namespace

ManifestError::ManifestError(std::vector<Diagnostic> diagnostics)
    : Error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

bool is_uri(std::string_view image) {
  auto colon = image.find(':');
  if (colon == std::string_view::npos || colon < 2) return false;  // "C:" style paths are not URIs
  auto scheme = image.substr(0, colon);
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  if (!alpha(scheme.front())) return false;
  return std::all_of(scheme.begin(), scheme.end(), [&](char c) {
    return alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
  });
}

bool is_valid_uri(std::string_view image) {
  if (!is_uri(image)) return false;
  auto colon = image.find(':');
  auto rest = image.substr(colon + 1);
  if (rest.empty()) return false;
  if (std::any_of(image.begin(), image.end(), [](unsigned char c) { return c <= 0x20 || c == 0x7f; })) {
    return false;
  }
  std::string scheme(image.substr(0, colon));
  std::transform(scheme.begin(), scheme.end(), scheme.begin(), [](unsigned char c) { return std::tolower(c); });
  if (scheme == "http" || scheme == "https") {
    return rest.size() > 2 && rest.starts_with("//") && rest[2] != '/';
  }
  return true;
}

fs::path resolve_image(const Manifest& manifest, const Sample& sample) {
  fs::path p(sample.image);
  if (p.is_absolute()) return p;
  return manifest.base_dir / p;
}

Manifest parse_manifest(std::string_view content, const fs::path& base_dir, const LoadOptions& options) {
  Manifest manifest;
  manifest.base_dir = base_dir;
  std::vector<Diagnostic> diagnostics;
  std::unordered_map<std::string, std::vector<std::size_t>> id_lines;
  bool have_header = false;
  bool seen_sample = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    LineParser p{line_no, diagnostics};
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      p.error(std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!record.is_object()) {
      p.error("record must be a JSON object");
      continue;
    }

    std::string kind = "sample";
    if (auto it = record.find("record"); it != record.end()) {
      if (!it->is_string() || (*it != "manifest" && *it != "sample")) {
        p.error("field \"record\" must be \"manifest\" or \"sample\"");
        continue;
      }
      kind = it->get<std::string>();
    }

    if (kind == "manifest") {
      if (have_header) {
        p.error("duplicate manifest header record");
        continue;
      }
      if (seen_sample) {
        p.error("manifest header must precede all samples");
      }
      have_header = true;
      for (const auto& [key, value] : record.items()) {
        if (!header_fields().contains(key)) p.error("unknown header field \"" + key + "\"");
      }
      if (auto name = p.string_field(record, "name", true, false)) manifest.name = *name;
      if (auto version = p.string_field(record, "version", true, false)) manifest.version = *version;
      if (auto it = record.find("prompt_overrides"); it != record.end()) {
        if (!it->is_object()) {
          p.error("field \"prompt_overrides\" must be an object");
        } else {
          for (const auto& [key, value] : it->items()) {
            auto scenario = parse_scenario(key);
            if (!scenario) {
              p.error("prompt_overrides has invalid scenario \"" + key + "\"");
            } else if (!value.is_string()) {
              p.error("prompt_overrides." + key + " must be a string");
            } else {
              manifest.prompt_overrides[*scenario] = value.get<std::string>();
            }
          }
        }
      }
      continue;
    }

    seen_sample = true;
    for (const auto& [key, value] : record.items()) {
      if (!sample_fields().contains(key)) p.error("unknown sample field \"" + key + "\"");
    }

    const std::size_t errors_before = diagnostics.size();
    Sample s;
    auto id = p.string_field(record, "id", true, false);
    auto image = p.string_field(record, "image", true, false);
    if (auto it = record.find("ground_truth"); it != record.end() && it->is_null()) {
      p.error("field \"ground_truth\" must not be null");
    }
    auto truth = p.string_field(record, "ground_truth", true, true);
    auto scenario = p.enum_field<Scenario>(record, "scenario", parse_scenario, "document, scene, handwritten");
    auto language = p.enum_field<Language>(record, "language", parse_language, "en, zh, mixed");
    auto granularity =
        p.enum_field<Granularity>(record, "granularity", parse_granularity, "line, paragraph, page");
    auto source = p.string_field(record, "source", false, true);

    if (scenario && granularity) {
      if (*scenario == Scenario::document && *granularity != Granularity::page) {
        p.error("document samples must have granularity \"page\"");
      }
      if (*scenario == Scenario::handwritten && *granularity == Granularity::page) {
        p.error("handwritten samples must have granularity \"line\" or \"paragraph\"");
      }
    }
    if (id) id_lines[*id].push_back(line_no);

    if (image && options.check_images) {
      if (is_uri(*image)) {
        if (!is_valid_uri(*image)) p.error("malformed image URI \"" + *image + "\"");
      } else {
        fs::path path = fs::path(*image).is_absolute() ? fs::path(*image) : base_dir / *image;
        std::error_code ec;
        if (!fs::is_regular_file(path, ec)) p.error("image not found: " + path.string());
      }
    }
    if (diagnostics.size() != errors_before) continue;

    s.id = *id;
    s.image = *image;
    s.ground_truth = *truth;
    s.scenario = *scenario;
    s.language = *language;
    s.granularity = *granularity;
    s.source = source.value_or("");
    manifest.samples.push_back(std::move(s));
  }

  if (!have_header) manifest.version = kUnversioned;

  for (const auto& [id, lines] : id_lines) {
    if (lines.size() < 2) continue;
    std::ostringstream os;
    os << "duplicate id \"" << id << "\" on lines ";
    for (std::size_t i = 0; i < lines.size(); ++i) os << (i ? ", " : "") << lines[i];
    diagnostics.push_back({lines.back(), os.str()});
  }
  if (diagnostics.empty() && manifest.samples.empty()) diagnostics.push_back({0, "manifest has no samples"});

  if (!diagnostics.empty()) {
    std::stable_sort(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    throw ManifestError(std::move(diagnostics));
  }
  return manifest;
}

Manifest load_manifest(const fs::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError({{0, "cannot read manifest " + path.string()}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto manifest = parse_manifest(buffer.str(), path.parent_path(), options);
  if (manifest.name.empty()) manifest.name = path.stem().string();
  return manifest;
}

std::string serialize(const Manifest& manifest) {
  std::string out;
  json header;
  header["record"] = "manifest";
  header["name"] = manifest.name;
  header["version"] = manifest.version;
  if (!manifest.prompt_overrides.empty()) {
    json overrides = json::object();
    for (const auto& [scenario, prompt] : manifest.prompt_overrides) {
      overrides[std::string(to_string(scenario))] = prompt;
    }
    header["prompt_overrides"] = overrides;
  }
  out += header.dump();
  out += '\n';
  for (const auto& s : manifest.samples) {
    json r;
    r["id"] = s.id;
    r["image"] = s.image;
    r["ground_truth"] = s.ground_truth;
    r["scenario"] = std::string(to_string(s.scenario));
    r["language"] = std::string(to_string(s.language));
    r["granularity"] = std::string(to_string(s.granularity));
    if (!s.source.empty()) r["source"] = s.source;
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << serialize(manifest);
  if (!out) throw Error("failed writing manifest " + path.string());
}

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::scenario: return "scenario";
    case Axis::language: return "language";
    case Axis::granularity: return "granularity";
    case Axis::source: return "source";
  }
  return "?";
}

std::optional<Axis> parse_axis(std::string_view s) {
  if (s == "scenario") return Axis::scenario;
  if (s == "language") return Axis::language;
  if (s == "granularity") return Axis::granularity;
  if (s == "source") return Axis::source;
  return std::nullopt;
}

std::vector<Axis> parse_axes(std::string_view csv) {
  std::vector<Axis> axes;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t end = csv.find(',', pos);
    if (end == std::string_view::npos) end = csv.size();
    auto name = csv.substr(pos, end - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      auto axis = parse_axis(name);
      if (!axis) throw ConfigError("unknown stratify axis \"" + std::string(name) + "\"");
      if (std::find(axes.begin(), axes.end(), *axis) == axes.end()) axes.push_back(*axis);
    }
    pos = end + 1;
  }
  return axes;
}

std::string axis_value(const Sample& sample, Axis axis) {
  switch (axis) {
    case Axis::scenario: return std::string(to_string(sample.scenario));
    case Axis::language: return std::string(to_string(sample.language));
    case Axis::granularity: return std::string(to_string(sample.granularity));
    case Axis::source: return sample.source;
  }
  return {};
}

GroupKey group_key(const Sample& sample, const std::vector<Axis>& axes) {
  GroupKey key;
  key.reserve(axes.size());
  for (Axis a : axes) key.push_back(axis_value(sample, a));
  return key;
}

std::string group_label(const GroupKey& key) {
  if (key.empty()) return "all";
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += '/';
    out += key[i];
  }
  return out;
}

std::map<GroupKey, std::vector<Sample>> stratify(const std::vector<Sample>& samples,
                                                 const std::vector<Axis>& axes) {
  std::map<GroupKey, std::vector<Sample>> groups;
  for (const auto& s : samples) groups[group_key(s, axes)].push_back(s);
  return groups;
}

std::string default_prompt(Scenario scenario) {
  switch (scenario) {
    case Scenario::scene: return "What is written in this image?";
    case Scenario::document:
    case Scenario::handwritten: return "Please extract all texts in this image.";
  }
  return {};
}

std::string prompt_for(const Manifest& manifest, Scenario scenario) {
  auto it = manifest.prompt_overrides.find(scenario);
  return it != manifest.prompt_overrides.end() ? it->second : default_prompt(scenario);
}

}  // namespace ocreval::dataset
