#include "ocreval/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ocreval::config {

using json = nlohmann::ordered_json;

namespace {

constexpr Scenario kScenarios[] = {Scenario::document, Scenario::scene, Scenario::handwritten};

// Reads typed fields out of one JSON object, rejecting unknown keys.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key \"" + path(key) + "\"");
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot read ") + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void read_adapter(const json& j, adapters::AdapterConfig& a, const std::string& where) {
  Reader r(j, where);
  std::string kind = std::string(adapters::to_string(a.kind));
  r.get("kind", kind);
  auto parsed = adapters::parse_adapter_kind(kind);
  if (!parsed) throw ConfigError(r.path("kind") + " has invalid value \"" + kind + "\"");
  a.kind = *parsed;
  r.get("endpoint", a.endpoint);
  r.get("model_name", a.model_name);
  r.get("auth_env", a.auth_env);
  r.get("request_template", a.request_template);
  r.get("response_path", a.response_path);
  r.get("command_line", a.command_line);
  r.get("replay_path", a.replay_path);
  r.get("prompt", a.prompt);
  r.get("max_parallel", a.max_parallel);
  r.get("timeout_s", a.timeout_s);
  r.get("max_retries", a.max_retries);
  r.get("backoff_ms", a.backoff_ms);
  r.get("temperature", a.temperature);
  r.get("headers", a.headers);
  r.get("content_type", a.content_type);
  if (const json* extra = r.child("extra_body")) {
    if (!extra->is_object()) throw ConfigError(r.path("extra_body") + " must be an object");
    a.extra_body = extra->empty() ? "" : extra->dump();
  }
  r.finish();
}

json adapter_json(const adapters::AdapterConfig& a) {
  json j;
  j["kind"] = std::string(adapters::to_string(a.kind));
  j["endpoint"] = a.endpoint;
  j["model_name"] = a.model_name;
  j["auth_env"] = a.auth_env;
  j["request_template"] = a.request_template;
  j["response_path"] = a.response_path;
  j["command_line"] = a.command_line;
  j["replay_path"] = a.replay_path;
  j["prompt"] = a.prompt;
  j["max_parallel"] = a.max_parallel;
  j["timeout_s"] = a.timeout_s;
  j["max_retries"] = a.max_retries;
  j["backoff_ms"] = a.backoff_ms;
  j["temperature"] = a.temperature;
  j["headers"] = a.headers;
  j["extra_body"] = a.extra_body.empty() ? json::object() : json::parse(a.extra_body);
  j["content_type"] = a.content_type;
  return j;
}

json norm_json(const std::map<Scenario, textnorm::NormOptions>& norm) {
  json j = json::object();
  for (auto s : kScenarios) {
    const auto& o = norm.at(s);
    j[std::string(to_string(s))] = {{"lowercase", o.lowercase}, {"strip_markup", o.strip_markup}};
  }
  return j;
}

json bleu_json(const metrics::BleuParams& b) {
  return {{"max_n", b.max_n}, {"weights", b.weights}, {"epsilon", b.epsilon}};
}

json meteor_json(const metrics::MeteorParams& m) {
  return {{"alpha", m.alpha}, {"beta", m.beta}, {"gamma", m.gamma}, {"stem", std::string(metrics::to_string(m.stem))}};
}

}  // namespace

RunConfig::RunConfig() {
  for (auto s : kScenarios) norm[s] = textnorm::NormOptions{false, s == Scenario::document};
}

void RunConfig::validate() const {
  if (adapter.max_parallel < 1) throw ConfigError("adapter.max_parallel must be at least 1");
  bleu.validate();
  meteor.validate();
  for (auto s : kScenarios) {
    if (!norm.contains(s)) throw ConfigError("norm is missing scenario " + std::string(to_string(s)));
  }
}

RunConfig parse_config(std::string_view text) {
  const json doc = parse_json(text, "run config");
  RunConfig c;
  Reader r(doc, "");
  r.get("manifest", c.manifest_path);
  r.get("predictions", c.predictions_path);
  r.get("output_dir", c.output_dir);
  if (const json* seed = r.child("seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
      throw ConfigError("seed must be a non-negative integer");
    }
    c.seed = seed->get<std::uint64_t>();
  }
  if (const json* a = r.child("adapter")) read_adapter(*a, c.adapter, "adapter");

  if (const json* n = r.child("norm")) {
    Reader nr(*n, "norm");
    for (auto s : kScenarios) {
      const std::string name(to_string(s));
      if (const json* o = nr.child(name.c_str())) {
        Reader orr(*o, "norm." + name);
        orr.get("lowercase", c.norm[s].lowercase);
        orr.get("strip_markup", c.norm[s].strip_markup);
        orr.finish();
      }
    }
    nr.finish();
  }

  if (const json* b = r.child("bleu")) {
    Reader br(*b, "bleu");
    const bool has_weights = b->contains("weights");
    br.get("max_n", c.bleu.max_n);
    br.get("epsilon", c.bleu.epsilon);
    br.get("weights", c.bleu.weights);
    br.finish();
    if (!has_weights && c.bleu.max_n >= 1) c.bleu = metrics::BleuParams::uniform(c.bleu.max_n, c.bleu.epsilon);
  }

  if (const json* m = r.child("meteor")) {
    Reader mr(*m, "meteor");
    mr.get("alpha", c.meteor.alpha);
    mr.get("beta", c.meteor.beta);
    mr.get("gamma", c.meteor.gamma);
    std::string stem(metrics::to_string(c.meteor.stem));
    mr.get("stem", stem);
    if (stem == "auto") c.meteor.stem = metrics::StemStage::automatic;
    else if (stem == "on") c.meteor.stem = metrics::StemStage::on;
    else if (stem == "off") c.meteor.stem = metrics::StemStage::off;
    else throw ConfigError("meteor.stem must be \"auto\", \"on\" or \"off\"");
    mr.finish();
  }

  if (const json* s = r.child("stratify")) {
    if (!s->is_array()) throw ConfigError("stratify must be an array of axis names");
    c.stratify.clear();
    for (const auto& item : *s) {
      if (!item.is_string()) throw ConfigError("stratify entries must be strings");
      auto axis = dataset::parse_axis(item.get<std::string>());
      if (!axis) throw ConfigError("unknown stratify axis \"" + item.get<std::string>() + "\"");
      if (std::find(c.stratify.begin(), c.stratify.end(), *axis) != c.stratify.end()) {
        throw ConfigError("duplicate stratify axis \"" + item.get<std::string>() + "\"");
      }
      c.stratify.push_back(*axis);
    }
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path, "run config")); }

std::string serialize_config(const RunConfig& c) {
  json j;
  j["manifest"] = c.manifest_path;
  j["predictions"] = c.predictions_path;
  j["adapter"] = adapter_json(c.adapter);
  j["norm"] = norm_json(c.norm);
  j["bleu"] = bleu_json(c.bleu);
  j["meteor"] = meteor_json(c.meteor);
  json axes = json::array();
  for (auto a : c.stratify) axes.push_back(std::string(dataset::to_string(a)));
  j["stratify"] = axes;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

adapters::AdapterConfig parse_adapter_config(std::string_view text) {
  adapters::AdapterConfig a;
  read_adapter(parse_json(text, "adapter config"), a, "adapter");
  return a;
}

adapters::AdapterConfig load_adapter_config(const std::filesystem::path& path) {
  return parse_adapter_config(read_text(path, "adapter config"));
}

metrics::ScoringOptions scoring_options(const RunConfig& c, Scenario scenario, Language language) {
  metrics::ScoringOptions o;
  o.norm = c.norm.at(scenario);
  o.bleu = c.bleu;
  o.meteor = c.meteor;
  o.language = language;
  return o;
}

std::string scoring_stamp(const RunConfig& c) {
  json j;
  j["normalization"] = norm_json(c.norm);
  j["tokenizer"] = "cjk-character+latin-word";
  j["edit_distance"] = {{"unit", "grapheme"}, {"denominator", "max_length"}};
  j["bleu"] = bleu_json(c.bleu);
  j["meteor"] = meteor_json(c.meteor);
  j["aggregation"] = "macro";
  j["failure_policy"] = "worst_case";
  return j.dump();
}

std::string run_stamp(const RunConfig& c, const dataset::Manifest& manifest) {
  json j;
  j["manifest"] = {{"name", manifest.name}, {"version", manifest.version}, {"samples", manifest.samples.size()}};
  j["adapter"] = adapter_json(c.adapter);
  j["seed"] = c.seed;
  return j.dump();
}

}  // namespace ocreval::config
