#include "ocreval/adapters.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <openssl/evp.h>

#include "httplib.h"
#include "json.hpp"
#include "ocreval/process.hpp"

namespace ocreval::adapters {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(AdapterKind k) {
  switch (k) {
    case AdapterKind::replay: return "replay";
    case AdapterKind::vision_chat: return "vision_chat";
    case AdapterKind::rest_ocr: return "rest_ocr";
    case AdapterKind::command: return "command";
  }
  return "?";
}

std::optional<AdapterKind> parse_adapter_kind(std::string_view s) {
  if (s == "replay") return AdapterKind::replay;
  if (s == "vision_chat") return AdapterKind::vision_chat;
  if (s == "rest_ocr") return AdapterKind::rest_ocr;
  if (s == "command") return AdapterKind::command;
  return std::nullopt;
}

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

std::optional<Endpoint> split_endpoint(std::string_view url) {
  std::string_view scheme;
  if (url.starts_with("http://")) scheme = "http://";
  else if (url.starts_with("https://")) scheme = "https://";
  else return std::nullopt;
  auto rest = url.substr(scheme.size());
  auto slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  if (authority.empty() || authority.find_first_of(" \t@") != std::string_view::npos) return std::nullopt;
  Endpoint e;
  e.base = std::string(scheme) + std::string(authority);
  e.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  return e;
}

// A failed attempt. Non-retryable failures skip the remaining attempts.
struct RequestFailure {
  std::string message;
  bool retryable = true;
};

std::string json_escape_body(std::string_view s) {
  std::string quoted = json(std::string(s)).dump();
  return quoted.substr(1, quoted.size() - 2);
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RequestFailure{"cannot read image " + path.string(), false};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string snippet(std::string_view body) {
  std::string s(body.substr(0, 200));
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// Transport shared by the HTTP backends.
std::string post(const AdapterConfig& config, const Endpoint& endpoint, const httplib::Headers& headers,
                 const std::string& body, const std::string& content_type) {
  httplib::Client client(endpoint.base);
  const auto seconds = static_cast<time_t>(config.timeout_s);
  const auto micros = static_cast<time_t>((config.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  client.set_keep_alive(false);
  auto res = client.Post(endpoint.path, headers, body, content_type);
  if (!res) throw RequestFailure{"request failed: " + httplib::to_string(res.error()), true};
  if (res->status < 200 || res->status >= 300) {
    const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
    throw RequestFailure{"HTTP " + std::to_string(res->status) + ": " + snippet(res->body), retryable};
  }
  return res->body;
}

httplib::Headers make_headers(const AdapterConfig& config, const std::string& credential, bool default_bearer) {
  httplib::Headers headers;
  bool auth_used = false;
  for (const auto& [name, value] : config.headers) {
    std::string v = value;
    if (v.find("{auth}") != std::string::npos) {
      replace_all(v, "{auth}", credential);
      auth_used = true;
    }
    headers.emplace(name, v);
  }
  if (default_bearer && !credential.empty() && !auth_used && !headers.count("Authorization")) {
    headers.emplace("Authorization", "Bearer " + credential);
  }
  return headers;
}

using Backend = std::function<std::string(const dataset::Sample&, const std::string& prompt)>;

Backend vision_chat_backend(const dataset::Manifest& manifest, const AdapterConfig& config,
                            const std::string& credential) {
  const Endpoint endpoint = *split_endpoint(config.endpoint);
  const httplib::Headers headers = make_headers(config, credential, true);
  const json extra = config.extra_body.empty() ? json::object() : json::parse(config.extra_body);
  return [&manifest, &config, endpoint, headers, extra](const dataset::Sample& s, const std::string& prompt) {
    std::string image_url;
    if (dataset::is_uri(s.image)) {
      if (!(s.image.starts_with("http://") || s.image.starts_with("https://") || s.image.starts_with("data:"))) {
        throw RequestFailure{"unsupported image URI for vision_chat: " + s.image, false};
      }
      image_url = s.image;
    } else {
      const auto path = dataset::resolve_image(manifest, s);
      image_url = "data:" + mime_type_for(path) + ";base64," + base64_encode(read_file(path));
    }
    json body;
    body["model"] = config.model_name;
    body["messages"] = json::array({json{
        {"role", "user"},
        {"content", json::array({json{{"type", "text"}, {"text", prompt}},
                                 json{{"type", "image_url"}, {"image_url", json{{"url", image_url}}}}})}}});
    body["temperature"] = config.temperature;
    for (const auto& [k, v] : extra.items()) body[k] = v;

    const std::string response = post(config, endpoint, headers, body.dump(), "application/json");
    try {
      auto doc = json::parse(response);
      const auto& content = doc.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return content.get<std::string>();
      if (content.is_array()) {
        std::string out;
        for (const auto& part : content) {
          if (part.is_object() && part.value("type", "") == "text") out += part.value("text", "");
        }
        return out;
      }
      if (content.is_null()) return std::string();
      throw RequestFailure{"unexpected message content type", true};
    } catch (const json::exception& e) {
      throw RequestFailure{std::string("malformed chat response: ") + e.what() + " body: " + snippet(response), true};
    }
  };
}

Backend rest_ocr_backend(const dataset::Manifest& manifest, const AdapterConfig& config,
                         const std::string& credential) {
  const Endpoint endpoint = *split_endpoint(config.endpoint);
  const httplib::Headers headers = make_headers(config, credential, true);
  return [&manifest, &config, endpoint, headers](const dataset::Sample& s, const std::string& prompt) {
    if (dataset::is_uri(s.image)) throw RequestFailure{"rest_ocr needs a local image, got " + s.image, false};
    const auto path = dataset::resolve_image(manifest, s);
    std::string bytes = read_file(path);
    std::string body, content_type;
    if (config.request_template.empty()) {
      body = std::move(bytes);
      content_type = config.content_type.empty() ? "application/octet-stream" : config.content_type;
    } else {
      body = config.request_template;
      replace_all(body, "{image_base64}", base64_encode(bytes));
      replace_all(body, "{prompt}", json_escape_body(prompt));
      replace_all(body, "{sample_id}", json_escape_body(s.id));
      replace_all(body, "{model_name}", json_escape_body(config.model_name));
      content_type = config.content_type.empty() ? "application/json" : config.content_type;
    }
    const std::string response = post(config, endpoint, headers, body, content_type);
    try {
      return extract_response(response, config.response_path);
    } catch (const Error& e) {
      throw RequestFailure{e.what(), true};
    }
  };
}

Backend command_backend(const dataset::Manifest& manifest, const AdapterConfig& config) {
  const auto argv_template = process::split_command_line(config.command_line);
  return [&manifest, &config, argv_template](const dataset::Sample& s, const std::string& prompt) {
    const std::string image =
        dataset::is_uri(s.image) ? s.image : dataset::resolve_image(manifest, s).string();
    std::vector<std::string> argv = argv_template;
    for (auto& arg : argv) {
      replace_all(arg, "{image}", image);
      replace_all(arg, "{prompt}", prompt);
      replace_all(arg, "{sample_id}", s.id);
    }
    process::Result r;
    try {
      r = process::run(argv, config.timeout_s);
    } catch (const Error& e) {
      throw RequestFailure{e.what(), false};
    }
    if (r.timed_out) throw RequestFailure{"command timed out after " + format_roundtrip(config.timeout_s) + " s", true};
    if (r.signal != 0) throw RequestFailure{"command killed by signal " + std::to_string(r.signal), true};
    if (r.exit_code != 0) {
      std::string msg = "command exited with status " + std::to_string(r.exit_code);
      if (!r.err.empty()) msg += ": " + snippet(r.err);
      throw RequestFailure{msg, true};
    }
    return r.out;
  };
}

Prediction attempt_sample(const Backend& backend, const dataset::Sample& s, const std::string& prompt,
                          const AdapterConfig& config, const std::string& model_id) {
  Prediction p;
  p.sample_id = s.id;
  p.model_id = model_id;
  p.adapter = std::string(to_string(config.kind));
  std::string last_error;
  const int max_attempts = config.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    p.attempt = attempt;
    const auto start = std::chrono::steady_clock::now();
    bool retryable = true;
    try {
      p.output = backend(s, prompt);
      p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      p.error.reset();
      return p;
    } catch (const RequestFailure& f) {
      last_error = f.message;
      retryable = f.retryable;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
    p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!retryable) break;
    if (attempt < max_attempts && config.backoff_ms > 0) {
      const double delay = std::min(config.backoff_ms * std::ldexp(1.0, attempt - 1), 30000.0);
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }
  }
  p.output.clear();
  p.error = last_error.empty() ? std::string("request failed") : last_error;
  return p;
}

}  // namespace

void AdapterConfig::validate() const {
  if (max_parallel < 1) throw ConfigError("adapter.max_parallel must be at least 1");
  if (!(timeout_s > 0.0)) throw ConfigError("adapter.timeout_s must be positive");
  if (max_retries < 0) throw ConfigError("adapter.max_retries must not be negative");
  if (!(backoff_ms >= 0.0)) throw ConfigError("adapter.backoff_ms must not be negative");
  if (!(temperature >= 0.0)) throw ConfigError("adapter.temperature must not be negative");
  auto need_endpoint = [&] {
    if (endpoint.empty()) throw ConfigError(std::string(to_string(kind)) + " adapter requires adapter.endpoint");
    if (!split_endpoint(endpoint)) throw ConfigError("adapter.endpoint must be an http(s) URL: " + endpoint);
  };
  switch (kind) {
    case AdapterKind::replay:
      if (replay_path.empty()) throw ConfigError("replay adapter requires adapter.replay_path");
      break;
    case AdapterKind::vision_chat:
      need_endpoint();
      if (model_name.empty()) throw ConfigError("vision_chat adapter requires adapter.model_name");
      break;
    case AdapterKind::rest_ocr:
      need_endpoint();
      break;
    case AdapterKind::command:
      if (command_line.empty()) throw ConfigError("command adapter requires adapter.command_line");
      if (process::split_command_line(command_line).empty()) throw ConfigError("adapter.command_line is empty");
      break;
  }
  if (!extra_body.empty()) {
    json parsed;
    try {
      parsed = json::parse(extra_body);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("adapter.extra_body is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object()) throw ConfigError("adapter.extra_body must be a JSON object");
  }
  for (const auto& [name, value] : headers) {
    if (value.find("{auth}") != std::string::npos && auth_env.empty()) {
      throw ConfigError("header \"" + name + "\" uses {auth} but adapter.auth_env is not set");
    }
  }
}

std::string AdapterConfig::model_id() const {
  if (!model_name.empty()) return model_name;
  if (kind == AdapterKind::command) {
    auto argv = process::split_command_line(command_line);
    if (!argv.empty()) return fs::path(argv[0]).filename().string();
  }
  return std::string(to_string(kind));
}

std::string resolve_credential(const AdapterConfig& config) {
  if (config.auth_env.empty()) return {};
  const char* value = std::getenv(config.auth_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("credential variable " + config.auth_env + " is not set");
  }
  return value;
}

std::vector<Prediction> run_adapter(const dataset::Manifest& manifest, const AdapterConfig& config,
                                    const CompletionCallback& on_complete) {
  config.validate();
  const std::size_t n = manifest.samples.size();
  std::vector<Prediction> results(n);

  if (config.kind == AdapterKind::replay) {
    const auto entries = replay_load(config.replay_path);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = manifest.samples[i];
      Prediction& p = results[i];
      p.sample_id = s.id;
      p.adapter = "replay";
      p.model_id = config.model_id();
      auto it = entries.find(s.id);
      if (it == entries.end()) {
        p.error = "missing replay output";
      } else {
        if (config.model_name.empty() && !it->second.model_id.empty()) p.model_id = it->second.model_id;
        p.output = it->second.output;
        p.error = it->second.error;
      }
      if (on_complete) on_complete(i, p);
    }
    return results;
  }

  const std::string credential = resolve_credential(config);
  Backend backend;
  switch (config.kind) {
    case AdapterKind::vision_chat: backend = vision_chat_backend(manifest, config, credential); break;
    case AdapterKind::rest_ocr: backend = rest_ocr_backend(manifest, config, credential); break;
    case AdapterKind::command: backend = command_backend(manifest, config); break;
    case AdapterKind::replay: break;
  }

  const std::string model_id = config.model_id();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const auto& s = manifest.samples[i];
      const std::string prompt = config.prompt.empty() ? dataset::prompt_for(manifest, s.scenario) : config.prompt;
      results[i] = attempt_sample(backend, s, prompt, config, model_id);
      if (on_complete) on_complete(i, results[i]);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.max_parallel), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

namespace {

const std::set<std::string>& prediction_fields() {
  static const std::set<std::string> f = {"record", "sample_id", "model_id", "output",
                                          "latency_ms", "attempt", "adapter", "error"};
  return f;
}

}  // namespace

std::string serialize_predictions(const std::vector<Prediction>& predictions, const std::string& run_stamp) {
  std::string out;
  if (!run_stamp.empty()) {
    json header;
    header["record"] = "run";
    header["config"] = json::parse(run_stamp);
    out += header.dump() + "\n";
  }
  for (const auto& p : predictions) {
    json r;
    r["sample_id"] = p.sample_id;
    r["model_id"] = p.model_id;
    r["output"] = p.output;
    r["latency_ms"] = p.latency_ms;
    r["attempt"] = p.attempt;
    r["adapter"] = p.adapter;
    if (p.error) r["error"] = *p.error;
    out += r.dump() + "\n";
  }
  return out;
}

PredictionsFile parse_predictions(std::string_view content) {
  PredictionsFile file;
  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t line_no = 0, pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where = "predictions line " + std::to_string(line_no) + ": ";
    try {
      auto r = json::parse(line);
      if (!r.is_object()) throw Error(where + "record must be a JSON object");
      if (r.contains("record") && r["record"] != "prediction") {
        if (r["record"] != "run") throw Error(where + "unknown record type");
        if (!file.predictions.empty() || !file.run_stamp.empty()) throw Error(where + "run header must come first");
        file.run_stamp = r.contains("config") ? r["config"].dump() : "{}";
        continue;
      }
      for (const auto& [key, value] : r.items()) {
        if (!prediction_fields().contains(key)) throw Error(where + "unknown field \"" + key + "\"");
      }
      Prediction p;
      p.sample_id = r.at("sample_id").get<std::string>();
      if (p.sample_id.empty()) throw Error(where + "empty sample_id");
      p.model_id = r.value("model_id", "");
      p.adapter = r.value("adapter", "");
      if (r.contains("error") && !r["error"].is_null()) p.error = r["error"].get<std::string>();
      if (r.contains("output")) p.output = r["output"].get<std::string>();
      else if (!p.error) throw Error(where + "missing field \"output\"");
      p.latency_ms = r.value("latency_ms", 0.0);
      p.attempt = r.value("attempt", 1);
      if (!(p.latency_ms >= 0.0)) throw Error(where + "latency_ms must be non-negative");
      if (p.attempt < 1) throw Error(where + "attempt must be at least 1");
      auto [it, inserted] = first_line.emplace(p.sample_id, line_no);
      if (!inserted) {
        throw Error(where + "duplicate sample_id \"" + p.sample_id + "\" (first on line " +
                    std::to_string(it->second) + ")");
      }
      file.predictions.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(where + e.what());
    }
  }
  return file;
}

PredictionsFile read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read predictions " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_predictions(buf.str());
}

void write_predictions(const fs::path& path, const std::vector<Prediction>& predictions,
                       const std::string& run_stamp) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write predictions " + path.string());
  out << serialize_predictions(predictions, run_stamp);
  if (!out) throw Error("failed writing predictions " + path.string());
}

std::map<std::string, ReplayEntry> replay_load(const fs::path& path) {
  std::map<std::string, ReplayEntry> entries;
  for (auto& p : read_predictions(path).predictions) {
    entries.emplace(p.sample_id, ReplayEntry{std::move(p.output), std::move(p.error), std::move(p.model_id)});
  }
  return entries;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                      reinterpret_cast<const unsigned char*>(bytes.data()),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::string mime_type_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  if (ext == ".pdf") return "application/pdf";
  return "application/octet-stream";
}

namespace {

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) throw Error("response path resolves to null");
  return v.dump();
}

void walk(const json& node, std::string_view path, std::vector<std::string>& out) {
  if (path.empty()) {
    if (node.is_array()) {
      for (const auto& item : node) out.push_back(scalar_text(item));
    } else {
      out.push_back(scalar_text(node));
    }
    return;
  }
  if (path.front() == '.') {
    path.remove_prefix(1);
    if (path.empty() || path.front() == '.' || path.front() == '[') throw Error("malformed response path");
  }
  if (path.front() == '[') {
    auto close = path.find(']');
    if (close == std::string_view::npos) throw Error("unterminated [ in response path");
    auto index = path.substr(1, close - 1);
    auto rest = path.substr(close + 1);
    if (!node.is_array()) throw Error("response path expects an array");
    if (index.empty()) {
      for (const auto& item : node) walk(item, rest, out);
      return;
    }
    std::size_t i = 0;
    for (char c : index) {
      if (c < '0' || c > '9') throw Error("bad index in response path");
      i = i * 10 + static_cast<std::size_t>(c - '0');
    }
    if (i >= node.size()) throw Error("response path index out of range");
    walk(node[i], rest, out);
    return;
  }
  auto stop = path.find_first_of(".[");
  std::string key(path.substr(0, stop));
  auto rest = stop == std::string_view::npos ? std::string_view{} : path.substr(stop);
  if (!node.is_object() || !node.contains(key)) throw Error("response has no field \"" + key + "\"");
  walk(node[key], rest, out);
}

}  // namespace

std::string extract_response(std::string_view body, std::string_view path) {
  if (path.empty()) return std::string(body);
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(std::string("response is not JSON: ") + e.what());
  }
  std::vector<std::string> parts;
  walk(doc, path, parts);
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '\n';
    out += parts[i];
  }
  return out;
}

}  // namespace ocreval::adapters
