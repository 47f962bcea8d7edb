#include "ocreval/cli.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ocreval/adapters.hpp"
#include "ocreval/config.hpp"
#include "ocreval/dataset.hpp"
#include "ocreval/metrics.hpp"
#include "ocreval/report.hpp"
#include "ocreval/simulator.hpp"

namespace ocreval::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Flags shared by several subcommands; unset optionals leave the config alone.
struct Flags {
  std::string config_path;
  std::string manifest;
  std::string predictions;
  std::string adapter_config;
  std::string out_dir;
  std::string stratify;
  bool stratify_set = false;
  std::string model_id;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_parallel;
  std::optional<bool> lowercase;
  std::optional<bool> strip_markup;

  // simulate
  std::string scenario = "handwritten";
  std::size_t count = 0;
  double sub_rate = 0.0, ins_rate = 0.0, del_rate = 0.0;
  std::string alphabet = "same_script";

  // report
  std::vector<std::string> inputs;
  std::string format = "markdown";
  std::string output;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
  const auto probe = dir / ".ocreval-write-test";
  {
    std::ofstream test(probe);
    if (!test) throw ConfigError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

config::RunConfig effective_config(const Flags& f) {
  config::RunConfig c = f.config_path.empty() ? config::RunConfig{} : config::load_config(f.config_path);
  if (!f.manifest.empty()) c.manifest_path = f.manifest;
  if (!f.predictions.empty()) c.predictions_path = f.predictions;
  if (!f.adapter_config.empty()) c.adapter = config::load_adapter_config(f.adapter_config);
  if (!f.out_dir.empty()) c.output_dir = f.out_dir;
  if (f.stratify_set) c.stratify = dataset::parse_axes(f.stratify);
  if (f.seed) c.seed = *f.seed;
  if (f.max_parallel) c.adapter.max_parallel = *f.max_parallel;
  for (auto& [scenario, norm] : c.norm) {
    if (f.lowercase) norm.lowercase = *f.lowercase;
    if (f.strip_markup) norm.strip_markup = *f.strip_markup;
  }
  c.validate();
  return c;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void print_groups(std::ostream& out, const std::vector<dataset::Sample>& samples,
                  const std::vector<dataset::Axis>& axes) {
  for (const auto& [key, members] : dataset::stratify(samples, axes)) {
    out << "  " << dataset::group_label(key) << ": " << members.size() << "\n";
  }
}

int cmd_validate(const Flags& f, std::ostream& out, std::ostream& err) {
  auto c = effective_config(f);
  if (c.manifest_path.empty()) throw ConfigError("validate needs --manifest");
  try {
    auto m = dataset::load_manifest(c.manifest_path);
    out << "valid: " << m.name << " (" << m.version << "), " << m.samples.size() << " samples\n";
    print_groups(out, m.samples, c.stratify);
    return kExitOk;
  } catch (const dataset::ManifestError& e) {
    for (const auto& d : e.diagnostics()) {
      err << c.manifest_path;
      if (d.line > 0) err << ":" << d.line;
      err << ": " << d.message << "\n";
    }
    err << "invalid: " << e.diagnostics().size() << " problem(s)\n";
    return kExitInvalid;
  }
}

int cmd_run(const Flags& f, std::ostream& out) {
  auto c = effective_config(f);
  if (c.manifest_path.empty()) throw ConfigError("run needs --manifest");
  c.adapter.validate();
  adapters::resolve_credential(c.adapter);
  auto manifest = dataset::load_manifest(c.manifest_path);
  const fs::path dir = c.output_dir;
  ensure_dir(dir);

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  auto predictions = adapters::run_adapter(manifest, c.adapter);
  const double elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::size_t failures = 0;
  for (const auto& p : predictions) failures += p.error ? 1 : 0;
  adapters::write_predictions(dir / "predictions.jsonl", predictions, config::run_stamp(c, manifest));

  json meta;
  meta["started_at"] = started;
  meta["finished_at"] = utc_now();
  meta["duration_ms"] = elapsed_ms;
  meta["samples"] = predictions.size();
  meta["failures"] = failures;
  meta["config"] = json::parse(config::run_stamp(c, manifest));
  write_file(dir / "run_meta.json", meta.dump(2) + "\n");
  write_file(dir / "effective_config.json", config::serialize_config(c));

  out << predictions.size() << " predictions (" << failures << " failed) written to "
      << (dir / "predictions.jsonl").string() << "\n";
  return kExitOk;
}

std::vector<report::ScoredSample> score_all(const dataset::Manifest& manifest,
                                            const std::map<std::string, adapters::Prediction>& by_id,
                                            const config::RunConfig& c) {
  const std::string stamp = config::scoring_stamp(c);
  const std::size_t n = manifest.samples.size();
  std::vector<report::ScoredSample> scored(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const auto& s = manifest.samples[i];
      auto& out = scored[i];
      out.sample = s;
      out.config_stamp = stamp;
      auto it = by_id.find(s.id);
      if (it == by_id.end()) {
        out.error = "missing prediction";
      } else if (it->second.error) {
        out.error = it->second.error;
      }
      out.scores = out.error ? metrics::MetricVector::worst_case()
                             : metrics::score_pair(s.ground_truth, it->second.output,
                                                   config::scoring_options(c, s.scenario, s.language));
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return scored;
}

std::string scores_jsonl(const std::vector<report::ScoredSample>& scored) {
  std::string out;
  for (const auto& s : scored) {
    json r;
    r["sample_id"] = s.sample.id;
    r["scenario"] = std::string(to_string(s.sample.scenario));
    r["language"] = std::string(to_string(s.sample.language));
    r["granularity"] = std::string(to_string(s.sample.granularity));
    if (!s.sample.source.empty()) r["source"] = s.sample.source;
    r["failed"] = s.error.has_value();
    if (s.error) r["error"] = *s.error;
    for (std::size_t m = 0; m < metrics::kMetricCount; ++m) {
      r[metrics::metric_names()[m]] = metrics::metric_value(s.scores, m);
    }
    out += r.dump() + "\n";
  }
  return out;
}

int cmd_score(const Flags& f, std::ostream& out, std::ostream& err) {
  auto c = effective_config(f);
  if (c.manifest_path.empty()) throw ConfigError("score needs --manifest");
  if (c.predictions_path.empty()) throw ConfigError("score needs --predictions");
  // Images are not needed for scoring.
  auto manifest = dataset::load_manifest(c.manifest_path, dataset::LoadOptions{false});
  auto file = adapters::read_predictions(c.predictions_path);

  std::map<std::string, adapters::Prediction> by_id;
  std::set<std::string> known;
  for (const auto& s : manifest.samples) known.insert(s.id);
  for (auto& p : file.predictions) {
    if (!known.contains(p.sample_id)) {
      err << "prediction for unknown sample \"" << p.sample_id << "\"\n";
      return kExitInvalid;
    }
    by_id.emplace(p.sample_id, std::move(p));
  }

  std::string model_id = f.model_id;
  if (model_id.empty()) {
    for (const auto& [id, p] : by_id) {
      if (!p.model_id.empty()) {
        model_id = p.model_id;
        break;
      }
    }
  }
  if (model_id.empty()) model_id = fs::path(c.predictions_path).stem().string();

  const fs::path dir = c.output_dir;
  ensure_dir(dir);
  auto scored = score_all(manifest, by_id, c);
  auto table = report::aggregate(scored, c.stratify, model_id, manifest.name, manifest.version);

  write_file(dir / "scores.jsonl", scores_jsonl(scored));
  const std::string markdown = report::render(table, report::Format::markdown);
  write_file(dir / "report.md", markdown);
  write_file(dir / "report.csv", report::render(table, report::Format::csv));
  write_file(dir / "report.json", report::render(table, report::Format::structured));
  write_file(dir / "radar.csv", report::render_radar(table));
  write_file(dir / "effective_config.json", config::serialize_config(c));
  out << markdown;
  return kExitOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  auto c = effective_config(f);
  auto scenario = parse_scenario(f.scenario);
  if (!scenario) throw ConfigError("unknown scenario \"" + f.scenario + "\"");
  auto alphabet = simulator::parse_alphabet_policy(f.alphabet);
  if (!alphabet) throw ConfigError("unknown alphabet policy \"" + f.alphabet + "\"");
  simulator::CorruptionSpec spec{f.sub_rate, f.ins_rate, f.del_rate, c.seed, *alphabet};
  spec.validate();

  std::size_t total = f.count;
  if (total == 0) total = 100 * simulator::scenario_plan(*scenario, 1).groups.size();
  auto plan = simulator::scenario_plan(*scenario, total);
  for (const auto& g : plan.groups) {
    if (g.count == 0) throw ConfigError("--count must give every group at least one sample");
  }
  auto manifest = simulator::synth_manifest(plan, c.seed);
  auto outputs = simulator::synth_outputs(manifest, spec);

  const std::string model_id = f.model_id.empty() ? "simulated" : f.model_id;
  std::vector<adapters::Prediction> predictions;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    predictions.push_back({manifest.samples[i].id, model_id, outputs[i], 0.0, 1, "simulator", std::nullopt});
  }

  const fs::path dir = c.output_dir;
  ensure_dir(dir);
  json stamp;
  stamp["simulator"] = {{"scenario", f.scenario}, {"count", total},     {"seed", c.seed},
                        {"sub_rate", f.sub_rate}, {"ins_rate", f.ins_rate}, {"del_rate", f.del_rate},
                        {"alphabet", f.alphabet}};
  dataset::write_manifest(manifest, dir / "manifest.jsonl");
  adapters::write_predictions(dir / "predictions.jsonl", predictions, stamp.dump());
  out << manifest.samples.size() << " samples written to " << (dir / "manifest.jsonl").string() << " and "
      << (dir / "predictions.jsonl").string() << "\n";
  print_groups(out, manifest.samples,
               {dataset::Axis::language, dataset::Axis::granularity, dataset::Axis::source});
  return kExitOk;
}

report::ReportTable load_report(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  return report::parse(read_file(path), ext == ".csv" ? report::Format::csv : report::Format::structured);
}

int cmd_report(const Flags& f, std::ostream& out) {
  if (f.inputs.empty()) throw ConfigError("report needs at least one --input");
  std::vector<report::ReportTable> tables;
  for (const auto& p : f.inputs) tables.push_back(load_report(p));

  std::string rendered;
  if (f.format == "comparison" || tables.size() > 1) {
    if (f.format != "comparison" && f.format != "markdown") {
      throw ConfigError("several inputs can only be rendered as a markdown comparison");
    }
    rendered = report::render_comparison(tables);
  } else if (f.format == "radar") {
    rendered = report::render_radar(tables.front());
  } else {
    auto format = report::parse_format(f.format);
    if (!format) throw ConfigError("unknown report format \"" + f.format + "\"");
    rendered = report::render(tables.front(), *format);
  }
  if (f.output.empty()) {
    out << rendered;
  } else {
    write_file(f.output, rendered);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"OCR evaluation harness: validate manifests, run model adapters, score predictions."};
  app.name("ocreval");
  app.require_subcommand(1);
  Flags f;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", f.config_path, "Run config (JSON)"); };
  auto add_norm = [&](CLI::App* sub) {
    sub->add_flag("--lowercase{true},--no-lowercase{false}", f.lowercase, "Lowercase before scoring");
    sub->add_flag("--strip-markup{true},--no-strip-markup{false}", f.strip_markup,
                  "Strip markdown markup before scoring (default: documents only)");
  };
  auto add_stratify = [&](CLI::App* sub) {
    sub->add_option_function<std::string>(
        "--stratify",
        [&](const std::string& v) {
          f.stratify = v;
          f.stratify_set = true;
        },
        "Comma-separated grouping axes: scenario, language, granularity, source");
  };

  auto* validate = app.add_subcommand("validate", "Check a manifest and print per-group counts");
  add_config(validate);
  validate->add_option("--manifest", f.manifest, "Manifest file (JSONL)");
  add_stratify(validate);

  auto* run = app.add_subcommand("run", "Query a model for every sample and write predictions");
  add_config(run);
  run->add_option("--manifest", f.manifest, "Manifest file (JSONL)");
  run->add_option("--adapter-config", f.adapter_config, "Adapter config (JSON), overrides the run config");
  run->add_option("--out", f.out_dir, "Output directory");
  run->add_option("--max-parallel", f.max_parallel, "Concurrent requests")->check(CLI::PositiveNumber);
  run->add_option("--seed", f.seed, "Top-level seed");

  auto* score = app.add_subcommand("score", "Score predictions against a manifest and write reports");
  add_config(score);
  score->add_option("--manifest", f.manifest, "Manifest file (JSONL)");
  score->add_option("--predictions", f.predictions, "Predictions file (JSONL)");
  score->add_option("--out", f.out_dir, "Output directory");
  score->add_option("--model-id", f.model_id, "Model name for the report");
  add_stratify(score);
  add_norm(score);

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic manifest and corrupted predictions");
  add_config(simulate);
  simulate->add_option("--scenario", f.scenario, "document, scene or handwritten")->capture_default_str();
  simulate->add_option("--count", f.count, "Total samples (default 100 per group)");
  simulate->add_option("--seed", f.seed, "Seed for texts and corruption");
  simulate->add_option("--sub-rate", f.sub_rate, "Per-character substitution probability")->capture_default_str();
  simulate->add_option("--ins-rate", f.ins_rate, "Per-character insertion probability")->capture_default_str();
  simulate->add_option("--del-rate", f.del_rate, "Per-character deletion probability")->capture_default_str();
  simulate->add_option("--alphabet", f.alphabet, "same_script or ascii")->capture_default_str();
  simulate->add_option("--out", f.out_dir, "Output directory");
  simulate->add_option("--model-id", f.model_id, "Model id recorded in the predictions");

  auto* rep = app.add_subcommand("report", "Convert reports or compare several models");
  rep->add_option("--input", f.inputs, "report.json or report.csv (repeatable)")->required();
  rep->add_option("--format", f.format, "markdown, csv, structured, radar or comparison")->capture_default_str();
  rep->add_option("--output", f.output, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    err << "run 'ocreval --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(f, out, err);
    if (run->parsed()) return cmd_run(f, out);
    if (score->parsed()) return cmd_score(f, out, err);
    if (simulate->parsed()) return cmd_simulate(f, out);
    if (rep->parsed()) return cmd_report(f, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dataset::ManifestError& e) {
    for (const auto& d : e.diagnostics()) {
      if (d.line > 0) err << "line " << d.line << ": ";
      err << d.message << "\n";
    }
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace ocreval::cli
