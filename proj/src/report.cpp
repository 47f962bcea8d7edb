#include "ocreval/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"

namespace ocreval::report {

using json = nlohmann::ordered_json;
using metrics::kMetricCount;
using metrics::metric_names;
using metrics::metric_value;

double exact_sum(std::vector<double> values) {
  // Shewchuk's non-overlapping partials, then a correctly rounded collapse.
  std::vector<double> partials;
  for (double x : values) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    lo = y - (hi - x);
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

ReportTable aggregate(const std::vector<ScoredSample>& samples, const std::vector<dataset::Axis>& keys,
                      std::string model_id, const std::string& manifest_name,
                      const std::string& manifest_version) {
  if (samples.empty()) throw Error("cannot aggregate an empty set of scored samples");
  const std::string& stamp = samples.front().config_stamp;
  for (const auto& s : samples) {
    if (s.config_stamp != stamp) {
      throw Error("samples were scored with different configurations (sample \"" + s.sample.id + "\")");
    }
  }

  std::map<dataset::GroupKey, std::vector<const ScoredSample*>> groups;
  for (const auto& s : samples) groups[dataset::group_key(s.sample, keys)].push_back(&s);

  ReportTable table;
  table.model_id = std::move(model_id);
  table.manifest_name = manifest_name;
  table.manifest_version = manifest_version;
  table.config_stamp = stamp;
  for (auto a : keys) table.keys.emplace_back(dataset::to_string(a));

  for (const auto& [key, members] : groups) {
    Row row;
    row.group = key;
    row.count = members.size();
    for (const auto* s : members) row.failures += s->error.has_value() ? 1 : 0;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      std::vector<double> values;
      values.reserve(members.size());
      for (const auto* s : members) values.push_back(metric_value(s->scores, m));
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      const double low = *lo, high = *hi;
      const double mean = exact_sum(std::move(values)) / static_cast<double>(members.size());
      metric_value(row.mean, m) = std::clamp(mean, low, high);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RadarPoint radar_transform(std::string_view metric_name, double value) {
  const auto& names = metric_names();
  if (std::find(names.begin(), names.end(), metric_name) == names.end()) {
    throw Error("unknown metric \"" + std::string(metric_name) + "\"");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error("radar value for " + std::string(metric_name) + " must be in [0, 1], got " + format_roundtrip(value));
  }
  // Snap to 1e-9 so 0.113 plots as the double nearest 88.7, not 88.69999...
  auto snap = [](double x) { return std::round(x * 1e9) / 1e9; };
  const double percent = snap(value * 100.0);
  const double plotted = metric_name == "edit_distance" ? snap(100.0 - percent) : percent;
  return {std::string(metric_name), plotted};
}

std::string_view to_string(Format f) {
  switch (f) {
    case Format::markdown: return "markdown";
    case Format::csv: return "csv";
    case Format::structured: return "structured";
  }
  return "?";
}

std::optional<Format> parse_format(std::string_view s) {
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "csv") return Format::csv;
  if (s == "structured" || s == "json") return Format::structured;
  return std::nullopt;
}

std::string metric_header(std::size_t index) {
  static const char* headers[] = {"Edit Distance ↓", "F1-score ↑", "Precision ↑",
                                  "Recall ↑",        "BLEU ↑",     "METEOR ↑"};
  return index < kMetricCount ? headers[index] : "";
}

namespace {

std::string samples_cell(const Row& row) {
  std::string cell = std::to_string(row.count);
  if (row.failures > 0) cell += " (" + std::to_string(row.failures) + " failed)";
  return cell;
}

std::string md_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out;
}

std::string render_markdown(const ReportTable& t) {
  std::string out = "## " + md_escape(t.model_id) + "\n\n";
  out += "Manifest: " + md_escape(t.manifest_name) + " (" + md_escape(t.manifest_version) + ")\n\n";
  std::vector<std::string> key_headers = t.keys;
  if (key_headers.empty()) key_headers.push_back("group");

  out += "|";
  for (const auto& k : key_headers) out += " " + md_escape(k) + " |";
  out += " Samples |";
  for (std::size_t m = 0; m < kMetricCount; ++m) out += " " + metric_header(m) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < key_headers.size(); ++i) out += "---|";
  for (std::size_t i = 0; i <= kMetricCount; ++i) out += "---:|";
  out += "\n";

  for (const auto& row : t.rows) {
    out += "|";
    if (t.keys.empty()) out += " all |";
    for (const auto& v : row.group) out += " " + md_escape(v) + " |";
    out += " " + samples_cell(row) + " |";
    for (std::size_t m = 0; m < kMetricCount; ++m) out += " " + format_fixed(metric_value(row.mean, m), 3) + " |";
    out += "\n";
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos && !s.empty() && s.front() != '#') return std::string(s);
  if (s.empty()) return "";
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
  return out;
}

std::string render_csv(const ReportTable& t) {
  std::string out;
  out += csv_line({"model_id", t.model_id});
  out += csv_line({"manifest_name", t.manifest_name});
  out += csv_line({"manifest_version", t.manifest_version});
  out += csv_line({"config_stamp", t.config_stamp});
  std::vector<std::string> keys_line = {"keys"};
  keys_line.insert(keys_line.end(), t.keys.begin(), t.keys.end());
  out += csv_line(keys_line);
  out += '\n';

  std::vector<std::string> header = t.keys.empty() ? std::vector<std::string>{"group"} : t.keys;
  header.emplace_back("count");
  header.emplace_back("failures");
  for (const auto& n : metric_names()) header.push_back(n);
  out += csv_line(header);
  for (const auto& row : t.rows) {
    std::vector<std::string> fields = t.keys.empty() ? std::vector<std::string>{"all"} : row.group;
    fields.push_back(std::to_string(row.count));
    fields.push_back(std::to_string(row.failures));
    for (std::size_t m = 0; m < kMetricCount; ++m) fields.push_back(format_roundtrip(metric_value(row.mean, m)));
    out += csv_line(fields);
  }
  return out;
}

// RFC 4180 records; a blank line yields an empty record.
std::vector<std::vector<std::string>> parse_csv(std::string_view s) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    if (field_started || !record.empty()) record.push_back(field);
    records.push_back(std::move(record));
    record.clear();
    field.clear();
    field_started = false;
  };
  while (i < s.size()) {
    char c = s[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty()) throw Error("csv: stray quote");
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(field);
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw Error("csv: unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("report: invalid count \"" + s + "\"");
  return v;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("report: invalid number \"" + s + "\"");
  return v;
}

ReportTable parse_csv_table(std::string_view content) {
  auto records = parse_csv(content);
  auto meta = [&](std::size_t i, const char* name) -> const std::vector<std::string>& {
    if (i >= records.size() || records[i].empty() || records[i][0] != name) {
      throw Error(std::string("report csv: expected \"") + name + "\" on record " + std::to_string(i + 1));
    }
    return records[i];
  };
  auto value = [&](std::size_t i, const char* name) {
    const auto& r = meta(i, name);
    if (r.size() != 2) throw Error(std::string("report csv: malformed \"") + name + "\" record");
    return r[1];
  };
  ReportTable t;
  t.model_id = value(0, "model_id");
  t.manifest_name = value(1, "manifest_name");
  t.manifest_version = value(2, "manifest_version");
  t.config_stamp = value(3, "config_stamp");
  const auto& keys = meta(4, "keys");
  t.keys.assign(keys.begin() + 1, keys.end());
  if (records.size() < 7 || !records[5].empty()) throw Error("report csv: missing table section");

  const std::size_t key_cols = t.keys.empty() ? 1 : t.keys.size();
  const std::size_t width = key_cols + 2 + kMetricCount;
  if (records[6].size() != width) throw Error("report csv: header has wrong column count");
  for (std::size_t r = 7; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.empty()) continue;
    if (rec.size() != width) throw Error("report csv: row " + std::to_string(r + 1) + " has wrong column count");
    Row row;
    if (!t.keys.empty()) row.group.assign(rec.begin(), rec.begin() + static_cast<long>(key_cols));
    row.count = parse_count(rec[key_cols]);
    row.failures = parse_count(rec[key_cols + 1]);
    for (std::size_t m = 0; m < kMetricCount; ++m) metric_value(row.mean, m) = parse_double(rec[key_cols + 2 + m]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

json stamp_json(const std::string& stamp) {
  if (stamp.empty()) return json::object();
  try {
    return json::parse(stamp);
  } catch (const json::parse_error&) {
    return json(stamp);
  }
}

std::string render_structured(const ReportTable& t) {
  json doc;
  doc["format"] = "ocreval-report";
  doc["format_version"] = 1;
  doc["model_id"] = t.model_id;
  doc["manifest"] = {{"name", t.manifest_name}, {"version", t.manifest_version}};
  doc["aggregation"] = "macro";
  doc["keys"] = t.keys;
  doc["config"] = stamp_json(t.config_stamp);
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r;
    json group = json::object();
    for (std::size_t i = 0; i < t.keys.size(); ++i) group[t.keys[i]] = row.group[i];
    r["group"] = group;
    r["count"] = row.count;
    r["failures"] = row.failures;
    json means;
    for (std::size_t m = 0; m < kMetricCount; ++m) means[metric_names()[m]] = metric_value(row.mean, m);
    r["mean"] = means;
    rows.push_back(r);
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

ReportTable parse_structured(std::string_view content) {
  try {
    auto doc = json::parse(content);
    if (doc.value("format", "") != "ocreval-report") throw Error("not an ocreval structured report");
    ReportTable t;
    t.model_id = doc.at("model_id").get<std::string>();
    t.manifest_name = doc.at("manifest").at("name").get<std::string>();
    t.manifest_version = doc.at("manifest").at("version").get<std::string>();
    t.keys = doc.at("keys").get<std::vector<std::string>>();
    const auto& config = doc.at("config");
    t.config_stamp = config.is_string() ? config.get<std::string>() : (config.empty() ? "" : config.dump());
    for (const auto& r : doc.at("rows")) {
      Row row;
      for (const auto& k : t.keys) row.group.push_back(r.at("group").at(k).get<std::string>());
      row.count = r.at("count").get<std::size_t>();
      row.failures = r.at("failures").get<std::size_t>();
      for (std::size_t m = 0; m < kMetricCount; ++m) {
        metric_value(row.mean, m) = r.at("mean").at(metric_names()[m]).get<double>();
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed structured report: ") + e.what());
  }
}

}  // namespace

std::string render(const ReportTable& table, Format format) {
  switch (format) {
    case Format::markdown: return render_markdown(table);
    case Format::csv: return render_csv(table);
    case Format::structured: return render_structured(table);
  }
  return {};
}

ReportTable parse(std::string_view content, Format format) {
  switch (format) {
    case Format::csv: return parse_csv_table(content);
    case Format::structured: return parse_structured(content);
    case Format::markdown: break;
  }
  throw Error("markdown reports cannot be parsed back");
}

std::string render_comparison(const std::vector<ReportTable>& tables) {
  // Union of groups in key order; each metric gets one column per group.
  std::set<dataset::GroupKey> group_set;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) group_set.insert(r.group);
  }
  std::vector<dataset::GroupKey> groups(group_set.begin(), group_set.end());

  std::string out = "| Model |";
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    for (const auto& g : groups) {
      out += " " + metric_header(m);
      if (groups.size() > 1 || !g.empty()) out += " " + md_escape(dataset::group_label(g));
      out += " |";
    }
  }
  out += "\n|---|";
  for (std::size_t i = 0; i < kMetricCount * groups.size(); ++i) out += "---:|";
  out += "\n";
  for (const auto& t : tables) {
    out += "| " + md_escape(t.model_id) + " |";
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      for (const auto& g : groups) {
        auto it = std::find_if(t.rows.begin(), t.rows.end(), [&](const Row& r) { return r.group == g; });
        out += " " + (it == t.rows.end() ? std::string("-") : format_fixed(metric_value(it->mean, m), 3)) + " |";
      }
    }
    out += "\n";
  }
  return out;
}

std::string render_radar(const ReportTable& table) {
  std::string out = "model_id,group,metric,plotted_score\n";
  for (const auto& row : table.rows) {
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      auto p = radar_transform(metric_names()[m], metric_value(row.mean, m));
      out += csv_line({table.model_id, dataset::group_label(row.group), p.metric_name, format_roundtrip(p.plotted_score)});
    }
  }
  return out;
}

}  // namespace ocreval::report
