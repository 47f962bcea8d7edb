#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocreval/dataset.hpp"
#include "ocreval/metrics.hpp"

namespace ocreval::report {

// One sample after scoring. A failed prediction carries its error and the
// worst-case vector.
struct ScoredSample {
  dataset::Sample sample;
  metrics::MetricVector scores;
  std::optional<std::string> error;
  // Compact JSON of the metric/normalization parameters used.
  std::string config_stamp;
};

struct Row {
  dataset::GroupKey group;
  std::size_t count = 0;
  std::size_t failures = 0;
  metrics::MetricVector mean;

  bool operator==(const Row&) const = default;
};

struct ReportTable {
  std::string model_id;
  std::string manifest_name;
  std::string manifest_version;
  std::vector<std::string> keys;  // axis names, one per group-key component
  std::vector<Row> rows;          // ascending group-key order
  std::string config_stamp;       // compact JSON

  bool operator==(const ReportTable&) const = default;
};

// Macro mean per stratify group. Throws Error on empty input or when the
// samples were scored with different config stamps.
ReportTable aggregate(const std::vector<ScoredSample>& samples, const std::vector<dataset::Axis>& keys,
                      std::string model_id, const std::string& manifest_name,
                      const std::string& manifest_version);

// Correctly rounded sum, independent of input order.
double exact_sum(std::vector<double> values);

struct RadarPoint {
  std::string metric_name;
  double plotted_score = 0.0;

  bool operator==(const RadarPoint&) const = default;
};

// Percent scale, with edit distance flipped to 100 - x. Throws Error for an
// unknown metric or a value outside [0, 1].
RadarPoint radar_transform(std::string_view metric_name, double value);

enum class Format { markdown, csv, structured };

std::string_view to_string(Format f);
std::optional<Format> parse_format(std::string_view s);

// Column header used in markdown output, e.g. "Edit Distance ↓".
std::string metric_header(std::size_t index);

std::string render(const ReportTable& table, Format format);
// Inverse of render for csv and structured. Throws Error on malformed input.
ReportTable parse(std::string_view content, Format format);

// Models as rows, metric x group as columns (missing cells print "-").
std::string render_comparison(const std::vector<ReportTable>& tables);

// "model_id,group,metric,plotted_score" records for every row.
std::string render_radar(const ReportTable& table);

}  // namespace ocreval::report
