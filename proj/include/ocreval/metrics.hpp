#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ocreval/common.hpp"
#include "ocreval/textnorm.hpp"

namespace ocreval::metrics {

// The six per-sample scores, each in [0, 1].
struct MetricVector {
  double edit_distance = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double bleu = 0.0;
  double meteor = 0.0;

  bool operator==(const MetricVector&) const = default;

  // Score assigned to a sample whose prediction failed or is missing.
  static MetricVector worst_case() { return {1.0, 0.0, 0.0, 0.0, 0.0, 0.0}; }
};

inline constexpr std::size_t kMetricCount = 6;

// Field order used by every table and file: edit_distance, f1, precision,
// recall, bleu, meteor.
const std::vector<std::string>& metric_names();
double metric_value(const MetricVector& v, std::size_t index);
double& metric_value(MetricVector& v, std::size_t index);

// Range plus F1/harmonic-mean consistency; empty string when valid.
std::string check_invariants(const MetricVector& v, double f1_tolerance = 1e-12);

struct BleuParams {
  int max_n = 4;
  std::vector<double> weights = {0.25, 0.25, 0.25, 0.25};
  double epsilon = 0.1;

  bool operator==(const BleuParams&) const = default;
  static BleuParams uniform(int max_n, double epsilon = 0.1);
  void validate() const;  // throws ConfigError
};

enum class StemStage { automatic, on, off };

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
  // automatic: enabled unless the text language is zh.
  StemStage stem = StemStage::automatic;

  bool operator==(const MeteorParams&) const = default;
  void validate() const;  // throws ConfigError
};

std::string_view to_string(StemStage s);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// One aligned unigram pair: index into ref tokens, index into hyp tokens.
struct AlignedPair {
  std::size_t ref = 0;
  std::size_t hyp = 0;
  bool operator==(const AlignedPair&) const = default;
};

struct Alignment {
  std::vector<AlignedPair> pairs;  // sorted by hyp index
  std::size_t chunks = 0;
  // False when the chunk search hit its node budget and returned the best
  // alignment found so far.
  bool exhaustive = true;
};

using textnorm::NormalizedText;

double normalized_edit_distance(const NormalizedText& ref, const NormalizedText& hyp);

PrfScores token_prf(const NormalizedText& ref, const NormalizedText& hyp);

double bleu(const NormalizedText& ref, const NormalizedText& hyp, const BleuParams& params = {});
double bleu(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
            const BleuParams& params = {});

// Staged unigram alignment (exact, then Porter-stem on ASCII words) with
// maximum match count and, among those, minimum chunk count.
Alignment meteor_align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                       bool stem_stage);

double meteor(const NormalizedText& ref, const NormalizedText& hyp, const MeteorParams& params = {});
double meteor(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
              const MeteorParams& params, bool stem_stage);

// Counts chunks of an alignment sorted by hyp index.
std::size_t count_chunks(const std::vector<AlignedPair>& pairs);

struct ScoringOptions {
  textnorm::NormOptions norm;
  BleuParams bleu;
  MeteorParams meteor;
  Language language = Language::en;  // resolves StemStage::automatic
};

MetricVector score_pair(std::string_view ref_raw, std::string_view hyp_raw,
                        const ScoringOptions& options = {});

}  // namespace ocreval::metrics
