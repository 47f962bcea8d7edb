#include "ocreval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "ocreval/levenshtein.hpp"
#include "ocreval/stemmer.hpp"

namespace ocreval::metrics {

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"edit_distance", "f1",   "precision",
                                                 "recall",        "bleu", "meteor"};
  return names;
}

double metric_value(const MetricVector& v, std::size_t index) {
  return metric_value(const_cast<MetricVector&>(v), index);
}

double& metric_value(MetricVector& v, std::size_t index) {
  switch (index) {
    case 0: return v.edit_distance;
    case 1: return v.f1;
    case 2: return v.precision;
    case 3: return v.recall;
    case 4: return v.bleu;
    case 5: return v.meteor;
    default: throw std::out_of_range("metric index " + std::to_string(index));
  }
}

std::string check_invariants(const MetricVector& v, double f1_tolerance) {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    double x = metric_value(v, i);
    if (!(x >= 0.0 && x <= 1.0)) return metric_names()[i] + " out of [0,1]: " + format_roundtrip(x);
  }
  if (v.precision == 0.0 && v.recall == 0.0) {
    if (v.f1 != 0.0) return "f1 must be 0 when precision and recall are 0";
    return {};
  }
  double hm = 2.0 * v.precision * v.recall / (v.precision + v.recall);
  if (std::abs(hm - v.f1) > f1_tolerance) return "f1 is not the harmonic mean of precision and recall";
  return {};
}

BleuParams BleuParams::uniform(int max_n, double epsilon) {
  BleuParams p;
  p.max_n = max_n;
  p.weights.assign(static_cast<std::size_t>(std::max(max_n, 0)), 1.0 / max_n);
  p.epsilon = epsilon;
  return p;
}

void BleuParams::validate() const {
  if (max_n < 1) throw ConfigError("bleu.max_n must be >= 1");
  if (weights.size() != static_cast<std::size_t>(max_n)) {
    throw ConfigError("bleu.weights must have max_n entries");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("bleu.weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("bleu.weights must sum to 1");
  if (!(epsilon > 0.0)) throw ConfigError("bleu.epsilon must be > 0");
}

void MeteorParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("meteor.alpha must lie in [0,1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("meteor.gamma must lie in [0,1]");
  if (!(beta >= 0.0)) throw ConfigError("meteor.beta must be >= 0");
}

std::string_view to_string(StemStage s) {
  switch (s) {
    case StemStage::automatic: return "auto";
    case StemStage::on: return "on";
    case StemStage::off: return "off";
  }
  return "?";
}

double normalized_edit_distance(const NormalizedText& ref, const NormalizedText& hyp) {
  const std::size_t longest = std::max(ref.chars.size(), hyp.chars.size());
  if (longest == 0) return 0.0;
  const std::size_t d = levenshtein(std::span<const std::string>(ref.chars),
                                    std::span<const std::string>(hyp.chars));
  return static_cast<double>(d) / static_cast<double>(longest);
}

PrfScores token_prf(const NormalizedText& ref, const NormalizedText& hyp) {
  if (ref.tokens.empty() && hyp.tokens.empty()) return {1.0, 1.0, 1.0};
  if (ref.tokens.empty() || hyp.tokens.empty()) return {0.0, 0.0, 0.0};

  std::unordered_map<std::string_view, std::size_t> ref_counts;
  for (const auto& t : ref.tokens) ++ref_counts[t];
  std::size_t common = 0;
  for (const auto& t : hyp.tokens) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  PrfScores s;
  s.precision = static_cast<double>(common) / static_cast<double>(hyp.tokens.size());
  s.recall = static_cast<double>(common) / static_cast<double>(ref.tokens.size());
  s.f1 = common == 0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace {

std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                          std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
            const BleuParams& params) {
  params.validate();
  if (hyp.empty()) return ref.empty() ? 1.0 : 0.0;

  double log_sum = 0.0;
  double weight_sum = 0.0;
  for (int n = 1; n <= params.max_n; ++n) {
    const auto order = static_cast<std::size_t>(n);
    // Orders longer than the hypothesis have no n-grams to score.
    if (hyp.size() < order) continue;
    const double total = static_cast<double>(hyp.size() - order + 1);

    auto hyp_counts = ngram_counts(hyp, order);
    auto ref_counts = ngram_counts(ref, order);
    std::size_t clipped = 0;
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    const double numerator = clipped > 0 ? static_cast<double>(clipped) : params.epsilon;
    const double w = params.weights[order - 1];
    log_sum += w * std::log(numerator / total);
    weight_sum += w;
  }
  const double precision_mean = weight_sum > 0.0 ? std::exp(log_sum / weight_sum) : 0.0;

  const double c = static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(bp * precision_mean, 0.0, 1.0);
}

double bleu(const NormalizedText& ref, const NormalizedText& hyp, const BleuParams& params) {
  return bleu(ref.tokens, hyp.tokens, params);
}

std::size_t count_chunks(const std::vector<AlignedPair>& pairs) {
  std::size_t chunks = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    bool continues = k > 0 && pairs[k].hyp == pairs[k - 1].hyp + 1 && pairs[k].ref == pairs[k - 1].ref + 1;
    if (!continues) ++chunks;
  }
  return chunks;
}

namespace {

constexpr int kNone = -1;
constexpr std::size_t kNodeBudget = 200000;

// Branch-and-bound over hyp positions. Each participating hyp token is
// matched to an unused ref token of its class or skipped; per-class quotas
// force maximum cardinality, and the objective maximises "links" (adjacent
// pairs (i,j),(i+1,j+1)), i.e. minimises chunks for a fixed match count.
class ChunkSearch {
 public:
  ChunkSearch(std::vector<int> ref_class, std::vector<int> hyp_class, std::vector<int> fixed_match)
      : ref_class_(std::move(ref_class)),
        hyp_class_(std::move(hyp_class)),
        fixed_(std::move(fixed_match)),
        ref_used_(ref_class_.size(), false) {
    const std::size_t hyp_n = hyp_class_.size();
    for (int m : fixed_) {
      if (m != kNone) ref_used_[static_cast<std::size_t>(m)] = true;
    }
    int classes = 0;
    for (int c : ref_class_) classes = std::max(classes, c + 1);
    for (int c : hyp_class_) classes = std::max(classes, c + 1);
    refs_of_class_.resize(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < ref_class_.size(); ++i) {
      if (ref_class_[i] != kNone && !ref_used_[i]) {
        refs_of_class_[static_cast<std::size_t>(ref_class_[i])].push_back(static_cast<int>(i));
      }
    }
    std::vector<std::size_t> hyp_count(static_cast<std::size_t>(classes), 0);
    for (std::size_t j = 0; j < hyp_n; ++j) {
      if (fixed_[j] == kNone && hyp_class_[j] != kNone) ++hyp_count[static_cast<std::size_t>(hyp_class_[j])];
    }
    need_.resize(static_cast<std::size_t>(classes));
    skips_.resize(static_cast<std::size_t>(classes));
    for (std::size_t c = 0; c < static_cast<std::size_t>(classes); ++c) {
      need_[c] = std::min(hyp_count[c], refs_of_class_[c].size());
      skips_[c] = hyp_count[c] - need_[c];
    }

    auto matchable = [&](std::size_t j) {
      if (fixed_[j] != kNone) return true;
      int c = hyp_class_[j];
      return c != kNone && !refs_of_class_[static_cast<std::size_t>(c)].empty();
    };
    // potential_[j]: upper bound on the link gained at hyp position j.
    potential_.assign(hyp_n + 1, 0);
    for (std::size_t j = 1; j < hyp_n; ++j) {
      if (fixed_[j] != kNone && fixed_[j - 1] != kNone) {
        potential_[j] = fixed_[j] == fixed_[j - 1] + 1 ? 1 : 0;
      } else {
        potential_[j] = matchable(j) && matchable(j - 1) ? 1 : 0;
      }
    }
    suffix_.assign(hyp_n + 1, 0);
    for (std::size_t j = hyp_n; j-- > 0;) suffix_[j] = suffix_[j + 1] + potential_[j];

    match_.assign(hyp_n, kNone);
  }

  std::vector<int> run(bool& exhaustive) {
    const std::size_t hyp_n = hyp_class_.size();
    exhaustive = true;
    if (hyp_n == 0) return {};

    const int ceiling = suffix_[0];
    frames_.assign(hyp_n, Frame{});
    std::size_t depth = 0;
    int links = 0;
    enter(0);

    for (;;) {
      int candidate = kNone;
      if (!next_choice(depth, frames_[depth], candidate)) {
        if (depth == 0) break;
        --depth;
        links -= undo(depth);
        continue;
      }
      links += apply(depth, candidate);
      ++nodes_;

      if (depth + 1 == hyp_n) {
        if (links > best_links_) {
          best_links_ = links;
          best_ = match_;
        }
        links -= undo(depth);
        if (best_links_ == ceiling) break;
        if (nodes_ > kNodeBudget) {
          exhaustive = false;
          break;
        }
        continue;
      }
      if (links + suffix_[depth + 1] <= best_links_) {
        links -= undo(depth);
        continue;
      }
      if (nodes_ > kNodeBudget && best_links_ >= 0) {
        exhaustive = false;
        break;
      }
      ++depth;
      enter(depth);
    }
    return best_;
  }

 private:
  struct Frame {
    int phase = 0;  // 0: extension/fixed, 1: ranked list, 2: skip, 3: done
    std::vector<int> list;
    std::size_t cursor = 0;
    int chosen = kNone;
    bool skipped = false;
    int gained = 0;
  };

  void enter(std::size_t depth) {
    Frame& f = frames_[depth];
    f.phase = 0;
    f.list.clear();
    f.cursor = 0;
    f.chosen = kNone;
    f.skipped = false;
    f.gained = 0;
  }

  // Previous hyp position's ref match, or kNone.
  int previous_match(std::size_t depth) const { return depth == 0 ? kNone : match_[depth - 1]; }

  bool next_choice(std::size_t depth, Frame& f, int& candidate) {
    const int fixed = fixed_[depth];
    if (fixed != kNone) {
      if (f.phase != 0) return false;
      f.phase = 3;
      candidate = fixed;
      return true;
    }
    const int c = hyp_class_[depth];
    if (c == kNone) {
      if (f.phase != 0) return false;
      f.phase = 3;
      candidate = kSkip;
      return true;
    }
    const auto cls = static_cast<std::size_t>(c);
    const int prev = previous_match(depth);
    const int extension = prev == kNone ? kNone : prev + 1;
    const bool ext_ok = extension != kNone && static_cast<std::size_t>(extension) < ref_class_.size() &&
                        ref_class_[static_cast<std::size_t>(extension)] == c &&
                        !ref_used_[static_cast<std::size_t>(extension)] && need_[cls] > 0;
    if (f.phase == 0) {
      f.phase = 1;
      if (ext_ok) {
        candidate = extension;
        return true;
      }
    }
    if (f.phase == 1) {
      if (f.list.empty() && f.cursor == 0 && need_[cls] > 0) build_list(depth, cls, extension, f);
      while (f.cursor < f.list.size()) {
        int i = f.list[f.cursor++];
        if (!ref_used_[static_cast<std::size_t>(i)]) {
          candidate = i;
          return true;
        }
      }
      f.phase = 2;
    }
    if (f.phase == 2) {
      f.phase = 3;
      if (skips_[cls] > 0) {
        candidate = kSkip;
        return true;
      }
    }
    return false;
  }

  // Unused refs of the class ranked by distance from where the current
  // diagonal would put this hyp position; refs whose successor can also
  // match the next hyp token go first.
  void build_list(std::size_t depth, std::size_t cls, int extension, Frame& f) {
    int anchor_ref = kNone;
    std::size_t anchor_hyp = 0;
    for (std::size_t j = depth; j-- > 0;) {
      if (match_[j] != kNone) {
        anchor_ref = match_[j];
        anchor_hyp = j;
        break;
      }
    }
    const long expected = anchor_ref == kNone ? static_cast<long>(depth)
                                              : anchor_ref + static_cast<long>(depth - anchor_hyp);
    const int next_class = depth + 1 < hyp_class_.size() ? hyp_class_[depth + 1] : kNone;
    const int next_fixed = depth + 1 < fixed_.size() ? fixed_[depth + 1] : kNone;

    struct Ranked {
      int lookahead;
      long distance;
      int index;
    };
    std::vector<Ranked> ranked;
    for (int i : refs_of_class_[cls]) {
      if (ref_used_[static_cast<std::size_t>(i)] || i == extension) continue;
      const auto succ = static_cast<std::size_t>(i) + 1;
      bool chains = false;
      if (next_fixed != kNone) {
        chains = next_fixed == i + 1;
      } else if (succ < ref_class_.size() && next_class != kNone) {
        chains = ref_class_[succ] == next_class && !ref_used_[succ];
      }
      ranked.push_back({chains ? 0 : 1, std::labs(static_cast<long>(i) - expected), i});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.lookahead != b.lookahead) return a.lookahead < b.lookahead;
      if (a.distance != b.distance) return a.distance < b.distance;
      return a.index < b.index;
    });
    f.list.reserve(ranked.size());
    for (const auto& r : ranked) f.list.push_back(r.index);
    if (f.list.empty()) f.cursor = 1;  // mark as built
  }

  int apply(std::size_t depth, int candidate) {
    Frame& f = frames_[depth];
    if (candidate == kSkip) {
      f.chosen = kNone;
      f.skipped = fixed_[depth] == kNone && hyp_class_[depth] != kNone;
      if (f.skipped) --skips_[static_cast<std::size_t>(hyp_class_[depth])];
      match_[depth] = kNone;
      f.gained = 0;
      return 0;
    }
    f.chosen = candidate;
    f.skipped = false;
    match_[depth] = candidate;
    if (fixed_[depth] == kNone) {
      ref_used_[static_cast<std::size_t>(candidate)] = true;
      --need_[static_cast<std::size_t>(hyp_class_[depth])];
    }
    const int prev = previous_match(depth);
    f.gained = prev != kNone && candidate == prev + 1 ? 1 : 0;
    return f.gained;
  }

  int undo(std::size_t depth) {
    Frame& f = frames_[depth];
    if (f.skipped) ++skips_[static_cast<std::size_t>(hyp_class_[depth])];
    if (f.chosen != kNone && fixed_[depth] == kNone) {
      ref_used_[static_cast<std::size_t>(f.chosen)] = false;
      ++need_[static_cast<std::size_t>(hyp_class_[depth])];
    }
    match_[depth] = kNone;
    f.chosen = kNone;
    f.skipped = false;
    const int g = f.gained;
    f.gained = 0;
    return g;
  }

  static constexpr int kSkip = -2;

  std::vector<int> ref_class_;
  std::vector<int> hyp_class_;
  std::vector<int> fixed_;
  std::vector<bool> ref_used_;
  std::vector<std::vector<int>> refs_of_class_;
  std::vector<std::size_t> need_;
  std::vector<std::size_t> skips_;
  std::vector<int> potential_;
  std::vector<int> suffix_;
  std::vector<int> match_;
  std::vector<int> best_;
  std::vector<Frame> frames_;
  int best_links_ = -1;
  std::size_t nodes_ = 0;
};

bool is_ascii_word(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
  });
}

std::string stem_key(std::string_view token) {
  std::string lower(token);
  for (char& ch : lower) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return porter_stem(lower);
}

}  // namespace

Alignment meteor_align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                       bool stem_stage) {
  Alignment result;
  std::vector<int> match(hyp.size(), kNone);

  // Stage 1: exact surface match.
  {
    std::unordered_map<std::string_view, int> ids;
    std::vector<int> ref_class(ref.size());
    std::vector<int> hyp_class(hyp.size(), kNone);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      ref_class[i] = ids.try_emplace(ref[i], static_cast<int>(ids.size())).first->second;
    }
    for (std::size_t j = 0; j < hyp.size(); ++j) {
      auto it = ids.find(hyp[j]);
      if (it != ids.end()) hyp_class[j] = it->second;
    }
    bool exhaustive = true;
    match = ChunkSearch(std::move(ref_class), std::move(hyp_class), match).run(exhaustive);
    if (match.empty()) match.assign(hyp.size(), kNone);
    result.exhaustive = result.exhaustive && exhaustive;
  }

  // Stage 2: Porter stems of the still-unmatched ASCII words.
  if (stem_stage) {
    std::vector<bool> ref_taken(ref.size(), false);
    for (int m : match) {
      if (m != kNone) ref_taken[static_cast<std::size_t>(m)] = true;
    }
    std::unordered_map<std::string, int> ids;
    std::vector<int> ref_class(ref.size(), kNone);
    std::vector<int> hyp_class(hyp.size(), kNone);
    bool any = false;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (ref_taken[i] || !is_ascii_word(ref[i])) continue;
      ref_class[i] = ids.try_emplace(stem_key(ref[i]), static_cast<int>(ids.size())).first->second;
    }
    for (std::size_t j = 0; j < hyp.size(); ++j) {
      if (match[j] != kNone || !is_ascii_word(hyp[j])) continue;
      auto it = ids.find(stem_key(hyp[j]));
      if (it != ids.end()) {
        hyp_class[j] = it->second;
        any = true;
      }
    }
    if (any) {
      bool exhaustive = true;
      match = ChunkSearch(std::move(ref_class), std::move(hyp_class), match).run(exhaustive);
      result.exhaustive = result.exhaustive && exhaustive;
    }
  }

  for (std::size_t j = 0; j < match.size(); ++j) {
    if (match[j] != kNone) result.pairs.push_back({static_cast<std::size_t>(match[j]), j});
  }
  result.chunks = count_chunks(result.pairs);
  return result;
}

double meteor(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
              const MeteorParams& params, bool stem_stage) {
  params.validate();
  if (ref.empty() && hyp.empty()) return 1.0;
  if (ref.empty() || hyp.empty()) return 0.0;

  const Alignment a = meteor_align(ref, hyp, stem_stage);
  const auto m = static_cast<double>(a.pairs.size());
  if (a.pairs.empty()) return 0.0;

  const double p = m / static_cast<double>(hyp.size());
  const double r = m / static_cast<double>(ref.size());
  const double f_mean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
  return std::clamp(f_mean * (1.0 - penalty), 0.0, 1.0);
}

double meteor(const NormalizedText& ref, const NormalizedText& hyp, const MeteorParams& params) {
  bool stem = params.stem == StemStage::on ||
              (params.stem == StemStage::automatic && ref.language_hint != Language::zh);
  return meteor(ref.tokens, hyp.tokens, params, stem);
}

MetricVector score_pair(std::string_view ref_raw, std::string_view hyp_raw,
                        const ScoringOptions& options) {
  const NormalizedText ref = textnorm::normalize(ref_raw, options.norm);
  const NormalizedText hyp = textnorm::normalize(hyp_raw, options.norm);

  MetricVector v;
  v.edit_distance = normalized_edit_distance(ref, hyp);
  const PrfScores prf = token_prf(ref, hyp);
  v.precision = prf.precision;
  v.recall = prf.recall;
  v.f1 = prf.f1;
  v.bleu = bleu(ref, hyp, options.bleu);

  const bool stem = options.meteor.stem == StemStage::on ||
                    (options.meteor.stem == StemStage::automatic && options.language != Language::zh);
  v.meteor = meteor(ref.tokens, hyp.tokens, options.meteor, stem);
  return v;
}

}  // namespace ocreval::metrics
