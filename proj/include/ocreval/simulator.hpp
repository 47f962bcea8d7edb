#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocreval/dataset.hpp"

namespace ocreval::simulator {

// splitmix64 with hand-rolled range reduction, so streams are identical on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n); 0 when n == 0
  double unit();                         // uniform in [0, 1)

 private:
  std::uint64_t state_;
};

// Independent stream seed for (seed, label).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

enum class AlphabetPolicy { same_script, ascii };

std::string_view to_string(AlphabetPolicy p);
std::optional<AlphabetPolicy> parse_alphabet_policy(std::string_view s);

struct CorruptionSpec {
  double sub_rate = 0.0;
  double ins_rate = 0.0;
  double del_rate = 0.0;
  std::uint64_t seed = 0;
  AlphabetPolicy alphabet = AlphabetPolicy::same_script;

  void validate() const;  // throws ConfigError
};

// Character-level noise over extended grapheme clusters. Each position is
// substituted with probability sub_rate or deleted with probability
// del_rate; after it a character is inserted with probability ins_rate.
// Whitespace is never produced.
std::string corrupt(std::string_view text, const CorruptionSpec& spec);

// Same, with the stream derived from (spec.seed, sample_id).
std::string corrupt_sample(std::string_view text, const CorruptionSpec& spec, std::string_view sample_id);

struct SynthGroup {
  Language language = Language::en;
  Granularity granularity = Granularity::line;
  std::string source;
  std::size_t count = 0;
};

struct SynthPlan {
  Scenario scenario = Scenario::scene;
  std::vector<SynthGroup> groups;
};

// Groups mirroring each benchmark scenario, with `total` samples spread as
// evenly as possible (earlier groups take the remainder):
//   document     {en, zh} x page
//   scene        {en, zh} x line
//   handwritten  {en, zh} x {line, paragraph} x {real, synthetic}
SynthPlan scenario_plan(Scenario scenario, std::size_t total);

// Text drawn from the bundled word lists, at least min_chars graphemes long.
std::string synth_text(Rng& rng, Language language, Granularity granularity, std::size_t min_chars = 0);

// Throws ConfigError on an empty plan or a zero-count group.
dataset::Manifest synth_manifest(const SynthPlan& plan, std::uint64_t seed);

// Corrupted ground truth for every sample, in manifest order.
std::vector<std::string> synth_outputs(const dataset::Manifest& manifest, const CorruptionSpec& spec);

}  // namespace ocreval::simulator
