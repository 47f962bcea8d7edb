#include "ocreval/simulator.hpp"

#include <algorithm>
#include <cstdio>

#include "ocreval/textnorm.hpp"

namespace ocreval::simulator {

namespace {

constexpr std::string_view kEnglishWords =
    "the of and to in is was for on that with as by at from this are be it an or which have not "
    "had but were they all their has one been more when there can who will also would into its "
    "time only new other some could these two may first then do any like my now over such our "
    "man me even most made after well where through back years much before good right down year "
    "people way still long world under should while last great life state both just never house "
    "system number part small school against light place order water work between general page "
    "table figure model image text result method data report paper section line letter note city "
    "river market energy street window garden morning evening summer winter question answer "
    "reading writing simple clear quick brown fox jumps lazy dog open close price ticket station "
    "museum library coffee bread train north south east west analysis design value sample network "
    "language character document recognition benchmark evaluation accuracy experiment layout";

constexpr std::string_view kChineseChars =
    "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产"
    "种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物现实加量都两体制机当使点从"
    "业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表间样与关各重新线内数正心反你明看原又"
    "么利比或但质气第向道命此变条只没结解问意建月公无系军很情者最立代想已通并提直题党程展五果料象员革位"
    "入常文总次品式活设及管特件长求老头基资边流路级少图山统接知较将组见计别她手角期根论运农指几九区强放"
    "决西被干做必战先回则任取据处理府研质究城市场报告数据模型识别文字图像页面标题学校图书馆早晨夜晚春夏"
    "秋冬问题答案阅读写作简单清楚价格车站博物馆咖啡面包北南东西分析设计价值样本网络语言字符文档基准评估";

// Latin and CJK pieces for substitution / insertion, as single graphemes.
struct Pools {
  std::vector<std::string> lower, upper, digit, alnum, zh, en_words;
};

const Pools& pools() {
  static const Pools p = [] {
    Pools out;
    for (char c = 'a'; c <= 'z'; ++c) out.lower.emplace_back(1, c);
    for (char c = 'A'; c <= 'Z'; ++c) out.upper.emplace_back(1, c);
    for (char c = '0'; c <= '9'; ++c) out.digit.emplace_back(1, c);
    out.alnum = out.lower;
    out.alnum.insert(out.alnum.end(), out.upper.begin(), out.upper.end());
    out.alnum.insert(out.alnum.end(), out.digit.begin(), out.digit.end());
    for (char32_t cp : textnorm::decode_utf8(kChineseChars)) {
      std::string s;
      textnorm::append_utf8(s, cp);
      if (std::find(out.zh.begin(), out.zh.end(), s) == out.zh.end()) out.zh.push_back(std::move(s));
    }
    std::size_t pos = 0;
    while (pos < kEnglishWords.size()) {
      std::size_t end = kEnglishWords.find(' ', pos);
      if (end == std::string_view::npos) end = kEnglishWords.size();
      out.en_words.emplace_back(kEnglishWords.substr(pos, end - pos));
      pos = end + 1;
    }
    return out;
  }();
  return p;
}

enum class CharClass { lower, upper, digit, cjk, other };

CharClass classify(std::string_view grapheme) {
  if (grapheme.size() == 1) {
    char c = grapheme[0];
    if (c >= 'a' && c <= 'z') return CharClass::lower;
    if (c >= 'A' && c <= 'Z') return CharClass::upper;
    if (c >= '0' && c <= '9') return CharClass::digit;
    return CharClass::other;
  }
  auto cps = textnorm::decode_utf8(grapheme);
  if (!cps.empty() && textnorm::is_cjk(cps.front())) return CharClass::cjk;
  // Accented Latin letters and anything else non-ASCII.
  return CharClass::other;
}

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
  return pool[rng.below(pool.size())];
}

const std::string& pick_different(Rng& rng, const std::vector<std::string>& pool, std::string_view current) {
  for (;;) {
    const auto& candidate = pick(rng, pool);
    if (candidate != current) return candidate;
  }
}

}  // namespace

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection keeps the draw unbiased without relying on library distributions.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    std::uint64_t x = next();
    if (x < limit) return x % n;
  }
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  Rng mix(seed ^ h);
  return mix.next();
}

std::string_view to_string(AlphabetPolicy p) { return p == AlphabetPolicy::ascii ? "ascii" : "same_script"; }

std::optional<AlphabetPolicy> parse_alphabet_policy(std::string_view s) {
  if (s == "same_script") return AlphabetPolicy::same_script;
  if (s == "ascii") return AlphabetPolicy::ascii;
  return std::nullopt;
}

void CorruptionSpec::validate() const {
  auto check = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
  };
  check(sub_rate, "sub_rate");
  check(ins_rate, "ins_rate");
  check(del_rate, "del_rate");
  if (sub_rate + del_rate > 1.0) throw ConfigError("sub_rate + del_rate must not exceed 1");
}

std::string corrupt(std::string_view text, const CorruptionSpec& spec) {
  spec.validate();
  if (spec.sub_rate == 0.0 && spec.ins_rate == 0.0 && spec.del_rate == 0.0) return std::string(text);

  const auto& P = pools();
  const auto units = textnorm::graphemes(text);

  std::size_t cjk = 0, latin = 0;
  for (const auto& g : units) {
    switch (classify(g)) {
      case CharClass::cjk: ++cjk; break;
      case CharClass::lower:
      case CharClass::upper:
      case CharClass::digit: ++latin; break;
      case CharClass::other: break;
    }
  }
  const bool ascii = spec.alphabet == AlphabetPolicy::ascii;
  const auto& dominant = ascii ? P.alnum : (cjk > latin ? P.zh : P.lower);

  auto pool_for = [&](std::string_view g) -> const std::vector<std::string>& {
    if (ascii) return P.alnum;
    switch (classify(g)) {
      case CharClass::lower: return P.lower;
      case CharClass::upper: return P.upper;
      case CharClass::digit: return P.digit;
      case CharClass::cjk: return P.zh;
      case CharClass::other: break;
    }
    return dominant;
  };

  Rng rng(spec.seed);
  std::string out;
  out.reserve(text.size() + text.size() / 4);
  for (const auto& g : units) {
    const double u = rng.unit();
    if (u < spec.sub_rate) {
      out += pick_different(rng, pool_for(g), g);
    } else if (u >= spec.sub_rate + spec.del_rate) {
      out += g;
    }
    if (spec.ins_rate > 0.0 && rng.unit() < spec.ins_rate) out += pick(rng, dominant);
  }
  return out;
}

std::string corrupt_sample(std::string_view text, const CorruptionSpec& spec, std::string_view sample_id) {
  CorruptionSpec derived = spec;
  derived.seed = derive_seed(spec.seed, sample_id);
  return corrupt(text, derived);
}

SynthPlan scenario_plan(Scenario scenario, std::size_t total) {
  SynthPlan plan;
  plan.scenario = scenario;
  const Language langs[] = {Language::en, Language::zh};
  switch (scenario) {
    case Scenario::document:
      for (auto l : langs) plan.groups.push_back({l, Granularity::page, "", 0});
      break;
    case Scenario::scene:
      for (auto l : langs) plan.groups.push_back({l, Granularity::line, "", 0});
      break;
    case Scenario::handwritten:
      for (auto l : langs) {
        for (auto g : {Granularity::line, Granularity::paragraph}) {
          for (const char* src : {"real", "synthetic"}) plan.groups.push_back({l, g, src, 0});
        }
      }
      break;
  }
  const std::size_t n = plan.groups.size();
  for (std::size_t i = 0; i < n; ++i) plan.groups[i].count = total / n + (i < total % n ? 1 : 0);
  return plan;
}

namespace {

std::string capitalized(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

std::string en_sentence(Rng& rng, std::size_t min_words, std::size_t max_words, bool terminal) {
  const auto& words = pools().en_words;
  const std::size_t n = min_words + rng.below(max_words - min_words + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += (rng.below(12) == 0 ? ", " : " ");
    std::string w = words[rng.below(words.size())];
    if (i == 0) w = capitalized(w);
    if (rng.below(25) == 0) w = std::to_string(rng.below(2000));
    out += w;
  }
  if (terminal) out += '.';
  return out;
}

std::string zh_sentence(Rng& rng, std::size_t min_chars, std::size_t max_chars, bool terminal, bool mixed) {
  const auto& zh = pools().zh;
  const std::size_t n = min_chars + rng.below(max_chars - min_chars + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 2 && i + 2 < n && rng.below(10) == 0) out += "，";
    if (mixed && rng.below(6) == 0) {
      out += ' ';
      out += pools().en_words[rng.below(pools().en_words.size())];
      out += ' ';
    }
    out += zh[rng.below(zh.size())];
  }
  if (terminal) out += "。";
  return out;
}

std::string sentence(Rng& rng, Language language, bool terminal, bool short_form) {
  switch (language) {
    case Language::en: return short_form ? en_sentence(rng, 3, 8, terminal) : en_sentence(rng, 6, 14, terminal);
    case Language::zh: return short_form ? zh_sentence(rng, 5, 14, terminal, false) : zh_sentence(rng, 10, 24, terminal, false);
    case Language::mixed: return short_form ? zh_sentence(rng, 5, 12, terminal, true) : zh_sentence(rng, 10, 20, terminal, true);
  }
  return {};
}

std::string paragraph(Rng& rng, Language language, std::size_t sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) {
    if (i && language == Language::en) out += ' ';
    out += sentence(rng, language, true, false);
  }
  return out;
}

}  // namespace

std::string synth_text(Rng& rng, Language language, Granularity granularity, std::size_t min_chars) {
  std::string out;
  switch (granularity) {
    case Granularity::line: out = sentence(rng, language, false, true); break;
    case Granularity::paragraph: out = paragraph(rng, language, 2 + rng.below(3)); break;
    case Granularity::page: {
      out = "# " + sentence(rng, language, false, true) + "\n\n";
      const std::size_t paras = 2 + rng.below(3);
      for (std::size_t i = 0; i < paras; ++i) {
        if (i) out += "\n\n";
        out += paragraph(rng, language, 2 + rng.below(3));
      }
      break;
    }
  }
  if (min_chars > 0) {
    std::size_t length = textnorm::graphemes(out).size();
    while (length < min_chars) {
      auto more = paragraph(rng, language, 4);
      length += 1 + textnorm::graphemes(more).size();
      out += '\n';
      out += more;
    }
  }
  return out;
}

dataset::Manifest synth_manifest(const SynthPlan& plan, std::uint64_t seed) {
  if (plan.groups.empty()) throw ConfigError("synthetic plan has no groups");
  dataset::Manifest m;
  m.name = "synthetic-" + std::string(to_string(plan.scenario));
  m.version = "seed-" + std::to_string(seed);
  for (const auto& g : plan.groups) {
    if (g.count == 0) throw ConfigError("every synthetic group needs at least one sample");
    if (plan.scenario == Scenario::document && g.granularity != Granularity::page) {
      throw ConfigError("document groups must use page granularity");
    }
    if (plan.scenario == Scenario::handwritten && g.granularity == Granularity::page) {
      throw ConfigError("handwritten groups must use line or paragraph granularity");
    }
    std::string prefix = std::string(to_string(plan.scenario)) + "-" + std::string(to_string(g.language)) + "-" +
                         std::string(to_string(g.granularity));
    if (!g.source.empty()) prefix += "-" + g.source;
    for (std::size_t i = 0; i < g.count; ++i) {
      char index[16];
      std::snprintf(index, sizeof index, "%04zu", i + 1);
      dataset::Sample s;
      s.id = prefix + "-" + index;
      s.image = "synth://" + s.id + ".png";
      s.scenario = plan.scenario;
      s.language = g.language;
      s.granularity = g.granularity;
      s.source = g.source;
      Rng rng(derive_seed(seed, s.id + "/truth"));
      s.ground_truth = synth_text(rng, g.language, g.granularity);
      m.samples.push_back(std::move(s));
    }
  }
  return m;
}

std::vector<std::string> synth_outputs(const dataset::Manifest& manifest, const CorruptionSpec& spec) {
  spec.validate();
  std::vector<std::string> out;
  out.reserve(manifest.samples.size());
  for (const auto& s : manifest.samples) out.push_back(corrupt_sample(s.ground_truth, spec, s.id));
  return out;
}

}  // namespace ocreval::simulator
