#include "ocreval/stemmer.hpp"

#include <array>
#include <utility>

namespace ocreval::metrics {

namespace {

class Porter {
 public:
  explicit Porter(std::string_view word) : b_(word) {}

  std::string run() {
    if (b_.size() <= 2) return b_;
    step1ab();
    if (b_.size() > 1) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_;
  }

 private:
  // Is b_[i] a consonant? 'y' counts as a consonant after a vowel.
  bool cons(std::size_t i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
    }
  }

  // Number of VC sequences in b_[0, j_].
  int measure() const {
    int n = 0;
    std::size_t i = 0;
    for (;;) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    for (;;) {
      for (;;) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      for (;;) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (std::size_t i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_cons(std::size_t i) const {
    return i >= 1 && b_[i] == b_[i - 1] && cons(i);
  }

  // cvc where the final c is not w, x or y.
  bool cvc(std::size_t i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    char ch = b_[i];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view suffix) {
    if (suffix.size() > b_.size() || !std::string_view(b_).ends_with(suffix)) return false;
    // j_ may wrap for an exact-length match; every caller checks measure()
    // or vowel_in_stem(), both of which treat a wrapped j_ as an empty stem.
    j_ = b_.size() - suffix.size() - 1;
    return true;
  }

  void set_to(std::string_view s) {
    b_.resize(j_ + 1);
    b_ += s;
  }

  void replace_if_measured(std::string_view s) {
    if (stem_measure() > 0) set_to(s);
  }

  int stem_measure() const { return j_ == npos ? 0 : measure(); }
  bool stem_has_vowel() const { return j_ != npos && vowel_in_stem(); }

  void step1ab() {
    if (b_.back() == 's') {
      if (ends("sses")) b_.resize(b_.size() - 2);
      else if (ends("ies")) set_to("i");
      else if (b_.size() >= 2 && b_[b_.size() - 2] != 's') b_.pop_back();
    }
    if (ends("eed")) {
      if (stem_measure() > 0) b_.pop_back();
    } else if ((ends("ed") || ends("ing")) && stem_has_vowel()) {
      b_.resize(j_ + 1);
      j_ = b_.size() - 1;
      if (ends("at")) set_to("ate");
      else if (ends("bl")) set_to("ble");
      else if (ends("iz")) set_to("ize");
      else if (double_cons(b_.size() - 1)) {
        char ch = b_.back();
        if (ch != 'l' && ch != 's' && ch != 'z') b_.pop_back();
      } else {
        j_ = b_.size() - 1;
        if (measure() == 1 && cvc(b_.size() - 1)) b_ += 'e';
      }
    }
  }

  void step1c() {
    if (ends("y") && stem_has_vowel()) b_.back() = 'i';
  }

  void step2() {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 21> rules{{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"bli", "ble"},     {"alli", "al"},    {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
        {"logi", "log"},
    }};
    for (const auto& [suffix, repl] : rules) {
      if (ends(suffix)) {
        replace_if_measured(repl);
        return;
      }
    }
  }

  void step3() {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 7> rules{{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    }};
    for (const auto& [suffix, repl] : rules) {
      if (ends(suffix)) {
        replace_if_measured(repl);
        return;
      }
    }
  }

  void step4() {
    static constexpr std::array<std::string_view, 19> suffixes{
        "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
        "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
    for (auto suffix : suffixes) {
      if (!ends(suffix)) continue;
      if (suffix == "ion" && (j_ == npos || (b_[j_] != 's' && b_[j_] != 't'))) return;
      if (stem_measure() > 1) b_.resize(j_ + 1);
      return;
    }
  }

  // Measure is taken over the whole word, final 'e' included.
  void step5() {
    j_ = b_.size() - 1;
    const int a = measure();
    if (b_.back() == 'e' && (a > 1 || (a == 1 && !cvc(b_.size() - 2)))) b_.pop_back();
    if (b_.back() == 'l' && double_cons(b_.size() - 1) && a > 1) b_.pop_back();
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::string b_;
  std::size_t j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) { return Porter(word).run(); }

}  // namespace ocreval::metrics
