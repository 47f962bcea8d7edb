#include "oracles.hpp"

#include <algorithm>

namespace ocreval::oracle {

namespace {

std::size_t naive_rec(const std::string& a, std::size_t i, const std::string& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  std::size_t sub = naive_rec(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  std::size_t del = naive_rec(a, i + 1, b, j) + 1;
  std::size_t ins = naive_rec(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

struct Enumerator {
  const std::vector<std::string>& ref;
  const std::vector<std::string>& hyp;
  std::vector<bool> used;
  std::vector<long> match;  // hyp -> ref or -1
  BruteAlignment best{};
  bool have = false;

  void visit(std::size_t j) {
    if (j == hyp.size()) {
      std::size_t m = 0;
      std::size_t chunks = 0;
      long prev_ref = -2;
      long prev_hyp = -2;
      for (std::size_t k = 0; k < hyp.size(); ++k) {
        if (match[k] < 0) continue;
        ++m;
        if (!(static_cast<long>(k) == prev_hyp + 1 && match[k] == prev_ref + 1)) ++chunks;
        prev_ref = match[k];
        prev_hyp = static_cast<long>(k);
      }
      if (!have || m > best.matches || (m == best.matches && chunks < best.chunks)) {
        best = {m, chunks};
        have = true;
      }
      return;
    }
    match[j] = -1;
    visit(j + 1);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (used[i] || ref[i] != hyp[j]) continue;
      used[i] = true;
      match[j] = static_cast<long>(i);
      visit(j + 1);
      used[i] = false;
      match[j] = -1;
    }
  }
};

}  // namespace

std::size_t naive_levenshtein(const std::string& a, const std::string& b) { return naive_rec(a, 0, b, 0); }

BruteAlignment brute_force_alignment(const std::vector<std::string>& ref,
                                     const std::vector<std::string>& hyp) {
  Enumerator e{ref, hyp, std::vector<bool>(ref.size(), false), std::vector<long>(hyp.size(), -1)};
  e.visit(0);
  return e.best;
}

std::size_t brute_force_max_matching(const std::vector<std::string>& ref,
                                     const std::vector<std::string>& hyp) {
  return brute_force_alignment(ref, hyp).matches;
}

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string random_text(Rng& rng, std::size_t max_units) {
  static const std::vector<std::string> pieces = {
      "the", "cat", "Sat", "on", "mat", "don't", "OCR", "123", "x",
      "图", "表", "你", "好", "世", "界", "的", "。", "，",
      ",", ".", "!", "?", "-", "(", ")", "'", "’",
      " ", " ", " ", "  ", "\n", "\t", "　", " ",
      "Ａ", "Ｂ", "１", "ﬁ", "\xc3\xa9", "e\xcc\x81", "\xcc\x81",
      "#", "## ", "*", "**", "__", "_", "~~", "|", "|---|", "`",
      "Σ", "İ", "😀", "👍🏽", "한", "カ", "ー",
  };
  std::string out;
  std::size_t n = rng.below(max_units + 1);
  for (std::size_t i = 0; i < n; ++i) out += pieces[rng.below(pieces.size())];
  return out;
}

}  // namespace ocreval::oracle
