#include <gtest/gtest.h>

#include "ocreval/levenshtein.hpp"
#include "oracles.hpp"

using namespace ocreval::metrics;

namespace {

std::vector<Symbol> sym(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Levenshtein, TextbookCases) {
  EXPECT_EQ(levenshtein_dp(sym("kitten"), sym("sitting")), 3u);
  EXPECT_EQ(levenshtein_dp(sym("abc"), sym("abc")), 0u);
  EXPECT_EQ(levenshtein_dp(sym("abc"), sym("")), 3u);
  EXPECT_EQ(levenshtein_dp(sym(""), sym("")), 0u);
  EXPECT_EQ(levenshtein_bitparallel(sym("kitten"), sym("sitting")), 3u);
  EXPECT_EQ(levenshtein_bitparallel(sym(""), sym("ab")), 2u);
  EXPECT_EQ(levenshtein_bitparallel(sym("ab"), sym("")), 2u);
}

TEST(Levenshtein, GraphemeSequences) {
  std::vector<std::string> a = {"图", "表", "x"};
  std::vector<std::string> b = {"图", "x"};
  EXPECT_EQ(levenshtein(std::span<const std::string>(a), std::span<const std::string>(b)), 1u);
}

// Exhaustive over {a,b,c}^{<=5} x {a,b,c}^{<=5}; the length-8 sweep lives in
// the acceptance suite.
TEST(Levenshtein, DpMatchesNaiveRecursion) {
  std::vector<std::string> words = {""};
  for (std::size_t len = 1; len <= 5; ++len) {
    std::vector<std::string> next;
    for (const auto& w : words) {
      if (w.size() != len - 1) continue;
      for (char c : {'a', 'b', 'c'}) next.push_back(w + c);
    }
    words.insert(words.end(), next.begin(), next.end());
  }
  for (const auto& x : words) {
    for (const auto& y : words) {
      const auto expected = ocreval::oracle::naive_levenshtein(x, y);
      ASSERT_EQ(levenshtein_dp(sym(x), sym(y)), expected) << x << " / " << y;
      ASSERT_EQ(levenshtein_bitparallel(sym(x), sym(y)), expected) << x << " / " << y;
    }
  }
}

TEST(Levenshtein, BitParallelMatchesDpAcrossBlockBoundaries) {
  ocreval::oracle::Rng rng(42);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t alphabet = 2 + rng.below(6);
    std::vector<Symbol> a(rng.below(300));
    std::vector<Symbol> b(rng.below(300));
    for (auto& s : a) s = static_cast<Symbol>(rng.below(alphabet));
    for (auto& s : b) s = static_cast<Symbol>(rng.below(alphabet));
    ASSERT_EQ(levenshtein_bitparallel(a, b), levenshtein_dp(a, b)) << "trial " << trial;
    ASSERT_EQ(levenshtein(a, b), levenshtein_dp(a, b));
  }
}

TEST(Levenshtein, SymmetricAndTriangle) {
  ocreval::oracle::Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    auto gen = [&] {
      std::vector<Symbol> v(rng.below(12));
      for (auto& s : v) s = static_cast<Symbol>(rng.below(3));
      return v;
    };
    auto x = gen(), y = gen(), z = gen();
    ASSERT_EQ(levenshtein(x, y), levenshtein(y, x));
    ASSERT_LE(levenshtein(x, y), levenshtein(x, z) + levenshtein(z, y));
  }
}

TEST(Levenshtein, SubstitutionsBoundRawDistance) {
  ocreval::oracle::Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Symbol> x(1 + rng.below(200));
    for (auto& s : x) s = static_cast<Symbol>(rng.below(4));
    auto y = x;
    const std::size_t k = rng.below(std::min<std::size_t>(x.size(), 10) + 1);
    // Choose k distinct positions, substitute with a symbol that differs.
    std::vector<std::size_t> positions(x.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(positions[i], positions[i + rng.below(positions.size() - i)]);
    for (std::size_t i = 0; i < k; ++i) y[positions[i]] = (y[positions[i]] + 1 + static_cast<Symbol>(rng.below(3))) % 4;
    ASSERT_LE(levenshtein(x, y), k);
  }
}
