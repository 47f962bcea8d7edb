#include <gtest/gtest.h>

#include <cmath>

#include "ocreval/metrics.hpp"
#include "oracles.hpp"

using namespace ocreval;
using namespace ocreval::metrics;
using ocreval::textnorm::normalize;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

NormalizedText with_tokens(std::vector<std::string> tokens) {
  NormalizedText t;
  t.tokens = std::move(tokens);
  return t;
}

}  // namespace

TEST(EditDistance, Examples) {
  EXPECT_DOUBLE_EQ(normalized_edit_distance(normalize("abc"), normalize("abc")), 0.0);
  // Hand-filled DP table: kitten -> sitting needs 3 edits over max length 7.
  EXPECT_DOUBLE_EQ(normalized_edit_distance(normalize("kitten"), normalize("sitting")), 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(normalized_edit_distance(normalize("abc"), normalize("")), 1.0);
  EXPECT_DOUBLE_EQ(normalized_edit_distance(normalize(""), normalize("")), 0.0);
}

TEST(EditDistance, CountsGraphemesNotBytes) {
  EXPECT_DOUBLE_EQ(normalized_edit_distance(normalize("图表"), normalize("图")), 0.5);
}

TEST(TokenPrf, MultisetExample) {
  // Hand count: bag {a,b,b,c} vs {b,c,d} share {b,c}: P=2/3, R=2/4.
  auto s = token_prf(with_tokens({"a", "b", "b", "c"}), with_tokens({"b", "c", "d"}));
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_NEAR(s.f1, 0.571428571428572, 1e-12);
}

TEST(TokenPrf, Conventions) {
  auto same = token_prf(with_tokens({"x", "y"}), with_tokens({"x", "y"}));
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);

  auto disjoint = token_prf(with_tokens({"a"}), with_tokens({"b"}));
  EXPECT_EQ(disjoint.precision, 0.0);
  EXPECT_EQ(disjoint.recall, 0.0);
  EXPECT_EQ(disjoint.f1, 0.0);

  auto both_empty = token_prf(with_tokens({}), with_tokens({}));
  EXPECT_EQ(both_empty.f1, 1.0);

  auto hyp_empty = token_prf(with_tokens({"a"}), with_tokens({}));
  EXPECT_EQ(hyp_empty.precision, 0.0);
  EXPECT_EQ(hyp_empty.recall, 0.0);

  auto ref_empty = token_prf(with_tokens({}), with_tokens({"a"}));
  EXPECT_EQ(ref_empty.precision, 0.0);
  EXPECT_EQ(ref_empty.recall, 0.0);
}

TEST(Bleu, IdenticalIsOne) {
  auto t = split("the quick brown fox jumps");
  EXPECT_EQ(bleu(t, t), 1.0);
  EXPECT_EQ(bleu(split("a"), split("a")), 1.0);
  EXPECT_EQ(bleu(split("a b"), split("a b")), 1.0);
}

TEST(Bleu, HandDerivedFixture) {
  // p1=5/5, p2=3/4, p3=1/3, p4=0.1/2, BP=exp(1-6/5); computed offline.
  const double expected = 0.273759126753473;
  EXPECT_NEAR(bleu(split("the cat sat on the mat"), split("the cat on the mat")), expected, 1e-12);
}

TEST(Bleu, EmptyHypothesis) {
  EXPECT_EQ(bleu(split("a b"), {}), 0.0);
  EXPECT_EQ(bleu(std::vector<std::string>{}, {}), 1.0);
}

TEST(Bleu, UnigramOrderInsensitive) {
  auto p = BleuParams::uniform(1);
  // Same bag, different order, equal length: p1 = 1, BP = 1.
  EXPECT_DOUBLE_EQ(bleu(split("a b c d"), split("d c b a"), p), 1.0);
  // Shorter permuted hypothesis: p1 * BP.
  EXPECT_NEAR(bleu(split("a b c d"), split("c a b"), p), std::exp(1.0 - 4.0 / 3.0), 1e-15);
}

TEST(Bleu, ParamValidation) {
  BleuParams bad;
  bad.max_n = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.weights = {0.5, 0.5};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.epsilon = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Meteor, HandDerivedFixtures) {
  MeteorParams p;
  // F_mean = 1, one chunk over three matches: 1 - 0.5 * (1/3)^3.
  EXPECT_NEAR(meteor(split("the cat sat"), split("the cat sat"), p, true), 0.981481481481482, 1e-12);
  EXPECT_EQ(meteor(split("cat"), split("cat"), p, true), 0.5);
  EXPECT_EQ(meteor(split("a b c"), split("x y"), p, true), 0.0);
  EXPECT_EQ(meteor(std::vector<std::string>{}, {}, p, true), 1.0);
}

TEST(Meteor, ChunksAndFmean) {
  MeteorParams p;
  // ref "a b c d", hyp "c d a b": m = 4, two chunks.
  auto a = meteor_align(split("a b c d"), split("c d a b"), false);
  EXPECT_EQ(a.pairs.size(), 4u);
  EXPECT_EQ(a.chunks, 2u);
  EXPECT_NEAR(meteor(split("a b c d"), split("c d a b"), p, false), 1.0 - 0.5 * std::pow(0.5, 3), 1e-12);

  // Partial match: m = 2 of ref 4 / hyp 3.
  const double P = 2.0 / 3.0, R = 0.5;
  const double fmean = P * R / (0.9 * P + 0.1 * R);
  EXPECT_NEAR(meteor(split("a b c d"), split("a b x"), p, false), fmean * (1.0 - 0.5 * std::pow(0.5, 3)), 1e-12);
}

TEST(Meteor, PrefersFewerChunksAmongRepeatedTokens) {
  // Greedy left-to-right matching of "the" would split into more chunks.
  auto a = meteor_align(split("the cat the dog"), split("the dog"), false);
  EXPECT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.chunks, 1u);
  ASSERT_EQ(a.pairs[0].ref, 2u);
}

TEST(Meteor, StemStageMatchesInflections) {
  auto exact = meteor_align(split("the cats were running"), split("the cat was run"), false);
  auto stemmed = meteor_align(split("the cats were running"), split("the cat was run"), true);
  EXPECT_EQ(exact.pairs.size(), 1u);
  EXPECT_EQ(stemmed.pairs.size(), 3u);  // the, cat~cats, run~running
  // Stems never apply to CJK tokens.
  auto zh = meteor_align(split("图 表"), split("表 图"), true);
  EXPECT_EQ(zh.pairs.size(), 2u);
}

TEST(Meteor, ContiguousSliceIsOneChunk) {
  ocreval::oracle::Rng rng(3);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> ref(1 + rng.below(30));
    for (auto& t : ref) t = vocab[rng.below(vocab.size())];
    const std::size_t begin = rng.below(ref.size());
    const std::size_t len = 1 + rng.below(ref.size() - begin);
    std::vector<std::string> hyp(ref.begin() + static_cast<long>(begin),
                                 ref.begin() + static_cast<long>(begin + len));
    auto a = meteor_align(ref, hyp, false);
    ASSERT_EQ(a.pairs.size(), hyp.size());
    ASSERT_EQ(a.chunks, 1u);
  }
}

TEST(Meteor, MatchesBruteForceOnSmallRandomLists) {
  ocreval::oracle::Rng rng(11);
  const std::vector<std::string> vocab = {"a", "b", "c"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::string> ref(rng.below(8)), hyp(rng.below(8));
    for (auto& t : ref) t = vocab[rng.below(vocab.size())];
    for (auto& t : hyp) t = vocab[rng.below(vocab.size())];
    auto expected = ocreval::oracle::brute_force_alignment(ref, hyp);
    auto got = meteor_align(ref, hyp, true);
    ASSERT_TRUE(got.exhaustive);
    ASSERT_EQ(got.pairs.size(), expected.matches);
    ASSERT_EQ(got.chunks, expected.chunks);
  }
}

TEST(Meteor, LongInputsFinishWithinBudget) {
  ocreval::oracle::Rng rng(8);
  const std::vector<std::string> vocab = {"the", "a", "of", "to", "and", "in", "is", "it"};
  std::vector<std::string> ref(2000), hyp;
  for (auto& t : ref) t = vocab[rng.below(vocab.size())];
  for (const auto& t : ref) {
    if (rng.unit() < 0.9) hyp.push_back(t);
  }
  double s = meteor(ref, hyp, MeteorParams{}, true);
  EXPECT_GT(s, 0.0);
  EXPECT_LE(s, 1.0);
}

TEST(ScorePair, Identity) {
  for (const char* x : {"hello world", "图表 OCR 123", "a", "你好, world!"}) {
    auto v = score_pair(x, x);
    EXPECT_EQ(v.edit_distance, 0.0) << x;
    EXPECT_EQ(v.precision, 1.0);
    EXPECT_EQ(v.recall, 1.0);
    EXPECT_EQ(v.f1, 1.0);
    EXPECT_EQ(v.bleu, 1.0);
  }
}

TEST(ScorePair, BothEmpty) {
  auto v = score_pair("", "");
  EXPECT_EQ(v, (MetricVector{0.0, 1.0, 1.0, 1.0, 1.0, 1.0}));
}

TEST(ScorePair, OneSubstitution) { EXPECT_DOUBLE_EQ(score_pair("abcd", "abce").edit_distance, 0.25); }

TEST(ScorePair, EmptyOutputIsWorstCase) {
  EXPECT_EQ(score_pair("some text", ""), MetricVector::worst_case());
}

TEST(ScorePair, InvariantsOnGeneratedInputs) {
  ocreval::oracle::Rng rng(2025);
  for (int trial = 0; trial < 2000; ++trial) {
    auto ref = ocreval::oracle::random_text(rng, 16);
    auto hyp = ocreval::oracle::random_text(rng, 16);
    ScoringOptions opt;
    opt.norm.lowercase = rng.below(2) == 1;
    opt.norm.strip_markup = rng.below(2) == 1;
    auto v = score_pair(ref, hyp, opt);
    ASSERT_EQ(check_invariants(v), "") << ref << " | " << hyp;
  }
}

TEST(ScorePair, EditDistanceSymmetric) {
  ocreval::oracle::Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    auto x = normalize(ocreval::oracle::random_text(rng, 16));
    auto y = normalize(ocreval::oracle::random_text(rng, 16));
    ASSERT_EQ(normalized_edit_distance(x, y), normalized_edit_distance(y, x));
  }
}

TEST(MetricVector, InvariantChecker) {
  EXPECT_EQ(check_invariants(MetricVector::worst_case()), "");
  EXPECT_NE(check_invariants({0.1, 0.9, 0.5, 0.5, 0.2, 0.3}), "");
  EXPECT_NE(check_invariants({1.5, 0.0, 0.0, 0.0, 0.0, 0.0}), "");
}
