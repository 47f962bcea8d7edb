#pragma once

// Reference implementations used only by tests. They are deliberately the
// slow textbook definitions so they share no code path with the library.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ocreval::oracle {

// Exponential recursion straight from the Levenshtein recurrence.
std::size_t naive_levenshtein(const std::string& a, const std::string& b);

struct BruteAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Enumerates every one-to-one exact-match alignment and returns the best
// (most matches, then fewest chunks).
BruteAlignment brute_force_alignment(const std::vector<std::string>& ref,
                                     const std::vector<std::string>& hyp);

// Maximum bipartite matching size by exhaustive search.
std::size_t brute_force_max_matching(const std::vector<std::string>& ref,
                                     const std::vector<std::string>& hyp);

// Deterministic generator for property tests (splitmix64).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Random text mixing ASCII words, CJK characters, punctuation, whitespace
// and the occasional markup/compatibility character.
std::string random_text(Rng& rng, std::size_t max_units);

}  // namespace ocreval::oracle
