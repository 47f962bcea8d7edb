#include "ocreval/levenshtein.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace ocreval::metrics {

std::pair<std::vector<Symbol>, std::vector<Symbol>> intern(std::span<const std::string> a,
                                                           std::span<const std::string> b) {
  std::unordered_map<std::string_view, Symbol> ids;
  auto map = [&](std::span<const std::string> in) {
    std::vector<Symbol> out;
    out.reserve(in.size());
    for (const auto& s : in) {
      auto [it, inserted] = ids.try_emplace(s, static_cast<Symbol>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  auto ia = map(a);
  auto ib = map(b);
  return {std::move(ia), std::move(ib)};
}

std::size_t levenshtein_dp(std::span<const Symbol> a, std::span<const Symbol> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t levenshtein_bitparallel(std::span<const Symbol> text, std::span<const Symbol> pattern) {
  if (pattern.empty()) return text.size();
  if (text.empty()) return pattern.size();

  const std::size_t m = pattern.size();
  const std::size_t words = (m + 63) / 64;
  const Symbol alphabet = std::max(*std::max_element(pattern.begin(), pattern.end()),
                                   *std::max_element(text.begin(), text.end())) + 1;

  // match[symbol * words + w]: bit k set iff pattern[64w + k] == symbol.
  std::vector<std::uint64_t> match(static_cast<std::size_t>(alphabet) * words, 0);
  for (std::size_t i = 0; i < m; ++i) {
    match[pattern[i] * words + i / 64] |= std::uint64_t{1} << (i % 64);
  }

  std::vector<std::uint64_t> vp(words, ~std::uint64_t{0});
  std::vector<std::uint64_t> vn(words, 0);
  const std::uint64_t last = std::uint64_t{1} << ((m - 1) % 64);
  std::size_t dist = m;

  for (Symbol c : text) {
    // Horizontal deltas entering the top of each block: row 0 always +1.
    std::uint64_t hp_carry = 1;
    std::uint64_t hn_carry = 0;
    const std::uint64_t* eq_row = &match[static_cast<std::size_t>(c) * words];
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t eq = eq_row[w];
      const std::uint64_t x = eq | hn_carry;
      const std::uint64_t d0 = (((x & vp[w]) + vp[w]) ^ vp[w]) | x | vn[w];
      std::uint64_t hp = vn[w] | ~(d0 | vp[w]);
      std::uint64_t hn = d0 & vp[w];

      if (w == words - 1) {
        if (hp & last) ++dist;
        if (hn & last) --dist;
      }

      const std::uint64_t hp_in = hp_carry;
      const std::uint64_t hn_in = hn_carry;
      hp_carry = hp >> 63;
      hn_carry = hn >> 63;
      hp = (hp << 1) | hp_in;
      hn = (hn << 1) | hn_in;

      vp[w] = hn | ~(d0 | hp);
      vn[w] = hp & d0;
    }
  }
  return dist;
}

std::size_t levenshtein(std::span<const Symbol> a, std::span<const Symbol> b) {
  if (a.size() < 32 && b.size() < 32) return levenshtein_dp(a, b);
  // Shorter sequence as the bit-vector pattern keeps the block count minimal.
  return a.size() >= b.size() ? levenshtein_bitparallel(a, b) : levenshtein_bitparallel(b, a);
}

std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  auto [ia, ib] = intern(a, b);
  return levenshtein(std::span<const Symbol>(ia), std::span<const Symbol>(ib));
}

}  // namespace ocreval::metrics
