#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ocreval::metrics {

using Symbol = std::uint32_t;

// Maps two grapheme sequences onto a shared dense symbol alphabet.
std::pair<std::vector<Symbol>, std::vector<Symbol>> intern(std::span<const std::string> a,
                                                           std::span<const std::string> b);

// Unit-cost Levenshtein distance, two-row Wagner-Fischer table.
std::size_t levenshtein_dp(std::span<const Symbol> a, std::span<const Symbol> b);

// Same distance via the blocked bit-vector recurrence (Myers/Hyyro).
// O(|a| * ceil(|b| / 64)) word operations.
std::size_t levenshtein_bitparallel(std::span<const Symbol> a, std::span<const Symbol> b);

// Dispatches to whichever of the two is cheaper for the input sizes.
std::size_t levenshtein(std::span<const Symbol> a, std::span<const Symbol> b);

std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace ocreval::metrics
