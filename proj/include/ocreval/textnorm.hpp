#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ocreval/common.hpp"

namespace ocreval::textnorm {

struct NormOptions {
  bool lowercase = false;
  // Drops markdown heading markers, emphasis markers and table pipes.
  bool strip_markup = false;

  bool operator==(const NormOptions&) const = default;
};

// Canonical form of a ground truth or a model output.
//
// canonical has no leading/trailing whitespace and no whitespace runs;
// tokens is empty iff canonical is empty; chars are the extended grapheme
// clusters of canonical, which is what edit distance runs over.
struct NormalizedText {
  std::string original;
  std::string canonical;
  std::vector<std::string> tokens;
  std::vector<std::string> chars;
  Language language_hint = Language::en;
};

NormalizedText normalize(std::string_view raw, const NormOptions& options = {});

// Mixed-script segmentation: one token per CJK character, one per maximal
// run of letters/digits/apostrophes, one per other symbol. Whitespace
// separates and is dropped.
std::vector<std::string> tokenize(std::string_view canonical);

// Extended grapheme clusters of a UTF-8 string.
std::vector<std::string> graphemes(std::string_view text);

// Codepoint classification shared with the simulator.
bool is_cjk(char32_t cp);
bool is_whitespace(char32_t cp);

// Decodes UTF-8; ill-formed sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

Language detect_language(std::string_view canonical);

}  // namespace ocreval::textnorm
