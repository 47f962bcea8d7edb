#include "ocreval/textnorm.hpp"

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <memory>
#include <mutex>

namespace ocreval::textnorm {

namespace {

const icu::Normalizer2& nfkc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error("ICU NFKC normalizer unavailable: " + std::string(u_errorName(status)));
  }
  return *n;
}

std::string apply_nfkc(std::string_view text) {
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfkc().normalize(in, status);
  if (U_FAILURE(status)) throw Error("NFKC normalization failed: " + std::string(u_errorName(status)));
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string apply_lowercase(std::string_view text) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s.toLower(icu::Locale::getRoot());
  std::string result;
  s.toUTF8String(result);
  return result;
}

bool is_inline_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

bool is_table_separator(std::string_view line) {
  bool pipe = false;
  bool dash = false;
  for (char c : line) {
    if (c == '|') pipe = true;
    else if (c == '-') dash = true;
    else if (c != ':' && !is_inline_space(c)) return false;
  }
  return pipe && dash;
}

// Removes a leading "#... " heading marker (after optional indentation).
std::string strip_heading(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_inline_space(line[i])) ++i;
  std::size_t hashes = i;
  while (hashes < line.size() && line[hashes] == '#') ++hashes;
  if (hashes == i) return std::string(line);
  if (hashes < line.size() && !is_inline_space(line[hashes])) return std::string(line);
  return std::string(line.substr(0, i)) + std::string(line.substr(hashes));
}

std::string strip_markup_once(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);

    if (!is_table_separator(line)) {
      std::string body = strip_heading(line);
      std::string no_star;
      no_star.reserve(body.size());
      for (char c : body) {
        if (c == '*') continue;
        no_star.push_back(c == '|' ? ' ' : c);
      }
      // Runs of two or more '_' or '~' are emphasis/strike markers.
      for (std::size_t i = 0; i < no_star.size();) {
        char c = no_star[i];
        if (c == '_' || c == '~') {
          std::size_t j = i;
          while (j < no_star.size() && no_star[j] == c) ++j;
          if (j - i == 1) out.push_back(c);
          i = j;
        } else {
          out.push_back(c);
          ++i;
        }
      }
    }
    if (end == text.size()) break;
    out.push_back('\n');
    start = end + 1;
  }
  return out;
}

std::string apply_strip_markup(std::string_view text) {
  std::string current(text);
  for (;;) {
    std::string next = strip_markup_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::int32_t i = 0;
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  while (i < length) {
    std::int32_t begin = i;
    UChar32 cp;
    U8_NEXT(bytes, i, length, cp);
    if (cp >= 0 && is_whitespace(static_cast<char32_t>(cp))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    if (cp < 0) {
      append_utf8(out, U'�');
    } else {
      out.append(text.substr(static_cast<std::size_t>(begin), static_cast<std::size_t>(i - begin)));
    }
  }
  return out;
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == U'’'; }

bool is_extend(char32_t cp) {
  auto gcb = u_getIntPropertyValue(static_cast<UChar32>(cp), UCHAR_GRAPHEME_CLUSTER_BREAK);
  return gcb == U_GCB_EXTEND || gcb == U_GCB_ZWJ || gcb == U_GCB_SPACING_MARK;
}

bool is_word_char(char32_t cp) {
  if (is_apostrophe(cp)) return true;
  auto c = static_cast<UChar32>(cp);
  if (u_hasBinaryProperty(c, UCHAR_ALPHABETIC)) return true;
  auto type = u_charType(c);
  return type == U_DECIMAL_DIGIT_NUMBER || type == U_LETTER_NUMBER || type == U_OTHER_NUMBER;
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::int32_t i = 0;
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  while (i < length) {
    UChar32 cp;
    U8_NEXT(bytes, i, length, cp);
    out.push_back(cp < 0 ? U'�' : static_cast<char32_t>(cp));
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  std::uint8_t buf[4];
  std::int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, 4, static_cast<UChar32>(cp), error);
  if (error) {
    append_utf8(out, U'�');
    return;
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
}

bool is_whitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_cjk(char32_t cp) {
  auto c = static_cast<UChar32>(cp);
  if (u_hasBinaryProperty(c, UCHAR_IDEOGRAPHIC)) return true;
  if (cp >= 0x3040 && cp <= 0x30FF) return true;  // kana incl. prolonged sound mark
  if (cp >= 0x31F0 && cp <= 0x31FF) return true;
  UErrorCode status = U_ZERO_ERROR;
  UScriptCode script = uscript_getScript(c, &status);
  if (U_FAILURE(status)) return false;
  switch (script) {
    case USCRIPT_HAN:
    case USCRIPT_HIRAGANA:
    case USCRIPT_KATAKANA:
    case USCRIPT_HANGUL:
    case USCRIPT_BOPOMOFO:
      return true;
    default:
      return false;
  }
}

std::vector<std::string> graphemes(std::string_view text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));

  // Character break iterators are not thread-safe; clone a shared prototype.
  static std::once_flag once;
  static std::unique_ptr<icu::BreakIterator> prototype;
  static std::mutex prototype_mutex;
  std::call_once(once, [] {
    UErrorCode status = U_ZERO_ERROR;
    prototype.reset(icu::BreakIterator::createCharacterInstance(icu::Locale::getRoot(), status));
    if (U_FAILURE(status)) prototype.reset();
  });
  if (!prototype) throw Error("ICU character break iterator unavailable");
  std::unique_ptr<icu::BreakIterator> it;
  {
    std::lock_guard lock(prototype_mutex);
    it.reset(prototype->clone());
  }
  it->setText(s);

  std::int32_t start = it->first();
  for (std::int32_t end = it->next(); end != icu::BreakIterator::DONE; start = end, end = it->next()) {
    std::string cluster;
    s.tempSubStringBetween(start, end).toUTF8String(cluster);
    out.push_back(std::move(cluster));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view canonical) {
  enum class Open { none, word, single };
  std::vector<std::string> tokens;
  Open open = Open::none;

  std::int32_t i = 0;
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(canonical.data());
  const auto length = static_cast<std::int32_t>(canonical.size());
  while (i < length) {
    UChar32 raw;
    U8_NEXT(bytes, i, length, raw);
    char32_t cp = raw < 0 ? U'�' : static_cast<char32_t>(raw);

    if (is_whitespace(cp)) {
      open = Open::none;
      continue;
    }
    if (is_extend(cp)) {
      if (open == Open::none) {
        tokens.emplace_back();
        open = Open::word;
      }
      append_utf8(tokens.back(), cp);
      continue;
    }
    if (!is_cjk(cp) && is_word_char(cp)) {
      if (open != Open::word) {
        tokens.emplace_back();
        open = Open::word;
      }
      append_utf8(tokens.back(), cp);
      continue;
    }
    // CJK character or standalone symbol.
    tokens.emplace_back();
    append_utf8(tokens.back(), cp);
    open = Open::single;
  }
  return tokens;
}

Language detect_language(std::string_view canonical) {
  bool cjk = false;
  bool other = false;
  for (char32_t cp : decode_utf8(canonical)) {
    if (is_cjk(cp)) cjk = true;
    else if (u_hasBinaryProperty(static_cast<UChar32>(cp), UCHAR_ALPHABETIC)) other = true;
  }
  if (cjk && other) return Language::mixed;
  return cjk ? Language::zh : Language::en;
}

NormalizedText normalize(std::string_view raw, const NormOptions& options) {
  std::string text = apply_nfkc(raw);
  if (options.lowercase) text = apply_nfkc(apply_lowercase(text));
  if (options.strip_markup) text = apply_nfkc(apply_strip_markup(text));
  text = collapse_whitespace(text);

  NormalizedText out;
  out.original = std::string(raw);
  out.tokens = tokenize(text);
  out.chars = graphemes(text);
  out.language_hint = detect_language(text);
  out.canonical = std::move(text);
  return out;
}

}  // namespace ocreval::textnorm
