#include "ocreval/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace ocreval {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::document: return "document";
    case Scenario::scene: return "scene";
    case Scenario::handwritten: return "handwritten";
  }
  return "?";
}

std::string_view to_string(Language l) {
  switch (l) {
    case Language::en: return "en";
    case Language::zh: return "zh";
    case Language::mixed: return "mixed";
  }
  return "?";
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::line: return "line";
    case Granularity::paragraph: return "paragraph";
    case Granularity::page: return "page";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view s) {
  if (s == "document") return Scenario::document;
  if (s == "scene") return Scenario::scene;
  if (s == "handwritten") return Scenario::handwritten;
  return std::nullopt;
}

std::optional<Language> parse_language(std::string_view s) {
  if (s == "en") return Language::en;
  if (s == "zh") return Language::zh;
  if (s == "mixed") return Language::mixed;
  return std::nullopt;
}

std::optional<Granularity> parse_granularity(std::string_view s) {
  if (s == "line") return Granularity::line;
  if (s == "paragraph") return Granularity::paragraph;
  if (s == "page") return Granularity::page;
  return std::nullopt;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  // %.*f is locale-sensitive only in the decimal separator; the CLI never
  // calls setlocale, so this stays "C".
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string out(buf);
  if (out.starts_with("-") && std::stod(out) == 0.0) out.erase(0, 1);
  return out;
}

std::string format_roundtrip(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return format_fixed(value, 17);
  return std::string(buf, end);
}

}  // namespace ocreval
