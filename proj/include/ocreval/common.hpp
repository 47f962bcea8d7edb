#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ocreval {

enum class Scenario { document, scene, handwritten };
enum class Language { en, zh, mixed };
enum class Granularity { line, paragraph, page };

std::string_view to_string(Scenario s);
std::string_view to_string(Language l);
std::string_view to_string(Granularity g);

std::optional<Scenario> parse_scenario(std::string_view s);
std::optional<Language> parse_language(std::string_view s);
std::optional<Granularity> parse_granularity(std::string_view s);

// Base for every error the library reports; callers that only care about
// "something went wrong with the inputs" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration (run config, adapter config, metric params).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Formats a double with a fixed number of decimals, locale-independent.
std::string format_fixed(double value, int decimals);

// Shortest decimal string that parses back to exactly `value`.
std::string format_roundtrip(double value);

}  // namespace ocreval
