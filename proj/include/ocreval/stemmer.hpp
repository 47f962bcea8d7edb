#pragma once

#include <string>
#include <string_view>

namespace ocreval::metrics {

// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
// Words shorter than three letters are returned unchanged, as in the
// original algorithm.
std::string porter_stem(std::string_view word);

}  // namespace ocreval::metrics
