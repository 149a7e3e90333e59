#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace adgv {

// Lowercase, collapse runs of whitespace, trim, and strip trailing
// punctuation. This is the equality used for seen-sets and de-duplication.
std::string normalize(std::string_view text);

// Whitespace tokens of the normalized text.
std::vector<std::string> tokenize(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

std::string hex64(std::uint64_t value);

}  // namespace adgv
