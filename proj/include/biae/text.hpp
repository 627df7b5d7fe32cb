#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biae::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Whitespace + punctuation tokenizer: runs of alphanumerics (plus apostrophes
// inside words) become tokens, every other non-space byte is its own token.
// Bytes >= 0x80 are treated as word characters so UTF-8 text survives intact.
std::vector<std::string> tokenize(std::string_view s, bool lowercase = true);

// Lowercased word tokens only (punctuation dropped).
std::vector<std::string> words(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace biae::text
