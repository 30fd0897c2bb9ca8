#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace relfilter::utf8 {

using Codepoint = char32_t;

inline constexpr Codepoint kReplacement = 0xFFFD;

// Invalid or truncated sequences decode to U+FFFD, one per offending byte.
std::vector<Codepoint> decode(std::string_view text);
void append(std::string& out, Codepoint cp);
std::string encode(const std::vector<Codepoint>& cps);

bool is_whitespace(Codepoint cp);
// ASCII and Arabic punctuation, Latin-1 and general punctuation, CJK and
// fullwidth punctuation. Zero-width joiners and format characters are not
// punctuation.
bool is_punctuation(Codepoint cp);
// ASCII, Arabic-Indic and Extended Arabic-Indic digits.
bool is_digit(Codepoint cp);
// Approximate letter class without a Unicode database: ASCII letters and any
// non-ASCII codepoint that is not whitespace, punctuation, a digit, a combining
// or format mark, an emoji/symbol, or private use.
bool is_letter(Codepoint cp);

}  // namespace relfilter::utf8
