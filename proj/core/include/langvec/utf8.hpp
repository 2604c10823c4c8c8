#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace langvec::utf8 {

/// Decodes UTF-8 into Unicode scalar values. Returns nullopt on malformed
/// input (overlongs, surrogates, truncated sequences, values above U+10FFFF).
std::optional<std::u32string> decode(std::string_view text);

/// Like `decode` but throws ParseError mentioning `where`.
std::u32string decode_or_throw(std::string_view text, std::string_view where);

void append(std::string& out, char32_t scalar);
std::string encode(std::u32string_view scalars);

}  // namespace langvec::utf8
