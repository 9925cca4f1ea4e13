#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dstal {

// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize_value(std::string_view raw);

// Lowercase word tokens split on non-alphanumerics. A colon between two
// digits is kept so that times like "14:00" stay a single token.
std::vector<std::string> tokenize(std::string_view text);

// Tokens joined by single spaces and padded with one space on each side,
// so that token-aligned containment is a plain substring search.
std::string token_line(const std::vector<std::string>& tokens);

// True for tokens shaped like H:MM or HH:MM.
bool is_time_token(std::string_view token);

}  // namespace dstal
