#include "dstal/text.hpp"

#include <cctype>

namespace dstal {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string normalize_value(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(lower(c));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (is_alnum(c)) {
      current.push_back(lower(c));
    } else if (c == ':' && !current.empty() && is_digit(current.back()) && i + 1 < text.size() &&
               is_digit(text[i + 1])) {
      current.push_back(':');
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string token_line(const std::vector<std::string>& tokens) {
  std::string line = " ";
  for (const auto& t : tokens) {
    line += t;
    line.push_back(' ');
  }
  return line;
}

bool is_time_token(std::string_view token) {
  auto colon = token.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 2) return false;
  if (token.size() - colon - 1 != 2) return false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (i != colon && !is_digit(token[i])) return false;
  }
  return true;
}

}  // namespace dstal
