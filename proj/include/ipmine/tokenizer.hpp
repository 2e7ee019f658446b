#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ipmine {

// One token of a post body. `text` is lowercased; the span is in byte offsets
// into the original body, half-open [begin, end).
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

namespace detail {

inline bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Bytes >= 0x80 (UTF-8 continuation/lead bytes) count as word bytes so that
// non-ASCII words survive as whole tokens.
inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

// Splits on whitespace and punctuation. A dot stays inside a token only when
// it sits between two digits, which keeps dot-decimal expressions intact while
// URL separators (`://`, `/`) and sentence punctuation split as usual.
inline std::vector<Token> tokenize(std::string_view body) {
  using detail::is_ascii_digit;
  using detail::is_word_byte;

  std::vector<Token> tokens;
  const std::size_t n = body.size();
  std::size_t i = 0;
  while (i < n) {
    if (!is_word_byte(static_cast<unsigned char>(body[i]))) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < n) {
      const unsigned char c = static_cast<unsigned char>(body[i]);
      if (is_word_byte(c)) {
        ++i;
        continue;
      }
      if (c == '.' && i > begin &&
          is_ascii_digit(static_cast<unsigned char>(body[i - 1])) &&
          i + 1 < n && is_ascii_digit(static_cast<unsigned char>(body[i + 1]))) {
        ++i;
        continue;
      }
      break;
    }
    std::string text;
    text.reserve(i - begin);
    for (std::size_t k = begin; k < i; ++k) text.push_back(detail::ascii_lower(body[k]));
    tokens.push_back(Token{std::move(text), begin, i});
  }
  return tokens;
}

}  // namespace ipmine
