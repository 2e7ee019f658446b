#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ipmine/corpus.hpp"
#include "ipmine/tokenizer.hpp"

namespace ipmine {

// Context words taken on each side of a dot-decimal candidate.
struct WordRange {
  explicit WordRange(int words) : value(words) {
    if (words < 1) throw std::invalid_argument("WordRange must be >= 1");
  }
  int value;
};

// A dot-decimal span inside a post together with its parsed octets and the
// surrounding token windows (at most W tokens per side).
struct Candidate {
  std::string post_id;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
  std::string raw;
  std::array<int, 4> octets{};
  std::vector<Token> context_before;
  std::vector<Token> context_after;
};

// Parses exactly four dot-separated decimal fields, each in [0, 255]. Leading
// zeros are allowed ("010" parses to 10); anything else yields nullopt.
inline std::optional<std::array<int, 4>> parse_dotted_quad(std::string_view s) {
  std::array<int, 4> octets{};
  std::size_t field = 0;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (field < 4) {
    if (i >= n || !detail::is_ascii_digit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    int value = 0;
    while (i < n && detail::is_ascii_digit(static_cast<unsigned char>(s[i]))) {
      value = value * 10 + (s[i] - '0');
      if (value > 255) return std::nullopt;
      ++i;
    }
    octets[field++] = value;
    if (field < 4) {
      if (i >= n || s[i] != '.') return std::nullopt;
      ++i;
    }
  }
  if (i != n) return std::nullopt;
  return octets;
}

inline std::string format_quad(const std::array<int, 4>& octets) {
  return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." +
         std::to_string(octets[2]) + "." + std::to_string(octets[3]);
}

// Canonical dotted-quad form with per-octet leading zeros stripped, or nullopt
// when the input is not a dot-decimal.
inline std::optional<std::string> normalize_address(std::string_view s) {
  const auto octets = parse_dotted_quad(s);
  if (!octets) return std::nullopt;
  return format_quad(*octets);
}

// Up to W tokens immediately before/after `candidate_index`, truncated at the
// post boundaries. The candidate token itself is excluded.
inline std::pair<std::vector<Token>, std::vector<Token>> context_window(
    std::span<const Token> tokens, std::size_t candidate_index, WordRange word_range) {
  if (candidate_index >= tokens.size())
    throw std::out_of_range("context_window: candidate_index out of range");
  const std::size_t w = static_cast<std::size_t>(word_range.value);
  const std::size_t lo = candidate_index >= w ? candidate_index - w : 0;
  std::vector<Token> before(tokens.begin() + lo, tokens.begin() + candidate_index);
  const std::size_t hi = std::min(tokens.size(), candidate_index + 1 + w);
  std::vector<Token> after(tokens.begin() + candidate_index + 1, tokens.begin() + hi);
  return {std::move(before), std::move(after)};
}

namespace detail {

inline bool is_digit_or_dot(unsigned char c) { return is_ascii_digit(c) || c == '.'; }

}  // namespace detail

// One Candidate per token that is exactly a four-field dot-decimal with every
// field in [0, 255]. Tokens abutted by a digit or dot in the raw body (e.g.
// the "1.2.3.4" inside "1.2.3.4..5") are rejected; five-field version strings
// never match because they tokenize as a single five-field token.
inline std::vector<Candidate> extract_candidates(const Post& post, WordRange word_range) {
  const std::vector<Token> tokens = tokenize(post.body);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& tok = tokens[i];
    const auto octets = parse_dotted_quad(tok.text);
    if (!octets) continue;
    if (tok.begin > 0 &&
        detail::is_digit_or_dot(static_cast<unsigned char>(post.body[tok.begin - 1])))
      continue;
    if (tok.end < post.body.size() &&
        detail::is_digit_or_dot(static_cast<unsigned char>(post.body[tok.end])))
      continue;

    Candidate c;
    c.post_id = post.post_id;
    c.span_start = tok.begin;
    c.span_end = tok.end;
    c.raw = post.body.substr(tok.begin, tok.end - tok.begin);
    c.octets = *octets;
    auto [before, after] = context_window(tokens, i, word_range);
    c.context_before = std::move(before);
    c.context_after = std::move(after);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace ipmine
