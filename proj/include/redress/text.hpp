#pragma once

#include <cctype>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "redress/errors.hpp"

namespace redress {

struct TokenSpan {
  std::size_t begin = 0;  // character offset into the raw string
  std::size_t end = 0;    // exclusive
};

// A sentence as the attack and rewrite machinery sees it: surface tokens plus
// the character spans they came from. Immutable by convention after creation.
struct TokenizedText {
  std::string raw;
  std::vector<std::string> tokens;
  std::vector<TokenSpan> offsets;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline bool all_punct(std::string_view tok) {
  if (tok.empty()) return false;
  for (char c : tok)
    if (!is_punct(c)) return false;
  return true;
}

inline bool closing_punct(std::string_view tok) {
  if (!all_punct(tok)) return false;
  constexpr std::string_view closers = ".,!?;:%)]}'\"";
  return closers.find(tok.front()) != std::string_view::npos;
}

inline bool opening_punct(std::string_view tok) {
  if (!all_punct(tok)) return false;
  constexpr std::string_view openers = "([{";
  return openers.find(tok.front()) != std::string_view::npos;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

// Collapses whitespace runs to single spaces and trims the ends.
inline std::string whitespace_normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

// Splits on whitespace, then peels leading/trailing ASCII punctuation off each
// chunk into tokens of their own ("movie." -> "movie", "."). Internal
// punctuation (hyphens, apostrophes) stays inside the token. Offsets always
// index the original raw string, even when lowercase is requested.
inline TokenizedText tokenize(std::string_view raw, bool lowercase = true) {
  TokenizedText t;
  t.raw.assign(raw);

  auto emit = [&](std::size_t begin, std::size_t end) {
    std::string_view surf = raw.substr(begin, end - begin);
    t.tokens.push_back(lowercase ? detail::lower(surf) : std::string(surf));
    t.offsets.push_back({begin, end});
  };

  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    while (i < n && detail::is_space(raw[i])) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !detail::is_space(raw[j])) ++j;
    // chunk is raw[i, j)
    std::size_t head = i;
    while (head < j && detail::is_punct(raw[head])) {
      emit(head, head + 1);
      ++head;
    }
    std::size_t tail = j;
    while (tail > head && detail::is_punct(raw[tail - 1])) --tail;
    if (head < tail) emit(head, tail);
    for (std::size_t p = tail; p < j; ++p) emit(p, p + 1);
    i = j;
  }

  if (t.tokens.empty()) throw EmptyInputError("cannot tokenize empty or whitespace-only input");
  return t;
}

// Joins tokens with single spaces; no space before closing punctuation or
// after an opener, so tokenize/detokenize round-trips on ordinary sentences.
inline std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !detail::closing_punct(tokens[i]) && !detail::opening_punct(tokens[i - 1]))
      out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

inline std::string detokenize(const TokenizedText& t) {
  return detokenize(std::span<const std::string>(t.tokens));
}

// Canonical surface form used when two texts must compare as token sequences.
inline std::string canonical_text(std::string_view s, bool lowercase = true) {
  return detokenize(tokenize(s, lowercase));
}

}  // namespace redress
