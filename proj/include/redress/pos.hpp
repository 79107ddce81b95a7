#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "redress/text.hpp"

namespace redress {

enum class PosTag { NOUN, VERB, ADJ, ADV, OTHER };

inline const char* to_string(PosTag t) {
  switch (t) {
    case PosTag::NOUN: return "NOUN";
    case PosTag::VERB: return "VERB";
    case PosTag::ADJ: return "ADJ";
    case PosTag::ADV: return "ADV";
    case PosTag::OTHER: return "OTHER";
  }
  return "OTHER";
}

namespace detail {

inline const std::unordered_map<std::string, PosTag>& pos_lexicon() {
  static const std::unordered_map<std::string, PosTag> lex = {
      // function words
      {"the", PosTag::OTHER},   {"a", PosTag::OTHER},      {"an", PosTag::OTHER},
      {"and", PosTag::OTHER},   {"or", PosTag::OTHER},     {"but", PosTag::OTHER},
      {"of", PosTag::OTHER},    {"in", PosTag::OTHER},     {"on", PosTag::OTHER},
      {"at", PosTag::OTHER},    {"to", PosTag::OTHER},     {"for", PosTag::OTHER},
      {"with", PosTag::OTHER},  {"by", PosTag::OTHER},     {"from", PosTag::OTHER},
      {"as", PosTag::OTHER},    {"it", PosTag::OTHER},     {"its", PosTag::OTHER},
      {"this", PosTag::OTHER},  {"that", PosTag::OTHER},   {"these", PosTag::OTHER},
      {"those", PosTag::OTHER}, {"he", PosTag::OTHER},     {"she", PosTag::OTHER},
      {"they", PosTag::OTHER},  {"we", PosTag::OTHER},     {"you", PosTag::OTHER},
      {"i", PosTag::OTHER},     {"his", PosTag::OTHER},    {"her", PosTag::OTHER},
      {"their", PosTag::OTHER}, {"our", PosTag::OTHER},    {"not", PosTag::OTHER},
      {"no", PosTag::OTHER},    {"if", PosTag::OTHER},     {"than", PosTag::OTHER},
      {"then", PosTag::OTHER},  {"so", PosTag::OTHER},     {"because", PosTag::OTHER},
      {"while", PosTag::OTHER}, {"into", PosTag::OTHER},   {"about", PosTag::OTHER},
      // frequent verbs
      {"is", PosTag::VERB},     {"are", PosTag::VERB},     {"was", PosTag::VERB},
      {"were", PosTag::VERB},   {"be", PosTag::VERB},      {"been", PosTag::VERB},
      {"has", PosTag::VERB},    {"have", PosTag::VERB},    {"had", PosTag::VERB},
      {"do", PosTag::VERB},     {"does", PosTag::VERB},    {"did", PosTag::VERB},
      {"say", PosTag::VERB},    {"says", PosTag::VERB},    {"go", PosTag::VERB},
      {"goes", PosTag::VERB},   {"make", PosTag::VERB},    {"makes", PosTag::VERB},
      {"get", PosTag::VERB},    {"gets", PosTag::VERB},    {"see", PosTag::VERB},
      {"sees", PosTag::VERB},   {"know", PosTag::VERB},    {"take", PosTag::VERB},
      {"feel", PosTag::VERB},   {"feels", PosTag::VERB},   {"felt", PosTag::VERB},
      {"look", PosTag::VERB},   {"looks", PosTag::VERB},   {"seem", PosTag::VERB},
      {"seems", PosTag::VERB},  {"can", PosTag::VERB},     {"will", PosTag::VERB},
      {"would", PosTag::VERB},  {"could", PosTag::VERB},   {"should", PosTag::VERB},
      // frequent adjectives
      {"good", PosTag::ADJ},    {"bad", PosTag::ADJ},      {"great", PosTag::ADJ},
      {"poor", PosTag::ADJ},    {"big", PosTag::ADJ},      {"small", PosTag::ADJ},
      {"new", PosTag::ADJ},     {"old", PosTag::ADJ},      {"long", PosTag::ADJ},
      {"short", PosTag::ADJ},   {"best", PosTag::ADJ},     {"worst", PosTag::ADJ},
      {"fine", PosTag::ADJ},    {"dull", PosTag::ADJ},     {"awful", PosTag::ADJ},
      {"terrible", PosTag::ADJ},{"strong", PosTag::ADJ},   {"weak", PosTag::ADJ},
      {"happy", PosTag::ADJ},   {"sad", PosTag::ADJ},      {"true", PosTag::ADJ},
      {"wrong", PosTag::ADJ},   {"right", PosTag::ADJ},    {"high", PosTag::ADJ},
      {"low", PosTag::ADJ},     {"full", PosTag::ADJ},     {"real", PosTag::ADJ},
      // frequent adverbs
      {"very", PosTag::ADV},    {"too", PosTag::ADV},      {"also", PosTag::ADV},
      {"just", PosTag::ADV},    {"never", PosTag::ADV},    {"always", PosTag::ADV},
      {"often", PosTag::ADV},   {"again", PosTag::ADV},    {"here", PosTag::ADV},
      {"there", PosTag::ADV},   {"now", PosTag::ADV},      {"still", PosTag::ADV},
      {"well", PosTag::ADV},    {"even", PosTag::ADV},     {"quite", PosTag::ADV},
      // frequent nouns
      {"movie", PosTag::NOUN},  {"film", PosTag::NOUN},    {"story", PosTag::NOUN},
      {"time", PosTag::NOUN},   {"way", PosTag::NOUN},     {"day", PosTag::NOUN},
      {"man", PosTag::NOUN},    {"woman", PosTag::NOUN},   {"world", PosTag::NOUN},
      {"life", PosTag::NOUN},   {"year", PosTag::NOUN},    {"people", PosTag::NOUN},
      {"plot", PosTag::NOUN},   {"actor", PosTag::NOUN},   {"scene", PosTag::NOUN},
      {"news", PosTag::NOUN},   {"work", PosTag::NOUN},    {"thing", PosTag::NOUN},
  };
  return lex;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool all_alpha(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalpha(static_cast<unsigned char>(c))) return false;
  return true;
}

inline PosTag tag_token(const std::string& tok) {
  if (!all_alpha(tok)) return PosTag::OTHER;
  const auto& lex = pos_lexicon();
  if (auto it = lex.find(tok); it != lex.end()) return it->second;
  if (tok.size() > 3) {
    if (ends_with(tok, "ly")) return PosTag::ADV;
    for (std::string_view s : {"ing", "ed", "ize", "ise", "ify", "ate"})
      if (ends_with(tok, s)) return PosTag::VERB;
    for (std::string_view s : {"ous", "ful", "ive", "able", "ible", "ish", "less", "ic", "al"})
      if (ends_with(tok, s)) return PosTag::ADJ;
    for (std::string_view s :
         {"tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism", "ist", "hood"})
      if (ends_with(tok, s)) return PosTag::NOUN;
  }
  return PosTag::OTHER;
}

}  // namespace detail

// Deterministic lexicon+suffix tagger over the coarse 5-tag set. Tokens the
// rules don't cover come back OTHER.
inline std::vector<PosTag> pos_tag(const TokenizedText& t) {
  std::vector<PosTag> tags;
  tags.reserve(t.tokens.size());
  for (const auto& tok : t.tokens) tags.push_back(detail::tag_token(tok));
  return tags;
}

}  // namespace redress
