#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "redress/classifier.hpp"
#include "redress/embeddings.hpp"
#include "redress/errors.hpp"
#include "redress/keyboard.hpp"
#include "redress/ngram_lm.hpp"
#include "redress/pos.hpp"
#include "redress/text.hpp"

namespace redress {

enum class CandidateSource { word_synonym, char_edit, both };
enum class RankingStrategy { deletion_importance, saliency_weighted };

struct AttackSpec {
  CandidateSource candidate_source = CandidateSource::word_synonym;
  RankingStrategy ranking = RankingStrategy::deletion_importance;
  double min_cosine_sim = 0.5;
  bool pos_match = true;
  double max_perturb_ratio = 0.4;
  int max_candidates_per_word = 10;
  std::optional<std::uint64_t> query_budget;  // absent = unlimited
  double lm_filter_margin = 20.0;  // candidates may lower the total LM log-prob at most this much
  std::uint64_t seed = 0;
  std::string name = "custom";

  // Resources; word-synonym candidates require the store, the LM is optional.
  std::shared_ptr<const EmbeddingStore> store;
  std::shared_ptr<const LanguageModel> lm;
};

inline AttackSpec preset_attack_spec(const std::string& name) {
  AttackSpec spec;
  spec.name = name;
  if (name == "textfooler_like") {
    spec.candidate_source = CandidateSource::word_synonym;
    spec.ranking = RankingStrategy::deletion_importance;
    spec.pos_match = true;
  } else if (name == "pwws_like") {
    spec.candidate_source = CandidateSource::word_synonym;
    spec.ranking = RankingStrategy::saliency_weighted;
    spec.pos_match = true;
  } else if (name == "deepwordbug_like") {
    spec.candidate_source = CandidateSource::char_edit;
    spec.ranking = RankingStrategy::deletion_importance;
    spec.pos_match = false;
  } else if (name == "textbugger_like") {
    spec.candidate_source = CandidateSource::both;
    spec.ranking = RankingStrategy::deletion_importance;
    spec.pos_match = true;  // applies to the word-synonym side only
  } else {
    throw ConfigError("unknown attack preset: " + name);
  }
  return spec;
}

struct TrajectoryStep {
  std::string text;
  double true_label_prob = 0.0;
  std::string edit;  // empty for step 0, "kind@index:from->to" afterwards
};

// steps[0] is the clean input; each later step commits exactly one edit and
// strictly lowers the recorded true-label probability.
struct PerturbationTrajectory {
  std::string origin;
  int true_label = 0;
  std::vector<TrajectoryStep> steps;

  std::size_t edit_count() const { return steps.empty() ? 0 : steps.size() - 1; }
};

enum class AttackStatus { success, failed, skipped };

inline const char* to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::success: return "success";
    case AttackStatus::failed: return "failed";
    case AttackStatus::skipped: return "skipped";
  }
  return "failed";
}

inline AttackStatus attack_status_from_string(const std::string& s) {
  if (s == "success") return AttackStatus::success;
  if (s == "failed") return AttackStatus::failed;
  if (s == "skipped") return AttackStatus::skipped;
  throw ConfigError("unknown attack status: " + s);
}

struct AttackOutcome {
  AttackStatus status = AttackStatus::failed;
  std::string final_text;
  PerturbationTrajectory trajectory;
  std::uint64_t queries_used = 0;
};

inline std::string format_edit(const char* kind, std::size_t index, const std::string& from,
                               const std::string& to) {
  return std::string(kind) + "@" + std::to_string(index) + ":" + from + "->" + to;
}

struct ParsedEdit {
  std::string kind;
  std::size_t index = 0;
  std::string from, to;
};

inline ParsedEdit parse_edit(const std::string& edit) {
  ParsedEdit e;
  auto at = edit.find('@');
  auto colon = edit.find(':', at);
  auto arrow = edit.find("->", colon);
  if (at == std::string::npos || colon == std::string::npos || arrow == std::string::npos)
    throw ConfigError("unparseable edit description: " + edit);
  e.kind = edit.substr(0, at);
  e.index = static_cast<std::size_t>(std::stoull(edit.substr(at + 1, colon - at - 1)));
  e.from = edit.substr(colon + 1, arrow - colon - 1);
  e.to = edit.substr(arrow + 2);
  return e;
}

namespace detail {

// A candidate must survive tokenization as itself, otherwise replacing a
// token with it would change the token count and break the one-edit-per-step
// trajectory invariant.
inline bool single_token_form(const std::string& cand) {
  if (cand.empty()) return false;
  try {
    TokenizedText t = tokenize(cand, /*lowercase=*/true);
    return t.tokens.size() == 1 && t.tokens[0] == cand;
  } catch (const EmptyInputError&) {
    return false;
  }
}

inline std::vector<std::string> with_replacement(const std::vector<std::string>& tokens,
                                                 std::size_t index, const std::string& cand) {
  std::vector<std::string> out = tokens;
  out[index] = cand;
  return out;
}

inline std::vector<std::string> without_token(const std::vector<std::string>& tokens,
                                              std::size_t index) {
  std::vector<std::string> out;
  out.reserve(tokens.size() - 1);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (i != index) out.push_back(tokens[i]);
  return out;
}

inline std::size_t perturb_cap(double ratio, std::size_t n_tokens) {
  double raw = ratio * static_cast<double>(n_tokens);
  double c = std::ceil(raw - 1e-9);
  return c <= 0.0 ? 0 : static_cast<std::size_t>(c);
}

}  // namespace detail

// Word-synonym substitution candidates for one token: top neighbors above the
// cosine floor, optionally POS-matched in context and fluency-filtered by the
// LM margin. OOV tokens simply yield no candidates.
inline std::vector<std::string> generate_word_candidates(const EmbeddingStore& store,
                                                         const LanguageModel* lm,
                                                         const TokenizedText& t, std::size_t index,
                                                         const AttackSpec& spec) {
  const std::string& token = t.tokens.at(index);
  if (!store.contains(token)) return {};
  auto neighbors = store.nearest_neighbors(
      token, static_cast<std::size_t>(spec.max_candidates_per_word), spec.min_cosine_sim);

  std::vector<PosTag> base_tags;
  if (spec.pos_match) base_tags = pos_tag(t);
  double base_lm = 0.0;
  if (lm) base_lm = lm->score_tokens(std::span<const std::string>(t.tokens));

  std::vector<std::string> out;
  for (auto& [cand, sim] : neighbors) {
    if (cand == token || !detail::single_token_form(cand)) continue;
    auto candidate_tokens = detail::with_replacement(t.tokens, index, cand);
    if (spec.pos_match) {
      TokenizedText variant;
      variant.tokens = candidate_tokens;
      if (pos_tag(variant)[index] != base_tags[index]) continue;
    }
    if (lm) {
      double cand_lm = lm->score_tokens(std::span<const std::string>(candidate_tokens));
      if (cand_lm < base_lm - spec.lm_filter_margin) continue;
    }
    out.push_back(cand);
  }
  return out;
}

// Character-edit candidates from the four families: adjacent swap, single
// delete, single insert (repeating a neighbor char), and single substitute
// (keyboard-adjacent). Deterministic order: family, then position.
inline std::vector<std::string> generate_char_candidates(const TokenizedText& t, std::size_t index,
                                                         const AttackSpec& spec) {
  const std::string& tok = t.tokens.at(index);
  std::vector<std::string> raw;
  // adjacent swap
  for (std::size_t i = 0; i + 1 < tok.size(); ++i) {
    std::string c = tok;
    std::swap(c[i], c[i + 1]);
    raw.push_back(std::move(c));
  }
  // delete one
  for (std::size_t i = 0; i < tok.size(); ++i) raw.push_back(tok.substr(0, i) + tok.substr(i + 1));
  // insert one (repeat the char at that position)
  for (std::size_t i = 0; i < tok.size(); ++i) {
    std::string c = tok;
    c.insert(c.begin() + static_cast<std::ptrdiff_t>(i), tok[i]);
    raw.push_back(std::move(c));
  }
  // substitute one with a keyboard neighbor
  for (std::size_t i = 0; i < tok.size(); ++i) {
    for (char nb : keyboard_neighbors(tok[i])) {
      std::string c = tok;
      c[i] = nb;
      raw.push_back(std::move(c));
    }
  }

  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& cand : raw) {
    if (cand.empty() || cand == tok) continue;
    if (!seen.insert(cand).second) continue;
    if (!detail::single_token_form(cand)) continue;
    out.push_back(cand);
    if (out.size() >= static_cast<std::size_t>(spec.max_candidates_per_word)) break;
  }
  return out;
}

// Dispatch on the spec's candidate source. "both" interleaves the word and
// char pools so neither family starves under the per-word cap.
inline std::vector<std::string> generate_candidates(const TokenizedText& t, std::size_t index,
                                                    const AttackSpec& spec) {
  switch (spec.candidate_source) {
    case CandidateSource::word_synonym:
      if (!spec.store) throw ConfigError("word-synonym candidates need an embedding store");
      return generate_word_candidates(*spec.store, spec.lm.get(), t, index, spec);
    case CandidateSource::char_edit:
      return generate_char_candidates(t, index, spec);
    case CandidateSource::both: {
      if (!spec.store) throw ConfigError("word-synonym candidates need an embedding store");
      auto words = generate_word_candidates(*spec.store, spec.lm.get(), t, index, spec);
      auto chars = generate_char_candidates(t, index, spec);
      std::vector<std::string> out;
      std::set<std::string> seen;
      std::size_t cap = static_cast<std::size_t>(spec.max_candidates_per_word);
      for (std::size_t i = 0; i < std::max(words.size(), chars.size()) && out.size() < cap; ++i) {
        if (i < words.size() && seen.insert(words[i]).second) out.push_back(words[i]);
        if (out.size() >= cap) break;
        if (i < chars.size() && seen.insert(chars[i]).second) out.push_back(chars[i]);
      }
      return out;
    }
  }
  return {};
}

namespace detail {

// Deletion deltas against a known base probability; one query per token.
inline std::vector<double> deletion_deltas(const ClassifierHandle& handle,
                                           const std::vector<std::string>& tokens, int true_label,
                                           double base_prob) {
  std::vector<double> deltas(tokens.size(), 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string probe = detokenize(std::span<const std::string>(without_token(tokens, i)));
    auto r = handle.predict(probe);
    deltas[i] = base_prob - r.distribution[static_cast<std::size_t>(true_label)];
  }
  return deltas;
}

inline std::vector<std::pair<std::size_t, double>> order_by_score(std::vector<double> scores) {
  std::vector<std::pair<std::size_t, double>> ranked(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = {i, scores[i]};
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace detail

// Deletion-based word importance: importance(i) = P(y*|t) - P(y*|t minus
// token i). Issues exactly |tokens| + 1 queries.
inline std::vector<std::pair<std::size_t, double>> rank_word_importance(
    const ClassifierHandle& handle, const TokenizedText& t, int true_label) {
  if (t.empty()) throw EmptyInputError("cannot rank an empty text");
  double base = handle.predict(detokenize(t)).distribution[static_cast<std::size_t>(true_label)];
  return detail::order_by_score(detail::deletion_deltas(handle, t.tokens, true_label, base));
}

// PWWS-style ordering: softmax-normalized deletion saliency times the best
// substitution drop for that token. Issues (|tokens|+1) + sum of candidate
// counts queries.
inline std::vector<std::pair<std::size_t, double>> saliency_scores(const ClassifierHandle& handle,
                                                                   const TokenizedText& t,
                                                                   int true_label,
                                                                   const AttackSpec& spec) {
  if (t.empty()) throw EmptyInputError("cannot rank an empty text");
  double base = handle.predict(detokenize(t)).distribution[static_cast<std::size_t>(true_label)];
  auto saliency = detail::deletion_deltas(handle, t.tokens, true_label, base);
  auto weights = softmax(saliency);

  std::vector<double> scores(t.tokens.size(), 0.0);
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    double best_drop = 0.0;
    for (const auto& cand : generate_candidates(t, i, spec)) {
      std::string probe =
          detokenize(std::span<const std::string>(detail::with_replacement(t.tokens, i, cand)));
      auto r = handle.predict(probe);
      best_drop =
          std::max(best_drop, base - r.distribution[static_cast<std::size_t>(true_label)]);
    }
    scores[i] = weights[i] * best_drop;
  }
  return detail::order_by_score(scores);
}

// Greedy black-box attack. Walks tokens in ranking order, commits the
// candidate with the largest strictly positive true-label probability drop,
// and stops on a label flip, an exhausted ranking, the perturbation cap, or
// the query budget. Every committed step lowers the recorded probability, so
// the trajectory satisfies the monotone chain by construction.
inline AttackOutcome run_attack(const ClassifierHandle& handle, const std::string& text,
                                int true_label, const AttackSpec& spec) {
  if ((spec.candidate_source == CandidateSource::word_synonym ||
       spec.candidate_source == CandidateSource::both) &&
      !spec.store)
    throw ConfigError("attack spec uses word-synonym candidates but has no embedding store");
  if (spec.max_candidates_per_word < 1) throw ConfigError("max_candidates_per_word must be >= 1");

  AttackOutcome outcome;
  outcome.trajectory.origin = text;
  outcome.trajectory.true_label = true_label;

  std::uint64_t used = 0;
  bool budget_out = false;
  auto probe = [&](const std::string& probe_text,
                   bool initial = false) -> std::optional<PredictionResult> {
    if (!initial && spec.query_budget && used >= *spec.query_budget) {
      budget_out = true;
      return std::nullopt;
    }
    ++used;
    return handle.predict(probe_text);
  };

  // The initial check always runs; a skipped input costs exactly this query.
  auto base = *probe(text, /*initial=*/true);
  double cur_prob = base.distribution[static_cast<std::size_t>(true_label)];
  outcome.trajectory.steps.push_back({text, cur_prob, ""});

  if (base.predicted != true_label) {
    outcome.status = AttackStatus::skipped;
    outcome.final_text = text;
    outcome.queries_used = used;
    return outcome;
  }

  TokenizedText t = tokenize(text, /*lowercase=*/true);
  const std::size_t cap = detail::perturb_cap(spec.max_perturb_ratio, t.tokens.size());

  // Ranking phase (base probability reused from the initial check).
  std::vector<std::pair<std::size_t, double>> order;
  std::vector<std::string> preset_best;  // saliency mode commits precomputed picks
  if (spec.ranking == RankingStrategy::deletion_importance) {
    std::vector<double> deltas(t.tokens.size(), 0.0);
    for (std::size_t i = 0; i < t.tokens.size() && !budget_out; ++i) {
      auto r = probe(detokenize(
          std::span<const std::string>(detail::without_token(t.tokens, i))));
      if (!r) break;
      deltas[i] = cur_prob - r->distribution[static_cast<std::size_t>(true_label)];
    }
    order = detail::order_by_score(std::move(deltas));
  } else {
    std::vector<double> saliency(t.tokens.size(), 0.0);
    for (std::size_t i = 0; i < t.tokens.size() && !budget_out; ++i) {
      auto r = probe(detokenize(
          std::span<const std::string>(detail::without_token(t.tokens, i))));
      if (!r) break;
      saliency[i] = cur_prob - r->distribution[static_cast<std::size_t>(true_label)];
    }
    auto weights = softmax(saliency);
    std::vector<double> scores(t.tokens.size(), 0.0);
    preset_best.assign(t.tokens.size(), "");
    for (std::size_t i = 0; i < t.tokens.size() && !budget_out; ++i) {
      double best_drop = 0.0;
      for (const auto& cand : generate_candidates(t, i, spec)) {
        auto r = probe(detokenize(
            std::span<const std::string>(detail::with_replacement(t.tokens, i, cand))));
        if (!r) break;
        double drop = cur_prob - r->distribution[static_cast<std::size_t>(true_label)];
        if (drop > best_drop) {
          best_drop = drop;
          preset_best[i] = cand;
        }
      }
      scores[i] = weights[i] * best_drop;
    }
    order = detail::order_by_score(std::move(scores));
  }

  // Commit walk.
  std::vector<std::string> current = t.tokens;
  std::size_t edits = 0;
  bool flipped = false;
  for (const auto& [index, score] : order) {
    if (budget_out || flipped || edits >= cap) break;

    std::vector<std::string> candidates;
    if (spec.ranking == RankingStrategy::saliency_weighted) {
      if (preset_best[index].empty()) continue;
      candidates.push_back(preset_best[index]);
    } else {
      TokenizedText cur_view;
      cur_view.tokens = current;
      candidates = generate_candidates(cur_view, index, spec);
    }
    if (candidates.empty()) continue;

    double best_drop = 0.0;
    std::string best_cand;
    PredictionResult best_result;
    std::string best_text;
    for (const auto& cand : candidates) {
      auto variant = detail::with_replacement(current, index, cand);
      std::string variant_text = detokenize(std::span<const std::string>(variant));
      auto r = probe(variant_text);
      if (!r) break;
      double drop = cur_prob - r->distribution[static_cast<std::size_t>(true_label)];
      if (drop > best_drop) {
        best_drop = drop;
        best_cand = cand;
        best_result = *r;
        best_text = std::move(variant_text);
      }
    }
    if (best_drop <= 0.0) continue;

    const char* kind =
        spec.candidate_source == CandidateSource::char_edit
            ? "char"
            : (spec.candidate_source == CandidateSource::both && !spec.store->contains(best_cand)
                   ? "char"
                   : "word");
    std::string from = current[index];
    current[index] = best_cand;
    cur_prob = best_result.distribution[static_cast<std::size_t>(true_label)];
    outcome.trajectory.steps.push_back(
        {best_text, cur_prob, format_edit(kind, index, from, best_cand)});
    ++edits;
    if (best_result.predicted != true_label) flipped = true;
  }

  outcome.status = flipped ? AttackStatus::success : AttackStatus::failed;
  outcome.final_text = outcome.trajectory.steps.back().text;
  outcome.queries_used = used;
  return outcome;
}

struct TrajectoryValidation {
  bool ok = true;
  std::size_t violation_step = 0;
  std::string reason;
};

// Re-queries the classifier at every step and checks the recorded
// probabilities (within 1e-9), the strict monotone decrease, and that
// consecutive steps differ by exactly one token.
inline TrajectoryValidation validate_trajectory(const ClassifierHandle& handle,
                                                const PerturbationTrajectory& traj) {
  TrajectoryValidation v;
  auto fail = [&](std::size_t step, std::string reason) {
    v.ok = false;
    v.violation_step = step;
    v.reason = std::move(reason);
    return v;
  };

  std::vector<std::string> prev_tokens;
  for (std::size_t s = 0; s < traj.steps.size(); ++s) {
    const auto& step = traj.steps[s];
    auto fresh = handle.predict(step.text);
    double p = fresh.distribution[static_cast<std::size_t>(traj.true_label)];
    if (std::abs(p - step.true_label_prob) > 1e-9)
      return fail(s, "recorded probability does not match a fresh prediction");
    if (s > 0 && !(step.true_label_prob < traj.steps[s - 1].true_label_prob))
      return fail(s, "true-label probability did not strictly decrease");

    std::vector<std::string> tokens = tokenize(step.text, /*lowercase=*/true).tokens;
    if (s > 0) {
      if (tokens.size() != prev_tokens.size()) return fail(s, "token count changed");
      std::size_t diffs = 0;
      for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i] != prev_tokens[i]) ++diffs;
      if (diffs != 1) return fail(s, "step differs from predecessor by " +
                                         std::to_string(diffs) + " tokens, expected 1");
    }
    prev_tokens = std::move(tokens);
  }
  return v;
}

struct OracleResult {
  std::string adversarial_text;
  std::size_t edits = 0;
};

// Exhaustive minimum-edit search over per-token substitution sets, for
// cross-checking the greedy engine on small instances. Guarded so it cannot
// blow up: at most 8 tokens and 4 candidates per token.
inline std::optional<OracleResult> oracle_min_attack(
    const ClassifierHandle& handle, const std::string& text, int true_label,
    const std::vector<std::vector<std::string>>& candidates_per_token, std::size_t max_edits) {
  TokenizedText t = tokenize(text, /*lowercase=*/true);
  if (t.tokens.size() > 8) throw ConfigError("oracle guard: more than 8 tokens");
  if (candidates_per_token.size() != t.tokens.size())
    throw ConfigError("oracle needs one candidate set per token");
  for (const auto& set : candidates_per_token)
    if (set.size() > 4) throw ConfigError("oracle guard: more than 4 candidates for a token");

  if (handle.predict(text).predicted != true_label)
    return OracleResult{text, 0};

  const std::size_t n = t.tokens.size();
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;

  // All index subsets of a given size, lexicographic.
  std::vector<std::size_t> subset;
  std::optional<OracleResult> found;

  auto try_assignments = [&](const std::vector<std::size_t>& chosen) -> bool {
    std::vector<std::size_t> counter(chosen.size(), 0);
    while (true) {
      std::vector<std::string> tokens = t.tokens;
      for (std::size_t j = 0; j < chosen.size(); ++j)
        tokens[chosen[j]] = candidates_per_token[chosen[j]][counter[j]];
      std::string probe = detokenize(std::span<const std::string>(tokens));
      if (handle.predict(probe).predicted != true_label) {
        found = OracleResult{probe, chosen.size()};
        return true;
      }
      std::size_t j = 0;
      for (; j < chosen.size(); ++j) {
        if (++counter[j] < candidates_per_token[chosen[j]].size()) break;
        counter[j] = 0;
      }
      if (j == chosen.size()) return false;
    }
  };

  std::function<bool(std::size_t, std::size_t)> enumerate = [&](std::size_t start,
                                                                std::size_t remaining) -> bool {
    if (remaining == 0) {
      for (std::size_t idx : subset)
        if (candidates_per_token[idx].empty()) return false;
      return try_assignments(subset);
    }
    for (std::size_t i = start; i + remaining <= n + 0; ++i) {
      if (i >= n) break;
      subset.push_back(i);
      bool hit = enumerate(i + 1, remaining - 1);
      subset.pop_back();
      if (hit) return true;
    }
    return false;
  };

  for (std::size_t e = 1; e <= std::min(max_edits, n); ++e) {
    if (enumerate(0, e)) return found;
  }
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Trajectory JSONL persistence.

inline nlohmann::ordered_json outcome_to_json(const AttackOutcome& o) {
  nlohmann::ordered_json j;
  j["origin"] = o.trajectory.origin;
  j["true_label"] = o.trajectory.true_label;
  j["status"] = to_string(o.status);
  j["queries"] = o.queries_used;
  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : o.trajectory.steps) {
    nlohmann::ordered_json js;
    js["text"] = s.text;
    js["prob"] = s.true_label_prob;
    js["edit"] = s.edit;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline AttackOutcome outcome_from_json(const nlohmann::json& j) {
  AttackOutcome o;
  o.trajectory.origin = j.at("origin").get<std::string>();
  o.trajectory.true_label = j.at("true_label").get<int>();
  o.status = attack_status_from_string(j.at("status").get<std::string>());
  o.queries_used = j.at("queries").get<std::uint64_t>();
  for (const auto& js : j.at("steps")) {
    TrajectoryStep s;
    s.text = js.at("text").get<std::string>();
    s.true_label_prob = js.at("prob").get<double>();
    s.edit = js.value("edit", std::string());
    o.trajectory.steps.push_back(std::move(s));
  }
  if (!o.trajectory.steps.empty()) o.final_text = o.trajectory.steps.back().text;
  return o;
}

inline void write_trajectories(const std::filesystem::path& path,
                               std::span<const AttackOutcome> outcomes) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectories to " + path.string());
  for (const auto& o : outcomes) out << outcome_to_json(o).dump() << '\n';
}

inline std::vector<AttackOutcome> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory file: " + path.string());
  std::vector<AttackOutcome> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(outcome_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad trajectory line: ") + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace redress
