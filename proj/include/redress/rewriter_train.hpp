#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "redress/attack.hpp"
#include "redress/defense.hpp"
#include "redress/embeddings.hpp"
#include "redress/errors.hpp"
#include "redress/ngram_lm.hpp"
#include "redress/rng.hpp"
#include "redress/text.hpp"

namespace redress {

enum class PairOrigin { adversarial_step, identity, synthetic };

inline const char* to_string(PairOrigin o) {
  switch (o) {
    case PairOrigin::adversarial_step: return "adversarial-step";
    case PairOrigin::identity: return "identity";
    case PairOrigin::synthetic: return "synthetic";
  }
  return "identity";
}

inline PairOrigin pair_origin_from_string(const std::string& s) {
  if (s == "adversarial-step") return PairOrigin::adversarial_step;
  if (s == "identity") return PairOrigin::identity;
  if (s == "synthetic") return PairOrigin::synthetic;
  throw ConfigError("unknown pair origin: " + s);
}

// One supervision example for the rewriter: map source back to target.
struct RewritePair {
  std::string source;
  std::string target;
  PairOrigin origin = PairOrigin::identity;
  std::optional<int> step_index;
};

struct TrainingManifest {
  std::size_t adversarial_pairs = 0;  // pre-dedup counts by origin
  std::size_t identity_pairs = 0;
  std::size_t synthetic_pairs = 0;
  std::size_t total_before_dedup = 0;
  std::size_t total_after_dedup = 0;
  std::size_t duplicates_removed = 0;
  std::size_t alignment_skipped = 0;
  std::uint64_t source_digest = 0;
  std::uint64_t seed = 0;
  double holdout_ratio = 0.1;

  nlohmann::json to_json() const {
    return nlohmann::json{{"adversarial_pairs", adversarial_pairs},
                          {"identity_pairs", identity_pairs},
                          {"synthetic_pairs", synthetic_pairs},
                          {"total_before_dedup", total_before_dedup},
                          {"total_after_dedup", total_after_dedup},
                          {"duplicates_removed", duplicates_removed},
                          {"alignment_skipped", alignment_skipped},
                          {"source_digest", source_digest},
                          {"seed", seed},
                          {"holdout_ratio", holdout_ratio}};
  }

  static TrainingManifest from_json(const nlohmann::json& j) {
    TrainingManifest m;
    m.adversarial_pairs = j.value("adversarial_pairs", std::size_t{0});
    m.identity_pairs = j.value("identity_pairs", std::size_t{0});
    m.synthetic_pairs = j.value("synthetic_pairs", std::size_t{0});
    m.total_before_dedup = j.value("total_before_dedup", std::size_t{0});
    m.total_after_dedup = j.value("total_after_dedup", std::size_t{0});
    m.duplicates_removed = j.value("duplicates_removed", std::size_t{0});
    m.alignment_skipped = j.value("alignment_skipped", std::size_t{0});
    m.source_digest = j.value("source_digest", std::uint64_t{0});
    m.seed = j.value("seed", std::uint64_t{0});
    m.holdout_ratio = j.value("holdout_ratio", 0.1);
    return m;
  }
};

// Builds rewriter supervision from attack episodes: for every successful
// trajectory x -> x1 -> ... -> xk, emit (xi, x) for each step plus one
// identity pair (x, x). Failed episodes contribute their intermediate steps
// only when include_failed is set; their identity pair is always kept. Exact
// duplicates are removed, with pre-dedup counts recorded in the manifest.
inline std::pair<std::vector<RewritePair>, TrainingManifest> build_training_pairs(
    std::span<const AttackOutcome> outcomes, bool include_failed = false) {
  std::vector<RewritePair> pairs;
  TrainingManifest manifest;
  std::uint64_t digest = 0xcbf29ce484222325ULL;

  for (const auto& o : outcomes) {
    if (o.trajectory.steps.empty()) continue;
    const std::string& origin_text = o.trajectory.steps.front().text;
    digest = mix_seed(digest, fnv1a(origin_text));

    bool emit_steps = o.status == AttackStatus::success ||
                      (include_failed && o.status == AttackStatus::failed);
    if (emit_steps) {
      for (std::size_t i = 1; i < o.trajectory.steps.size(); ++i) {
        pairs.push_back({o.trajectory.steps[i].text, origin_text, PairOrigin::adversarial_step,
                         static_cast<int>(i)});
        ++manifest.adversarial_pairs;
      }
    }
    pairs.push_back({origin_text, origin_text, PairOrigin::identity, std::nullopt});
    ++manifest.identity_pairs;
  }

  manifest.total_before_dedup = pairs.size();
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<RewritePair> deduped;
  deduped.reserve(pairs.size());
  for (auto& p : pairs) {
    if (seen.insert({p.source, p.target}).second) deduped.push_back(std::move(p));
  }
  manifest.total_after_dedup = deduped.size();
  manifest.duplicates_removed = manifest.total_before_dedup - manifest.total_after_dedup;
  manifest.source_digest = digest;
  return {std::move(deduped), manifest};
}

// Denoising pre-training corpus: per sentence, substitute exactly
// ceil(rate * in-vocabulary tokens) positions with a uniformly drawn member
// of each token's top-k neighbor list. Byte-reproducible given the seed;
// each sentence draws from its own derived stream.
inline std::vector<RewritePair> synthesize_pretraining_corpus(
    const std::vector<std::string>& sentences, const EmbeddingStore& store, double rate,
    int k_neighbors, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ConfigError("substitution rate must be in [0, 1]");
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");

  std::vector<RewritePair> pairs;
  pairs.reserve(sentences.size());
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    TokenizedText t;
    try {
      t = tokenize(sentences[si], /*lowercase=*/true);
    } catch (const EmptyInputError&) {
      continue;
    }
    std::string target = detokenize(t);

    std::vector<std::size_t> in_vocab;
    for (std::size_t i = 0; i < t.tokens.size(); ++i)
      if (store.contains(t.tokens[i])) in_vocab.push_back(i);

    std::size_t n_sub = static_cast<std::size_t>(
        std::max(0.0, std::ceil(rate * static_cast<double>(in_vocab.size()) - 1e-9)));
    if (in_vocab.empty() || n_sub == 0) {
      pairs.push_back({target, target,
                       in_vocab.empty() ? PairOrigin::identity : PairOrigin::synthetic,
                       std::nullopt});
      if (n_sub == 0 && !in_vocab.empty()) pairs.back().origin = PairOrigin::identity;
      continue;
    }

    Rng rng(mix_seed(seed, si));
    auto picked = rng.sample_without_replacement(in_vocab.size(), n_sub);
    std::vector<std::string> tokens = t.tokens;
    for (std::size_t p : picked) {
      std::size_t idx = in_vocab[p];
      auto nb = store.nearest_neighbors(tokens[idx], static_cast<std::size_t>(k_neighbors), -1.0);
      if (nb.empty()) continue;
      tokens[idx] = nb[rng.below(nb.size())].first;
    }
    pairs.push_back({detokenize(std::span<const std::string>(tokens)), target,
                     PairOrigin::synthetic, std::nullopt});
  }
  return pairs;
}

struct TokenEdit {
  std::size_t index = 0;  // source-side token position
  std::string from;       // perturbed token
  std::string to;         // original token
};

// Token-level minimum-edit alignment between source and target; extracts the
// substitution operations. Insertions/deletions carry no (perturbed ->
// original) signal and are ignored. Returns nullopt when nothing usable could
// be extracted from a non-identity pair.
inline std::optional<std::vector<TokenEdit>> align_pair_edits(const RewritePair& pair) {
  std::vector<std::string> src, tgt;
  try {
    src = tokenize(pair.source, /*lowercase=*/true).tokens;
    tgt = tokenize(pair.target, /*lowercase=*/true).tokens;
  } catch (const EmptyInputError&) {
    return std::nullopt;
  }

  const std::size_t n = src.size(), m = tgt.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      int sub = dp[i - 1][j - 1] + (src[i - 1] == tgt[j - 1] ? 0 : 1);
      dp[i][j] = std::min({sub, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
    }

  std::vector<TokenEdit> edits;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (src[i - 1] == tgt[j - 1] && dp[i][j] == dp[i - 1][j - 1]) {
      --i, --j;
    } else if (dp[i][j] == dp[i - 1][j - 1] + 1) {
      edits.push_back({i - 1, src[i - 1], tgt[j - 1]});
      --i, --j;
    } else if (dp[i][j] == dp[i - 1][j] + 1) {
      --i;  // deletion from source
    } else {
      --j;  // insertion into source
    }
  }
  std::reverse(edits.begin(), edits.end());
  if (edits.empty() && pair.source != pair.target) return std::nullopt;
  return edits;
}

struct RewriterTrainHyper {
  std::vector<double> threshold_grid = {0.3, 0.4, 0.5, 0.6, 0.7};
  double identity_weight = 1.0;
  std::uint64_t seed = 1;
  RewriterCapacity capacity;
  double holdout_ratio = 0.1;
  int detector_epochs = 40;
  double detector_lr = 0.5;
  std::shared_ptr<const EmbeddingStore> store;
  std::shared_ptr<const LanguageModel> lm;  // trained on pair targets when absent
};

struct RewriterTrainReport {
  double chosen_threshold = 0.5;
  double holdout_exact_restore = 0.0;   // over held-out non-identity pairs
  double holdout_false_rewrite = 0.0;   // over held-out identity pairs
  std::size_t memory_entries = 0;
  std::size_t alignment_skipped = 0;
  std::size_t train_pairs = 0;
  std::size_t holdout_pairs = 0;
};

// Fraction of pairs whose rewritten source exactly equals the (canonicalized)
// target. Works for any pair list, so tests and the acceptance suite reuse it.
inline double exact_restoration_rate(const RewriterModel& model,
                                     std::span<const RewritePair> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : pairs)
    if (rewrite(model, p.source) == canonical_text(p.target)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

// Fraction of tokens the model changes across the given clean texts.
inline double token_rewrite_rate(const RewriterModel& model,
                                 std::span<const std::string> clean_texts) {
  std::size_t total = 0, changed = 0;
  for (const auto& text : clean_texts) {
    TokenizedText before;
    try {
      before = tokenize(text, /*lowercase=*/true);
    } catch (const EmptyInputError&) {
      continue;
    }
    TokenizedText after = tokenize(rewrite(model, text), /*lowercase=*/true);
    total += before.tokens.size();
    if (after.tokens.size() != before.tokens.size()) {
      changed += before.tokens.size();  // structural change counts everything
      continue;
    }
    for (std::size_t i = 0; i < before.tokens.size(); ++i)
      if (before.tokens[i] != after.tokens[i]) ++changed;
  }
  return total == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(total);
}

// Trains the rewriter: (1) aligns non-identity pairs into single-token edits
// and fills the substitution memory, (2) fits the detector by logistic
// regression on perturbed vs. identity tokens, (3) picks the detection
// threshold on a held-out split by exact-restoration minus false-rewrite.
inline std::pair<RewriterModel, RewriterTrainReport> train_rewriter(
    std::vector<RewritePair> pairs, const RewriterTrainHyper& hyper) {
  if (pairs.empty()) throw ConfigError("cannot train a rewriter on zero pairs");

  RewriterModel model;
  RewriterTrainReport report;
  model.capacity = hyper.capacity;
  model.store = hyper.store;
  model.provenance = "trained(seed=" + std::to_string(hyper.seed) + ")";

  // Deterministic split: shuffle a copy, hold out the tail.
  Rng rng(hyper.seed);
  rng.shuffle(pairs);
  std::size_t holdout =
      static_cast<std::size_t>(std::floor(hyper.holdout_ratio * static_cast<double>(pairs.size())));
  if (holdout >= pairs.size()) holdout = pairs.size() > 1 ? pairs.size() - 1 : 0;
  std::span<const RewritePair> train_pairs(pairs.data(), pairs.size() - holdout);
  std::span<const RewritePair> held_pairs(pairs.data() + (pairs.size() - holdout), holdout);
  report.train_pairs = train_pairs.size();
  report.holdout_pairs = held_pairs.size();

  // Clean-corpus statistics come from the training targets.
  std::vector<std::string> clean_corpus;
  std::set<std::string> seen_targets;
  for (const auto& p : train_pairs)
    if (seen_targets.insert(p.target).second) clean_corpus.push_back(canonical_text(p.target));

  for (const auto& text : clean_corpus)
    for (const auto& tok : tokenize(text, /*lowercase=*/true).tokens) ++model.token_freq[tok];

  std::set<std::string> vocab_set;
  for (const auto& [tok, _] : model.token_freq) vocab_set.insert(tok);
  model.edit_vocab.assign(vocab_set.begin(), vocab_set.end());

  if (hyper.lm) {
    model.lm = hyper.lm;
  } else {
    model.lm = std::make_shared<LanguageModel>(LanguageModel::train(clean_corpus, 3, 0.1));
  }

  // Reference density: frequency-weighted mean over clean-corpus tokens,
  // computed before any feature extraction so all features share it.
  {
    double weighted = 0.0;
    std::uint64_t total = 0;
    for (const auto& [tok, count] : model.token_freq) {
      weighted += raw_neighbor_density(model, tok) * static_cast<double>(count);
      total += count;
    }
    model.density_reference = total == 0 ? 0.0 : weighted / static_cast<double>(total);
  }

  // Memory extraction + detector training tokens.
  struct LabeledToken {
    std::array<double, 4> features;
    int label;  // 1 = perturbed
    double weight;
  };
  std::vector<LabeledToken> tokens_ds;

  for (const auto& p : train_pairs) {
    if (p.origin == PairOrigin::identity) {
      TokenizedText t;
      try {
        t = tokenize(p.source, /*lowercase=*/true);
      } catch (const EmptyInputError&) {
        continue;
      }
      auto lps = model.lm->token_logprobs(std::span<const std::string>(t.tokens));
      for (std::size_t i = 0; i < t.tokens.size(); ++i)
        tokens_ds.push_back(
            {detector_features(model, t, i, lps), 0, hyper.identity_weight});
      continue;
    }
    auto edits = align_pair_edits(p);
    if (!edits) {
      ++report.alignment_skipped;
      continue;
    }
    TokenizedText t = tokenize(p.source, /*lowercase=*/true);
    auto lps = model.lm->token_logprobs(std::span<const std::string>(t.tokens));
    for (const auto& e : *edits) {
      model.add_memory(e.from, e.to, 1);
      tokens_ds.push_back({detector_features(model, t, e.index, lps), 1, 1.0});
    }
  }

  // Capacity: keep the highest-count memory entries.
  if (model.memory_size() > hyper.capacity.max_memory_entries) {
    struct Row {
      std::string perturbed, original;
      std::uint64_t count;
    };
    std::vector<Row> rows;
    for (const auto& [perturbed, entries] : model.memory)
      for (const auto& e : entries) rows.push_back({perturbed, e.original, e.count});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.count != b.count) return a.count > b.count;
      if (a.perturbed != b.perturbed) return a.perturbed < b.perturbed;
      return a.original < b.original;
    });
    rows.resize(hyper.capacity.max_memory_entries);
    model.memory.clear();
    for (const auto& r : rows) model.add_memory(r.perturbed, r.original, r.count);
  }
  report.memory_entries = model.memory_size();

  // Detector: binary logistic regression over the four features.
  {
    Rng det_rng(mix_seed(hyper.seed, 0x9e3779b9ULL));
    std::vector<std::size_t> order(tokens_ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < hyper.detector_epochs; ++epoch) {
      det_rng.shuffle(order);
      for (std::size_t idx : order) {
        const auto& ex = tokens_ds[idx];
        double p = model.detector.score(ex.features);
        double delta = (p - static_cast<double>(ex.label)) * ex.weight;
        model.detector.bias -= hyper.detector_lr * delta;
        for (std::size_t i = 0; i < ex.features.size(); ++i)
          model.detector.weights[i] -= hyper.detector_lr * delta * ex.features[i];
      }
    }
  }

  // Threshold selection on the held-out split (falls back to the training
  // pairs when the holdout is empty).
  std::span<const RewritePair> select_pairs = held_pairs.empty() ? train_pairs : held_pairs;
  std::vector<RewritePair> select_adv, select_id;
  for (const auto& p : select_pairs)
    (p.origin == PairOrigin::identity ? select_id : select_adv).push_back(p);

  double best_score = -1e18;
  double best_threshold = hyper.threshold_grid.empty() ? 0.5 : hyper.threshold_grid.front();
  for (double thr : hyper.threshold_grid) {
    model.detect_threshold = thr;
    double restore =
        select_adv.empty() ? 0.0 : exact_restoration_rate(model, std::span<const RewritePair>(select_adv));
    double false_rewrite = 0.0;
    if (!select_id.empty()) {
      std::size_t changed = 0;
      for (const auto& p : select_id)
        if (rewrite(model, p.source) != canonical_text(p.source)) ++changed;
      false_rewrite = static_cast<double>(changed) / static_cast<double>(select_id.size());
    }
    double score = restore - false_rewrite;
    if (score > best_score + 1e-12) {
      best_score = score;
      best_threshold = thr;
    }
  }
  model.detect_threshold = best_threshold;
  report.chosen_threshold = best_threshold;
  report.holdout_exact_restore =
      select_adv.empty() ? 0.0
                         : exact_restoration_rate(model, std::span<const RewritePair>(select_adv));
  if (!select_id.empty()) {
    std::size_t changed = 0;
    for (const auto& p : select_id)
      if (rewrite(model, p.source) != canonical_text(p.source)) ++changed;
    report.holdout_false_rewrite =
        static_cast<double>(changed) / static_cast<double>(select_id.size());
  }
  return {std::move(model), report};
}

// --------------------------------------------------------------------------
// Pair JSONL persistence; the manifest lives in a sibling JSON document.

inline void write_pairs(const std::filesystem::path& path, std::span<const RewritePair> pairs,
                        const TrainingManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write pairs to " + path.string());
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["source"] = p.source;
    j["target"] = p.target;
    j["origin"] = to_string(p.origin);
    if (p.step_index) j["step_index"] = *p.step_index;
    out << j.dump() << '\n';
  }
  std::filesystem::path mpath = path;
  mpath += ".manifest.json";
  std::ofstream mout(mpath);
  mout << manifest.to_json().dump(2) << '\n';
}

inline std::vector<RewritePair> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pairs file: " + path.string());
  std::vector<RewritePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      RewritePair p;
      p.source = j.at("source").get<std::string>();
      p.target = j.at("target").get<std::string>();
      p.origin = pair_origin_from_string(j.at("origin").get<std::string>());
      if (j.contains("step_index")) p.step_index = j["step_index"].get<int>();
      pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad pair line: ") + e.what(), lineno);
    }
  }
  return pairs;
}

}  // namespace redress
