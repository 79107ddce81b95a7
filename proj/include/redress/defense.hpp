#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "redress/classifier.hpp"
#include "redress/embeddings.hpp"
#include "redress/errors.hpp"
#include "redress/ngram_lm.hpp"
#include "redress/rng.hpp"
#include "redress/text.hpp"

namespace redress {

// ---------------------------------------------------------------------------
// Interceptor: a total, deterministic text -> text transform that runs in
// front of the classifier on every input, adversarial or not.

class Interceptor {
 public:
  virtual ~Interceptor() = default;
  virtual std::string transform(const std::string& text) const = 0;
  virtual std::string name() const = 0;
};

class IdentityInterceptor final : public Interceptor {
 public:
  std::string transform(const std::string& text) const override { return text; }
  std::string name() const override { return "identity"; }
};

// ---------------------------------------------------------------------------
// Rewriter model: per-token perturbation detector plus restoration scorer.
// Trained from (perturbed, original) pairs; see rewriter_train.hpp.

struct DetectorModel {
  // Feature order: neighborhood density, char-anomaly/OOV, frequency rarity,
  // LM surprisal.
  std::array<double, 4> weights{0.0, 0.0, 0.0, 0.0};
  double bias = 0.0;

  double score(const std::array<double, 4>& f) const {
    double z = bias;
    for (std::size_t i = 0; i < f.size(); ++i) z += weights[i] * f[i];
    return 1.0 / (1.0 + std::exp(-z));
  }
};

struct RewriterCapacity {
  std::size_t max_memory_entries = 50000;
  int max_neighbor_fanout = 10;
};

struct RestoreScoring {
  double memory_weight = 1.0;
  double lm_weight = 1.0;
  double neighbor_weight = 0.25;
};

struct MemoryEntry {
  std::string original;
  std::uint64_t count = 0;
};

class RewriterModel {
 public:
  DetectorModel detector;
  // Typical neighborhood density of clean-corpus tokens; the density feature
  // is the deviation from this, so both unusually tight synonym clusters and
  // empty (out-of-vocabulary) neighborhoods read as suspicious.
  double density_reference = 0.0;
  // perturbed token -> originals it was restored from, ordered
  // (count desc, original asc) so the best entry is always front.
  std::map<std::string, std::vector<MemoryEntry>> memory;
  double detect_threshold = 0.5;
  RestoreScoring scoring;
  RewriterCapacity capacity;
  std::vector<std::string> edit_vocab;                       // sorted clean-corpus tokens
  std::unordered_map<std::string, std::uint64_t> token_freq;  // clean-corpus counts

  std::shared_ptr<const EmbeddingStore> store;  // may be null
  std::shared_ptr<const LanguageModel> lm;      // may be null

  std::string provenance = "untrained";

  nlohmann::json to_json() const {
    nlohmann::json mem = nlohmann::json::array();
    for (const auto& [perturbed, entries] : memory)
      for (const auto& e : entries) mem.push_back({perturbed, e.original, e.count});
    nlohmann::json freq = nlohmann::json::array();
    std::vector<std::pair<std::string, std::uint64_t>> sorted_freq(token_freq.begin(),
                                                                   token_freq.end());
    std::sort(sorted_freq.begin(), sorted_freq.end());
    for (const auto& [tok, c] : sorted_freq) freq.push_back({tok, c});
    return nlohmann::json{
        {"detector",
         {{"weights", detector.weights},
          {"bias", detector.bias},
          {"density_reference", density_reference}}},
        {"memory", mem},
        {"thresholds", {{"detect", detect_threshold}}},
        {"capacity",
         {{"max_memory_entries", capacity.max_memory_entries},
          {"max_neighbor_fanout", capacity.max_neighbor_fanout}}},
        {"scoring",
         {{"memory_weight", scoring.memory_weight},
          {"lm_weight", scoring.lm_weight},
          {"neighbor_weight", scoring.neighbor_weight}}},
        {"edit_vocab", edit_vocab},
        {"token_freq", freq},
        {"provenance", provenance},
        {"version", 1}};
  }

  static RewriterModel from_json(const nlohmann::json& j,
                                 std::shared_ptr<const EmbeddingStore> store_ref = nullptr,
                                 std::shared_ptr<const LanguageModel> lm_ref = nullptr) {
    RewriterModel m;
    const auto& det = j.at("detector");
    m.detector.weights = det.at("weights").get<std::array<double, 4>>();
    m.detector.bias = det.at("bias").get<double>();
    m.density_reference = det.value("density_reference", 0.0);
    for (const auto& row : j.at("memory"))
      m.add_memory(row.at(0).get<std::string>(), row.at(1).get<std::string>(),
                   row.at(2).get<std::uint64_t>());
    m.detect_threshold = j.at("thresholds").at("detect").get<double>();
    m.capacity.max_memory_entries = j.at("capacity").at("max_memory_entries").get<std::size_t>();
    m.capacity.max_neighbor_fanout = j.at("capacity").at("max_neighbor_fanout").get<int>();
    if (j.contains("scoring")) {
      m.scoring.memory_weight = j["scoring"].value("memory_weight", 1.0);
      m.scoring.lm_weight = j["scoring"].value("lm_weight", 0.5);
      m.scoring.neighbor_weight = j["scoring"].value("neighbor_weight", 0.5);
    }
    m.edit_vocab = j.value("edit_vocab", std::vector<std::string>{});
    if (j.contains("token_freq"))
      for (const auto& row : j["token_freq"])
        m.token_freq[row.at(0).get<std::string>()] = row.at(1).get<std::uint64_t>();
    m.provenance = j.value("provenance", std::string("unknown"));
    m.store = std::move(store_ref);
    m.lm = std::move(lm_ref);
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write rewriter model to " + path.string());
    out << to_json().dump(2) << '\n';
  }

  static RewriterModel load(const std::filesystem::path& path,
                            std::shared_ptr<const EmbeddingStore> store_ref = nullptr,
                            std::shared_ptr<const LanguageModel> lm_ref = nullptr) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rewriter model: " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j, std::move(store_ref), std::move(lm_ref));
  }

  void add_memory(const std::string& perturbed, const std::string& original,
                  std::uint64_t count) {
    auto& entries = memory[perturbed];
    for (auto& e : entries) {
      if (e.original == original) {
        e.count += count;
        sort_entries(entries);
        return;
      }
    }
    entries.push_back({original, count});
    sort_entries(entries);
  }

  std::size_t memory_size() const {
    std::size_t n = 0;
    for (const auto& [_, entries] : memory) n += entries.size();
    return n;
  }

 private:
  static void sort_entries(std::vector<MemoryEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const MemoryEntry& a, const MemoryEntry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.original < b.original;
    });
  }
};

namespace detail {

// Levenshtein distance with early exit once the bound is exceeded.
inline int bounded_edit_distance(const std::string& a, const std::string& b, int bound) {
  int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
  if (std::abs(la - lb) > bound) return bound + 1;
  std::vector<int> prev(static_cast<std::size_t>(lb) + 1), cur(static_cast<std::size_t>(lb) + 1);
  for (int j = 0; j <= lb; ++j) prev[static_cast<std::size_t>(j)] = j;
  for (int i = 1; i <= la; ++i) {
    cur[0] = i;
    int row_min = cur[0];
    for (int j = 1; j <= lb; ++j) {
      int cost = a[static_cast<std::size_t>(i - 1)] == b[static_cast<std::size_t>(j - 1)] ? 0 : 1;
      cur[static_cast<std::size_t>(j)] =
          std::min({prev[static_cast<std::size_t>(j)] + 1, cur[static_cast<std::size_t>(j - 1)] + 1,
                    prev[static_cast<std::size_t>(j - 1)] + cost});
      row_min = std::min(row_min, cur[static_cast<std::size_t>(j)]);
    }
    if (row_min > bound) return bound + 1;
    std::swap(prev, cur);
  }
  return prev[static_cast<std::size_t>(lb)];
}

inline double squash_logit(double x, double scale) { return 1.0 / (1.0 + std::exp(-x / scale)); }

}  // namespace detail

// Raw neighborhood density: how tightly the token sits among its nearest
// embedding neighbors. Out-of-vocabulary tokens have an empty neighborhood
// and score 0.
inline double raw_neighbor_density(const RewriterModel& model, const std::string& token) {
  if (!model.store || !model.store->contains(token)) return 0.0;
  auto nb = model.store->nearest_neighbors(token, 5, -1.0);
  if (nb.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, sim] : nb) sum += sim;
  return std::clamp(0.5 + 0.5 * sum / static_cast<double>(nb.size()), 0.0, 1.0);
}

// Per-token detector features, each in [0, 1]: density deviation from the
// clean-corpus reference, OOV/char-anomaly flag, corpus frequency rarity, and
// squashed LM surprisal.
inline std::array<double, 4> detector_features(const RewriterModel& model, const TokenizedText& t,
                                               std::size_t index,
                                               std::span<const double> token_logprobs) {
  const std::string& tok = t.tokens[index];

  double density = std::min(1.0, std::abs(raw_neighbor_density(model, tok) - model.density_reference));

  bool in_store = model.store && model.store->contains(tok);
  double anomaly = in_store ? 0.0 : 1.0;

  auto it = model.token_freq.find(tok);
  double freq_rarity = 1.0 / (1.0 + (it == model.token_freq.end() ? 0.0 : double(it->second)));

  double surprisal = 0.0;
  if (!token_logprobs.empty()) {
    double s = -token_logprobs[index];
    surprisal = s / (s + 10.0);
  }

  return {density, anomaly, freq_rarity, surprisal};
}

inline std::vector<double> detect_perturbed_tokens(const RewriterModel& model,
                                                   const TokenizedText& t) {
  std::vector<double> lps;
  if (model.lm) lps = model.lm->token_logprobs(std::span<const std::string>(t.tokens));
  std::vector<double> scores;
  scores.reserve(t.tokens.size());
  for (std::size_t i = 0; i < t.tokens.size(); ++i)
    scores.push_back(model.detector.score(detector_features(model, t, i, lps)));
  return scores;
}

struct RestoreChoice {
  std::string replacement;
  double score = 0.0;
};

namespace detail {

struct RestoreCandidate {
  std::string replacement;
  std::uint64_t memory_count = 0;
  double neighbor_sim = 0.0;
  double lm_gain_component = 0.0;
  double score = 0.0;
};

// Candidate pool for one flagged token: substitution memory first, then
// embedding neighbors, then edit-distance <= 2 vocabulary matches (lower
// distance preferred). Scored as memory weight + LM gain + neighbor
// similarity; ties broken by memory count, neighbor cosine, then text.
inline std::vector<RestoreCandidate> restore_pool(const RewriterModel& model,
                                                  const TokenizedText& t, std::size_t index) {
  const std::string& tok = t.tokens[index];
  std::vector<RestoreCandidate> pool;
  auto find_or_add = [&](const std::string& repl) -> RestoreCandidate& {
    for (auto& c : pool)
      if (c.replacement == repl) return c;
    pool.push_back({repl, 0, 0.0, 0.0, 0.0});
    return pool.back();
  };

  if (auto it = model.memory.find(tok); it != model.memory.end())
    for (const auto& e : it->second) find_or_add(e.original).memory_count = e.count;

  if (model.store && model.store->contains(tok)) {
    for (const auto& [nb, sim] :
         model.store->nearest_neighbors(
             tok, static_cast<std::size_t>(model.capacity.max_neighbor_fanout), 0.5)) {
      auto& c = find_or_add(nb);
      c.neighbor_sim = std::max(c.neighbor_sim, sim);
    }
  }

  for (int dist = 1; dist <= 2; ++dist) {
    bool found_any = false;
    for (const auto& word : model.edit_vocab) {
      if (word == tok) continue;
      if (bounded_edit_distance(tok, word, 2) == dist) {
        auto& c = find_or_add(word);
        found_any = true;
        if (model.store && model.store->contains(tok) && model.store->contains(word))
          c.neighbor_sim = std::max(c.neighbor_sim, model.store->cosine(tok, word));
      }
    }
    if (found_any) break;  // prefer lower distance; do not mix distances
  }

  if (pool.empty()) return pool;

  double base_lm = 0.0;
  if (model.lm) base_lm = model.lm->score_tokens(std::span<const std::string>(t.tokens));
  for (auto& c : pool) {
    double mem = c.memory_count == 0
                     ? 0.0
                     : static_cast<double>(c.memory_count) / (static_cast<double>(c.memory_count) + 1.0);
    // Centered LM gain in (-1, 1): candidates that make the sentence less
    // fluent are penalized, not mildly rewarded, so a clean token never loses
    // to its own degraded neighbors.
    double lm_gain = 0.0;
    if (model.lm) {
      std::vector<std::string> variant = t.tokens;
      variant[index] = c.replacement;
      double cand_lm = model.lm->score_tokens(std::span<const std::string>(variant));
      lm_gain = 2.0 * (squash_logit(cand_lm - base_lm, 5.0) - 0.5);
    }
    c.lm_gain_component = lm_gain;
    c.score = model.scoring.memory_weight * mem + model.scoring.lm_weight * lm_gain +
              model.scoring.neighbor_weight * std::max(0.0, c.neighbor_sim);
  }

  std::sort(pool.begin(), pool.end(), [](const RestoreCandidate& a, const RestoreCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.memory_count != b.memory_count) return a.memory_count > b.memory_count;
    if (a.neighbor_sim != b.neighbor_sim) return a.neighbor_sim > b.neighbor_sim;
    return a.replacement < b.replacement;
  });
  return pool;
}

}  // namespace detail

// Best restoration for the token, or none when keeping it wins. The keep
// score is 1 - detector score, so restoration only happens when the combined
// candidate score beats the model's confidence that the token is clean.
inline std::optional<RestoreChoice> restore_token(const RewriterModel& model,
                                                  const TokenizedText& t, std::size_t index) {
  auto pool = detail::restore_pool(model, t, index);
  if (pool.empty()) return std::nullopt;
  std::vector<double> lps;
  if (model.lm) lps = model.lm->token_logprobs(std::span<const std::string>(t.tokens));
  double det = model.detector.score(detector_features(model, t, index, lps));
  double keep_score = 1.0 - det;
  const auto& best = pool.front();
  if (best.score > keep_score) return RestoreChoice{best.replacement, best.score};
  return std::nullopt;
}

// The trained interceptor transform: score every token, and for tokens above
// the detection threshold commit the best-scoring restoration. Tokens below
// the threshold pass through untouched, which is what keeps the transform an
// identity on clean text.
inline std::string rewrite(const RewriterModel& model, const std::string& text) {
  TokenizedText t;
  try {
    t = tokenize(text, /*lowercase=*/true);
  } catch (const EmptyInputError&) {
    return text;
  }
  auto scores = detect_perturbed_tokens(model, t);
  std::vector<std::string> out = t.tokens;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    if (scores[i] <= model.detect_threshold) continue;
    if (auto choice = restore_token(model, t, i)) out[i] = choice->replacement;
  }
  return detokenize(std::span<const std::string>(out));
}

class RewriterInterceptor final : public Interceptor {
 public:
  explicit RewriterInterceptor(std::shared_ptr<const RewriterModel> model)
      : model_(std::move(model)) {
    if (!model_) throw ConfigError("RewriterInterceptor needs a model");
  }
  std::string transform(const std::string& text) const override { return rewrite(*model_, text); }
  std::string name() const override { return "rewriter(" + model_->provenance + ")"; }
  const RewriterModel& model() const { return *model_; }

 private:
  std::shared_ptr<const RewriterModel> model_;
};

// classify(T(x)); exactly one classifier query per call.
inline PredictionResult defend_predict(const Interceptor& interceptor,
                                       const ClassifierHandle& handle, const std::string& text) {
  return handle.predict(interceptor.transform(text));
}

// The defended pipeline as a classifier of its own, so attacks and the eval
// harness can only see the composed system.
class InterceptedClassifier : public TextClassifier {
 public:
  InterceptedClassifier(std::shared_ptr<const Interceptor> interceptor,
                        std::shared_ptr<const TextClassifier> model)
      : interceptor_(std::move(interceptor)), model_(std::move(model)) {
    if (!interceptor_ || !model_) throw ConfigError("pipeline needs interceptor and model");
  }

  PredictionResult predict_text(const std::string& text) const override {
    return model_->predict_text(interceptor_->transform(text));
  }
  const std::vector<std::string>& label_space() const override { return model_->label_space(); }
  std::string name() const override { return interceptor_->name() + "+" + model_->name(); }

 private:
  std::shared_ptr<const Interceptor> interceptor_;
  std::shared_ptr<const TextClassifier> model_;
};

// ---------------------------------------------------------------------------
// Randomization baselines.

struct SmoothingConfig {
  int n_candidates = 30;     // randomized-substitution votes
  double perturb_rate = 0.15;
  double sample_ratio = 0.5;  // token keep ratio for sample shielding
  int n_samples = 5;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::size_t shield_keep_count(double ratio, std::size_t n_tokens) {
  double c = std::ceil(ratio * static_cast<double>(n_tokens) - 1e-9);
  std::size_t keep = c <= 1.0 ? 1 : static_cast<std::size_t>(c);
  return std::min(keep, n_tokens);
}

// Majority vote over per-variant predictions. When every sampled variant is
// literally the input (degenerate randomization), the defense is an identity
// and the underlying distribution is returned so the equality with the bare
// classifier is exact.
inline PredictionResult vote_result(const std::vector<PredictionResult>& results,
                                    const std::vector<std::string>& variants,
                                    const std::string& original, std::size_t n_labels) {
  bool degenerate = true;
  for (const auto& v : variants)
    if (v != original) {
      degenerate = false;
      break;
    }
  if (degenerate) return results.front();

  std::vector<double> votes(n_labels, 0.0);
  for (const auto& r : results) votes[static_cast<std::size_t>(r.predicted)] += 1.0;
  for (double& v : votes) v /= static_cast<double>(results.size());
  return make_prediction(std::move(votes));
}

}  // namespace detail

// Randomized-substitution smoothing: n_candidates variants, each word
// independently replaced by a uniformly drawn embedding neighbor with
// probability perturb_rate; majority vote. Costs exactly n_candidates
// queries.
inline PredictionResult smooth_predict_safer(const ClassifierHandle& handle,
                                             const std::string& text, const SmoothingConfig& cfg,
                                             const EmbeddingStore& store) {
  if (cfg.n_candidates < 1) throw ConfigError("n_candidates must be >= 1");
  TokenizedText t = tokenize(text, /*lowercase=*/true);
  Rng rng(cfg.seed);

  std::vector<std::string> variants;
  variants.reserve(static_cast<std::size_t>(cfg.n_candidates));
  for (int c = 0; c < cfg.n_candidates; ++c) {
    std::vector<std::string> tokens = t.tokens;
    bool changed = false;
    for (auto& tok : tokens) {
      if (rng.unit() >= cfg.perturb_rate) continue;
      if (!store.contains(tok)) continue;
      auto nb = store.nearest_neighbors(tok, 10, 0.5);
      if (nb.empty()) continue;
      tok = nb[rng.below(nb.size())].first;
      changed = true;
    }
    variants.push_back(changed ? detokenize(std::span<const std::string>(tokens)) : text);
  }

  auto results = handle.predict_batch(variants);
  return detail::vote_result(results, variants, text, handle.label_space().size());
}

// Sample shielding: n_samples order-preserving token subsets of size
// ceil(sample_ratio * |tokens|); majority vote with lowest-label tie-break.
// Costs exactly n_samples queries.
inline PredictionResult sample_shield_predict(const ClassifierHandle& handle,
                                              const std::string& text,
                                              const SmoothingConfig& cfg) {
  if (cfg.n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (cfg.sample_ratio <= 0.0 || cfg.sample_ratio > 1.0)
    throw ConfigError("sample_ratio must be in (0, 1]");
  TokenizedText t = tokenize(text, /*lowercase=*/true);
  Rng rng(cfg.seed);
  std::size_t keep = detail::shield_keep_count(cfg.sample_ratio, t.tokens.size());

  std::vector<std::string> variants;
  variants.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int s = 0; s < cfg.n_samples; ++s) {
    if (keep >= t.tokens.size()) {
      variants.push_back(text);
      continue;
    }
    auto picked = rng.sample_without_replacement(t.tokens.size(), keep);
    std::vector<std::string> tokens;
    tokens.reserve(picked.size());
    for (std::size_t idx : picked) tokens.push_back(t.tokens[idx]);
    variants.push_back(detokenize(std::span<const std::string>(tokens)));
  }

  auto results = handle.predict_batch(variants);
  return detail::vote_result(results, variants, text, handle.label_space().size());
}

// Prediction-level defenses exposed as classifiers so they can be attacked
// and evaluated like any other pipeline. The per-call seed is derived from
// the configured seed and the input text, keeping repeated queries on the
// same text consistent (trajectory validation relies on that).
class SaferClassifier : public TextClassifier {
 public:
  SaferClassifier(std::shared_ptr<const TextClassifier> model,
                  std::shared_ptr<const EmbeddingStore> store, SmoothingConfig cfg)
      : model_(std::move(model)), store_(std::move(store)), cfg_(cfg) {}

  PredictionResult predict_text(const std::string& text) const override {
    ClassifierHandle inner(model_);
    SmoothingConfig per_call = cfg_;
    per_call.seed = mix_seed(cfg_.seed, fnv1a(text));
    return smooth_predict_safer(inner, text, per_call, *store_);
  }
  const std::vector<std::string>& label_space() const override { return model_->label_space(); }
  std::string name() const override { return "safer+" + model_->name(); }

 private:
  std::shared_ptr<const TextClassifier> model_;
  std::shared_ptr<const EmbeddingStore> store_;
  SmoothingConfig cfg_;
};

class SampleShieldClassifier : public TextClassifier {
 public:
  SampleShieldClassifier(std::shared_ptr<const TextClassifier> model, SmoothingConfig cfg)
      : model_(std::move(model)), cfg_(cfg) {}

  PredictionResult predict_text(const std::string& text) const override {
    ClassifierHandle inner(model_);
    SmoothingConfig per_call = cfg_;
    per_call.seed = mix_seed(cfg_.seed, fnv1a(text));
    return sample_shield_predict(inner, text, per_call);
  }
  const std::vector<std::string>& label_space() const override { return model_->label_space(); }
  std::string name() const override { return "sample-shield+" + model_->name(); }

 private:
  std::shared_ptr<const TextClassifier> model_;
  SmoothingConfig cfg_;
};

}  // namespace redress
