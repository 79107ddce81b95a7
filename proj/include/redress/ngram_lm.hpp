#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "redress/errors.hpp"
#include "redress/text.hpp"

namespace redress {

// Additive-smoothed n-gram language model over word tokens. Used as a
// relative fluency score: attack candidates that wreck it get filtered, and
// the rewriter reads per-token surprisal as a perturbation signal.
class LanguageModel {
 public:
  static constexpr const char* kUnk = "<unk>";

  static LanguageModel train(const std::vector<std::string>& corpus, int order,
                             double smoothing) {
    if (order < 1) throw ConfigError("n-gram order must be >= 1");
    if (smoothing <= 0.0) throw ConfigError("smoothing constant must be positive");
    if (corpus.empty()) throw ConfigError("training corpus is empty");

    LanguageModel lm;
    lm.order_ = order;
    lm.alpha_ = smoothing;
    lm.counts_.resize(static_cast<std::size_t>(order));
    for (const auto& line : corpus) {
      TokenizedText t;
      try {
        t = tokenize(line, /*lowercase=*/true);
      } catch (const EmptyInputError&) {
        continue;
      }
      lm.total_tokens_ += t.tokens.size();
      for (const auto& tok : t.tokens) lm.vocab_.insert(tok);
      for (int n = 1; n <= order; ++n) {
        if (t.tokens.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= t.tokens.size(); ++i)
          ++lm.counts_[static_cast<std::size_t>(n - 1)][lm.join(t.tokens, i, n)];
      }
    }
    if (lm.total_tokens_ == 0) throw ConfigError("corpus contains no tokens");
    lm.vocab_.insert(kUnk);
    return lm;
  }

  int order() const { return order_; }
  double smoothing() const { return alpha_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::uint64_t total_tokens() const { return total_tokens_; }

  std::uint64_t count_of(std::span<const std::string> gram) const {
    if (gram.empty() || gram.size() > static_cast<std::size_t>(order_)) return 0;
    std::vector<std::string> mapped = map_unk(gram);
    const auto& table = counts_[gram.size() - 1];
    auto it = table.find(join(mapped, 0, static_cast<int>(mapped.size())));
    return it == table.end() ? 0 : it->second;
  }

  // Smoothed conditional log-probability of each token given the longest
  // available in-order context (up to order-1 previous tokens).
  std::vector<double> token_logprobs(std::span<const std::string> tokens) const {
    std::vector<std::string> mapped = map_unk(tokens);
    std::vector<double> lps;
    lps.reserve(tokens.size());
    const double v = static_cast<double>(vocab_.size());
    for (std::size_t i = 0; i < mapped.size(); ++i) {
      std::size_t ctx = std::min<std::size_t>(i, static_cast<std::size_t>(order_ - 1));
      std::uint64_t num_count = lookup(mapped, i - ctx, ctx + 1);
      std::uint64_t den_count = ctx == 0 ? total_tokens_ : lookup(mapped, i - ctx, ctx);
      double p = (static_cast<double>(num_count) + alpha_) /
                 (static_cast<double>(den_count) + alpha_ * v);
      lps.push_back(std::log(p));
    }
    return lps;
  }

  double score_tokens(std::span<const std::string> tokens) const {
    double total = 0.0;
    for (double lp : token_logprobs(tokens)) total += lp;
    return total;
  }

  double score(const TokenizedText& t) const {
    return score_tokens(std::span<const std::string>(t.tokens));
  }

 private:
  std::vector<std::string> map_unk(std::span<const std::string> tokens) const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) out.push_back(vocab_.count(tok) ? tok : kUnk);
    return out;
  }

  std::uint64_t lookup(const std::vector<std::string>& tokens, std::size_t start, std::size_t n) const {
    const auto& table = counts_[n - 1];
    auto it = table.find(join(tokens, start, static_cast<int>(n)));
    return it == table.end() ? 0 : it->second;
  }

  static std::string join(const std::vector<std::string>& tokens, std::size_t start, int n) {
    std::string key;
    for (int i = 0; i < n; ++i) {
      if (i) key.push_back('\x1f');
      key += tokens[start + static_cast<std::size_t>(i)];
    }
    return key;
  }

  int order_ = 1;
  double alpha_ = 0.1;
  std::uint64_t total_tokens_ = 0;
  std::vector<std::unordered_map<std::string, std::uint64_t>> counts_;  // [n-1] -> n-gram counts
  std::unordered_set<std::string> vocab_;
};

inline LanguageModel train_ngram_lm(const std::vector<std::string>& corpus, int order,
                                    double smoothing) {
  return LanguageModel::train(corpus, order, smoothing);
}

// Total log-probability; empty inputs score 0 by convention.
inline double lm_score(const LanguageModel& lm, const TokenizedText& t) { return lm.score(t); }

}  // namespace redress
