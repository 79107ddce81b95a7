#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "redress/dataset.hpp"
#include "redress/defense.hpp"
#include "redress/embeddings.hpp"
#include "redress/errors.hpp"
#include "redress/pos.hpp"
#include "redress/rng.hpp"

namespace redress::toy {

// Synthetic sentiment benchmark with controlled embedding geometry:
//  - coordinate 0 carries the class signal; the rest is per-word noise;
//  - every sentiment word has synonym neighbors (cosine > 0.5) whose class
//    component is weaker and opposite-signed, so a greedy synonym swap
//    genuinely lowers the true-label probability;
//  - negative words carry a stronger signal than positive ones, so deleting
//    or mangling evidence moves inputs toward the positive side rather than
//    landing on a knife edge.
// Everything is derived from the seed and reproducible byte-for-byte.
struct ToyConfig {
  int sentiment_words_per_class = 25;
  int synonyms_per_word = 3;
  int filler_words = 80;
  std::size_t dim = 16;
  int train_size = 1800;
  int eval_size = 200;
  int tokens_per_sentence_min = 7;
  int tokens_per_sentence_max = 9;
  int sentiment_tokens_per_sentence = 3;
  std::uint64_t seed = 11;
};

struct ToyWorld {
  std::shared_ptr<EmbeddingStore> store;
  LabeledDataset train;
  LabeledDataset eval;
  std::vector<std::string> corpus;  // clean training sentences
  std::vector<std::string> positive_words;
  std::vector<std::string> negative_words;
  std::map<std::string, std::vector<std::string>> synonyms;  // canonical -> neighbors
  std::vector<std::string> fillers;
};

namespace detail {

inline std::string gen_word(Rng& rng, int min_len, int max_len) {
  static constexpr const char consonants[] = "bcdfghjklmnprstvz";
  static constexpr const char vowels[] = "aeiou";
  int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
  std::string w;
  bool consonant = rng.below(2) == 0;
  while (static_cast<int>(w.size()) < len) {
    if (consonant)
      w.push_back(consonants[rng.below(sizeof(consonants) - 1)]);
    else
      w.push_back(vowels[rng.below(sizeof(vowels) - 1)]);
    consonant = !consonant;
  }
  return w;
}

inline bool suffix_collides(const std::string& w) {
  // Keep generated words out of the POS tagger's suffix rules so sentiment
  // words and their synonyms always agree on the OTHER tag.
  TokenizedText t;
  t.tokens = {w};
  return pos_tag(t)[0] != PosTag::OTHER;
}

inline std::vector<double> unit_noise(Rng& rng, std::size_t dim) {
  // Unit vector confined to coordinates 1..dim-1 (coordinate 0 is the class axis).
  std::vector<double> v(dim, 0.0);
  double norm = 0.0;
  for (std::size_t i = 1; i < dim; ++i) {
    v[i] = rng.gaussian();
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (std::size_t i = 1; i < dim; ++i) v[i] /= norm;
  return v;
}

inline std::vector<double> orthogonalize(const std::vector<double>& v,
                                         const std::vector<double>& against) {
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * against[i];
  std::vector<double> out(v.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - dot * against[i];
    norm += out[i] * out[i];
  }
  norm = std::sqrt(norm);
  for (double& x : out) x /= norm;
  return out;
}

}  // namespace detail

inline ToyWorld make_toy_world(const ToyConfig& cfg = {}) {
  if (cfg.dim < 4) throw ConfigError("toy world needs dim >= 4");
  ToyWorld world;
  Rng rng(cfg.seed);

  // Vocabulary: pronounceable words, pairwise edit distance >= 3 so a one- or
  // two-char mangle always snaps back to a unique clean word.
  std::vector<std::string> all_words;
  auto fresh_word = [&]() {
    while (true) {
      std::string w = detail::gen_word(rng, 6, 8);
      if (detail::suffix_collides(w)) continue;
      bool clash = false;
      for (const auto& other : all_words)
        if (redress::detail::bounded_edit_distance(w, other, 2) <= 2) {
          clash = true;
          break;
        }
      if (clash) continue;
      all_words.push_back(w);
      return w;
    }
  };

  std::vector<std::pair<std::string, std::vector<double>>> entries;

  auto add_sentiment_class = [&](int sign, double canon_a, double syn_a_base,
                                 std::vector<std::string>& canon_list) {
    for (int i = 0; i < cfg.sentiment_words_per_class; ++i) {
      std::string canon = fresh_word();
      canon_list.push_back(canon);
      auto u = detail::unit_noise(rng, cfg.dim);
      std::vector<double> v(cfg.dim, 0.0);
      v[0] = sign * canon_a;
      for (std::size_t d = 1; d < cfg.dim; ++d) v[d] = 0.9 * u[d];
      entries.emplace_back(canon, v);

      auto& syn_list = world.synonyms[canon];
      for (int j = 0; j < cfg.synonyms_per_word; ++j) {
        std::string syn = fresh_word();
        syn_list.push_back(syn);
        auto z = detail::orthogonalize(detail::unit_noise(rng, cfg.dim), u);
        std::vector<double> sv(cfg.dim, 0.0);
        sv[0] = -sign * (syn_a_base + 0.05 * j);
        for (std::size_t d = 1; d < cfg.dim; ++d) sv[d] = 1.1 * u[d] + 0.25 * z[d];
        entries.emplace_back(syn, sv);
      }
    }
  };

  add_sentiment_class(+1, 0.60, 0.20, world.positive_words);
  add_sentiment_class(-1, 0.85, 0.20, world.negative_words);

  for (int i = 0; i < cfg.filler_words; ++i) {
    std::string filler = fresh_word();
    world.fillers.push_back(filler);
    auto w = detail::unit_noise(rng, cfg.dim);
    std::vector<double> v(cfg.dim, 0.0);
    for (std::size_t d = 1; d < cfg.dim; ++d) v[d] = 0.9 * w[d];
    entries.emplace_back(filler, v);
  }

  world.store = std::make_shared<EmbeddingStore>(EmbeddingStore::from_entries(cfg.dim, entries));

  // Sentences: m sentiment words of the labeled class plus fillers, shuffled.
  auto make_sentence = [&](int label) {
    const auto& lexicon = label == 1 ? world.positive_words : world.negative_words;
    int n = cfg.tokens_per_sentence_min +
            static_cast<int>(rng.below(static_cast<std::uint64_t>(
                cfg.tokens_per_sentence_max - cfg.tokens_per_sentence_min + 1)));
    int m = std::min(cfg.sentiment_tokens_per_sentence, n);
    std::vector<std::string> tokens;
    auto senti_idx = rng.sample_without_replacement(lexicon.size(), static_cast<std::size_t>(m));
    for (std::size_t idx : senti_idx) tokens.push_back(lexicon[idx]);
    auto fill_idx =
        rng.sample_without_replacement(world.fillers.size(), static_cast<std::size_t>(n - m));
    for (std::size_t idx : fill_idx) tokens.push_back(world.fillers[idx]);
    rng.shuffle(tokens);
    std::string text = tokens[0];
    for (std::size_t i = 1; i < tokens.size(); ++i) text += " " + tokens[i];
    return text;
  };

  world.train.label_space = {"negative", "positive"};
  world.eval.label_space = {"negative", "positive"};
  for (int i = 0; i < cfg.train_size; ++i) {
    int label = i % 2;
    std::string text = make_sentence(label);
    world.train.items.push_back({text, label});
    world.corpus.push_back(std::move(text));
  }
  for (int i = 0; i < cfg.eval_size; ++i) {
    int label = i % 2;
    world.eval.items.push_back({make_sentence(label), label});
  }
  return world;
}

// Writes the world as ordinary toolkit inputs: datasets in JSONL, embeddings
// in GloVe text format, the clean corpus one sentence per line.
inline void save_toy_world(const ToyWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(world.train, dir / "train.jsonl", DatasetFormat::jsonl);
  save_dataset(world.eval, dir / "eval.jsonl", DatasetFormat::jsonl);

  std::ofstream emb(dir / "embeddings.txt");
  if (!emb) throw ConfigError("cannot write embeddings under " + dir.string());
  emb << std::setprecision(12);
  for (const auto& word : world.store->words()) {
    emb << word;
    for (double v : world.store->vector_of(word)) emb << ' ' << v;
    emb << '\n';
  }

  std::ofstream corpus(dir / "corpus.txt");
  for (const auto& line : world.corpus) corpus << line << '\n';
}

}  // namespace redress::toy
