#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "redress/errors.hpp"

namespace redress {

// Word vectors in GloVe text format plus cached L2 norms. Immutable after
// construction; all queries are const and safe to share across threads.
class EmbeddingStore {
 public:
  static EmbeddingStore load(const std::filesystem::path& path,
                             std::optional<std::size_t> max_vocab = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embeddings file: " + path.string());
    EmbeddingStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (max_vocab && store.size() >= *max_vocab) break;
      std::istringstream ss(line);
      std::string word;
      ss >> word;
      std::vector<double> vec;
      double v;
      while (ss >> v) vec.push_back(v);
      if (word.empty() || vec.empty()) throw FormatError("malformed embedding line", lineno);
      if (store.dim_ == 0) store.dim_ = vec.size();
      if (vec.size() != store.dim_)
        throw FormatError("dimension mismatch: expected " + std::to_string(store.dim_) + ", got " +
                              std::to_string(vec.size()),
                          lineno);
      store.insert(word, vec);  // first occurrence wins
    }
    if (store.size() == 0) throw EmptyInputError("no embeddings in " + path.string());
    return store;
  }

  static EmbeddingStore from_entries(
      std::size_t dim, const std::vector<std::pair<std::string, std::vector<double>>>& entries) {
    EmbeddingStore store;
    store.dim_ = dim;
    for (const auto& [word, vec] : entries) {
      if (vec.size() != dim) throw ConfigError("vector dimension mismatch for word: " + word);
      store.insert(word, vec);
    }
    return store;
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  std::span<const double> vector_of(const std::string& word) const {
    return row(lookup(word));
  }

  double norm_of(const std::string& word) const { return norms_[lookup(word)]; }

  double cosine(const std::string& a, const std::string& b) const {
    return cosine_rows(lookup(a), lookup(b));
  }

  // Neighbors by cosine similarity, descending, ties broken lexicographically.
  // The query word never appears in its own list.
  std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word,
                                                                std::size_t k,
                                                                double min_sim) const {
    std::size_t qi = lookup(word);
    std::vector<std::pair<std::string, double>> hits;
    if (k == 0) return hits;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (i == qi) continue;
      double sim = cosine_rows(qi, i);
      if (sim >= min_sim) hits.emplace_back(words_[i], sim);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& lhs, const auto& rhs) {
      if (lhs.second != rhs.second) return lhs.second > rhs.second;
      return lhs.first < rhs.first;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

 private:
  void insert(const std::string& word, const std::vector<double>& vec) {
    if (index_.count(word)) return;
    index_.emplace(word, words_.size());
    words_.push_back(word);
    data_.insert(data_.end(), vec.begin(), vec.end());
    double sq = 0.0;
    for (double v : vec) sq += v * v;
    norms_.push_back(std::sqrt(sq));
  }

  std::size_t lookup(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw OovError("word not in embedding store: " + word);
    return it->second;
  }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  double cosine_rows(std::size_t a, std::size_t b) const {
    double denom = norms_[a] * norms_[b];
    if (denom == 0.0) return -1.0;  // zero vectors are never similar to anything
    auto ra = row(a), rb = row(b);
    double dot = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) dot += ra[i] * rb[i];
    return dot / denom;
  }

  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;  // row-major, one row per word
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::vector<std::pair<std::string, double>> nearest_neighbors(const EmbeddingStore& store,
                                                                     const std::string& word,
                                                                     std::size_t k,
                                                                     double min_sim) {
  return store.nearest_neighbors(word, k, min_sim);
}

inline EmbeddingStore load_embeddings(const std::filesystem::path& path,
                                      std::optional<std::size_t> max_vocab = {}) {
  return EmbeddingStore::load(path, max_vocab);
}

}  // namespace redress
