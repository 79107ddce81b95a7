#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "redress/dataset.hpp"
#include "redress/embeddings.hpp"
#include "redress/errors.hpp"
#include "redress/rng.hpp"
#include "redress/text.hpp"

namespace redress {

struct PredictionResult {
  std::vector<double> distribution;  // non-negative, sums to 1
  int predicted = 0;                 // argmax, lowest index on ties
};

inline int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  return best;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline PredictionResult make_prediction(std::vector<double> distribution) {
  PredictionResult r;
  r.predicted = argmax_lowest(distribution);
  r.distribution = std::move(distribution);
  return r;
}

// Abstract prediction function P(y|x). Implementations must be pure given
// fixed parameters; the query bookkeeping lives in ClassifierHandle.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual PredictionResult predict_text(const std::string& text) const = 0;
  virtual std::vector<PredictionResult> predict_texts(const std::vector<std::string>& texts) const {
    std::vector<PredictionResult> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(predict_text(t));
    return out;
  }
  virtual const std::vector<std::string>& label_space() const = 0;
  virtual std::string name() const = 0;
};

// Counting wrapper around a shared model. The counter is atomic and strictly
// monotone: +1 per single prediction, +batch size per batch, including calls
// that fail in transport (the query was spent either way). Each attack
// episode gets its own handle over the shared model so per-episode counts
// partition the total exactly.
class ClassifierHandle {
 public:
  explicit ClassifierHandle(std::shared_ptr<const TextClassifier> model)
      : model_(std::move(model)) {
    if (!model_) throw ConfigError("ClassifierHandle requires a model");
  }

  ClassifierHandle(const ClassifierHandle&) = delete;
  ClassifierHandle& operator=(const ClassifierHandle&) = delete;

  PredictionResult predict(const std::string& text) const {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return model_->predict_text(text);
  }

  std::vector<PredictionResult> predict_batch(const std::vector<std::string>& texts) const {
    queries_.fetch_add(texts.size(), std::memory_order_relaxed);
    return model_->predict_texts(texts);
  }

  std::uint64_t queries() const { return queries_.load(std::memory_order_relaxed); }

  std::uint64_t read_and_reset_queries() const {
    return queries_.exchange(0, std::memory_order_relaxed);
  }

  const TextClassifier& model() const { return *model_; }
  std::shared_ptr<const TextClassifier> model_ptr() const { return model_; }
  const std::vector<std::string>& label_space() const { return model_->label_space(); }
  std::string name() const { return model_->name(); }

 private:
  std::shared_ptr<const TextClassifier> model_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

inline PredictionResult predict(const ClassifierHandle& handle, const std::string& text) {
  return handle.predict(text);
}

inline std::vector<PredictionResult> predict_batch(const ClassifierHandle& handle,
                                                   const std::vector<std::string>& texts) {
  return handle.predict_batch(texts);
}

inline std::uint64_t read_and_reset_queries(const ClassifierHandle& handle) {
  return handle.read_and_reset_queries();
}

// ---------------------------------------------------------------------------
// Reference victim model: multinomial logistic regression over mean token
// embeddings. Out-of-vocabulary tokens contribute a zero vector but still
// count in the mean's denominator, which is the surface char-level attacks
// push on.

struct TrainHyper {
  double lr = 0.1;
  int epochs = 20;
  std::uint64_t seed = 1;
  double l2 = 0.0;
  double feature_scale = 1.0;
};

class ReferenceClassifier : public TextClassifier {
 public:
  ReferenceClassifier(std::shared_ptr<const EmbeddingStore> store,
                      std::vector<std::string> label_space,
                      std::vector<std::vector<double>> weights, std::vector<double> bias,
                      double feature_scale = 1.0, std::string tag = "reference")
      : store_(std::move(store)),
        labels_(std::move(label_space)),
        weights_(std::move(weights)),
        bias_(std::move(bias)),
        feature_scale_(feature_scale),
        tag_(std::move(tag)) {
    if (!store_) throw ConfigError("ReferenceClassifier requires an embedding store");
    if (weights_.size() != labels_.size() || bias_.size() != labels_.size())
      throw ConfigError("weight/bias shape does not match label space");
    for (const auto& row : weights_)
      if (row.size() != store_->dimension())
        throw ConfigError("weight dimension does not match embedding dimension");
  }

  std::vector<double> features(const std::string& text) const {
    std::vector<double> f(store_->dimension(), 0.0);
    TokenizedText t;
    try {
      t = tokenize(text, /*lowercase=*/true);
    } catch (const EmptyInputError&) {
      return f;  // empty probe text -> all-zeros feature
    }
    std::size_t total = t.tokens.size();
    for (const auto& tok : t.tokens) {
      if (!store_->contains(tok)) continue;
      auto vec = store_->vector_of(tok);
      for (std::size_t i = 0; i < f.size(); ++i) f[i] += vec[i];
    }
    for (double& v : f) v = v * feature_scale_ / static_cast<double>(total == 0 ? 1 : total);
    return f;
  }

  PredictionResult predict_text(const std::string& text) const override {
    return predict_features(features(text));
  }

  PredictionResult predict_features(std::span<const double> f) const {
    std::vector<double> logits(labels_.size(), 0.0);
    for (std::size_t k = 0; k < labels_.size(); ++k) {
      double z = bias_[k];
      for (std::size_t i = 0; i < f.size(); ++i) z += weights_[k][i] * f[i];
      logits[k] = z;
    }
    return make_prediction(softmax(logits));
  }

  const std::vector<std::string>& label_space() const override { return labels_; }
  std::string name() const override { return tag_; }

  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  double feature_scale() const { return feature_scale_; }
  const std::shared_ptr<const EmbeddingStore>& store() const { return store_; }

  nlohmann::json to_json() const {
    return nlohmann::json{{"version", 1},
                          {"type", "reference-classifier"},
                          {"label_space", labels_},
                          {"weights", weights_},
                          {"bias", bias_},
                          {"feature_scale", feature_scale_},
                          {"tag", tag_}};
  }

  static std::shared_ptr<ReferenceClassifier> from_json(const nlohmann::json& j,
                                                        std::shared_ptr<const EmbeddingStore> store) {
    return std::make_shared<ReferenceClassifier>(
        std::move(store), j.at("label_space").get<std::vector<std::string>>(),
        j.at("weights").get<std::vector<std::vector<double>>>(),
        j.at("bias").get<std::vector<double>>(), j.value("feature_scale", 1.0),
        j.value("tag", std::string("reference")));
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write classifier to " + path.string());
    out << to_json().dump(2) << '\n';
  }

  static std::shared_ptr<ReferenceClassifier> load(const std::filesystem::path& path,
                                                   std::shared_ptr<const EmbeddingStore> store) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open classifier file: " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j, std::move(store));
  }

 private:
  std::shared_ptr<const EmbeddingStore> store_;
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> weights_;  // [label][dim]
  std::vector<double> bias_;
  double feature_scale_;
  std::string tag_;
};

// Mean cross-entropy over the set, plus L2 penalty. Kept as a free function
// so tests can difference it numerically against the analytic gradient.
inline double logreg_loss(const std::vector<std::vector<double>>& weights,
                          const std::vector<double>& bias,
                          const std::vector<std::vector<double>>& feats,
                          const std::vector<int>& labels, double l2) {
  const std::size_t n = feats.size();
  const std::size_t k = weights.size();
  double loss = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> logits(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      double z = bias[c];
      for (std::size_t i = 0; i < feats[e].size(); ++i) z += weights[c][i] * feats[e][i];
      logits[c] = z;
    }
    auto probs = softmax(logits);
    loss -= std::log(std::max(probs[static_cast<std::size_t>(labels[e])], 1e-300));
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (const auto& row : weights)
    for (double w : row) reg += w * w;
  return loss + 0.5 * l2 * reg;
}

inline std::pair<std::vector<std::vector<double>>, std::vector<double>> logreg_gradient(
    const std::vector<std::vector<double>>& weights, const std::vector<double>& bias,
    const std::vector<std::vector<double>>& feats, const std::vector<int>& labels, double l2) {
  const std::size_t n = feats.size();
  const std::size_t k = weights.size();
  const std::size_t d = weights[0].size();
  std::vector<std::vector<double>> gw(k, std::vector<double>(d, 0.0));
  std::vector<double> gb(k, 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> logits(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      double z = bias[c];
      for (std::size_t i = 0; i < d; ++i) z += weights[c][i] * feats[e][i];
      logits[c] = z;
    }
    auto probs = softmax(logits);
    for (std::size_t c = 0; c < k; ++c) {
      double delta = probs[c] - (static_cast<int>(c) == labels[e] ? 1.0 : 0.0);
      gb[c] += delta;
      for (std::size_t i = 0; i < d; ++i) gw[c][i] += delta * feats[e][i];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    gb[c] /= static_cast<double>(n);
    for (std::size_t i = 0; i < d; ++i)
      gw[c][i] = gw[c][i] / static_cast<double>(n) + l2 * weights[c][i];
  }
  return {gw, gb};
}

struct TrainResult {
  std::shared_ptr<ReferenceClassifier> model;
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;  // mean loss after each epoch
};

inline TrainResult train_reference_classifier(const LabeledDataset& data,
                                              std::shared_ptr<const EmbeddingStore> store,
                                              const TrainHyper& hyper) {
  if (data.items.empty()) throw ConfigError("cannot train on an empty dataset");
  if (!store) throw ConfigError("training requires an embedding store");

  const std::size_t d = store->dimension();
  const std::size_t k = data.label_space.size();

  // Featurize once; the store is immutable.
  ReferenceClassifier probe(store, data.label_space,
                            std::vector<std::vector<double>>(k, std::vector<double>(d, 0.0)),
                            std::vector<double>(k, 0.0), hyper.feature_scale);
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  feats.reserve(data.items.size());
  for (const auto& ex : data.items) {
    feats.push_back(probe.features(ex.text));
    labels.push_back(ex.label);
  }

  std::vector<std::vector<double>> w(k, std::vector<double>(d, 0.0));
  std::vector<double> b(k, 0.0);
  Rng rng(hyper.seed);
  std::vector<std::size_t> order(feats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto& f = feats[idx];
      std::vector<double> logits(k, 0.0);
      for (std::size_t c = 0; c < k; ++c) {
        double z = b[c];
        for (std::size_t i = 0; i < d; ++i) z += w[c][i] * f[i];
        logits[c] = z;
      }
      auto probs = softmax(logits);
      for (std::size_t c = 0; c < k; ++c) {
        double delta = probs[c] - (static_cast<int>(c) == labels[idx] ? 1.0 : 0.0);
        b[c] -= hyper.lr * delta;
        for (std::size_t i = 0; i < d; ++i)
          w[c][i] -= hyper.lr * (delta * f[i] + hyper.l2 * w[c][i]);
      }
    }
    result.epoch_loss.push_back(logreg_loss(w, b, feats, labels, hyper.l2));
  }

  auto model = std::make_shared<ReferenceClassifier>(store, data.label_space, std::move(w),
                                                     std::move(b), hyper.feature_scale);
  std::size_t correct = 0;
  for (std::size_t e = 0; e < feats.size(); ++e)
    if (model->predict_features(feats[e]).predicted == labels[e]) ++correct;
  result.train_accuracy =
      100.0 * static_cast<double>(correct) / static_cast<double>(feats.size());
  result.model = std::move(model);
  return result;
}

// Adversarial-training baseline: retrain from scratch on the union of the
// clean data and attack outputs labeled with their original true labels.
inline TrainResult adversarial_retrain(const ReferenceClassifier& base, const LabeledDataset& data,
                                       const std::vector<LabeledExample>& adversarial,
                                       const TrainHyper& hyper) {
  if (data.items.empty() && adversarial.empty())
    throw ConfigError("cannot retrain on an empty union dataset");
  LabeledDataset merged;
  merged.label_space = data.label_space.empty()
                           ? base.label_space()
                           : data.label_space;
  merged.items = data.items;
  merged.items.insert(merged.items.end(), adversarial.begin(), adversarial.end());
  return train_reference_classifier(merged, base.store(), hyper);
}

}  // namespace redress
