#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "redress/attack.hpp"
#include "redress/classifier.hpp"
#include "redress/dataset.hpp"
#include "redress/defense.hpp"
#include "redress/errors.hpp"
#include "redress/rng.hpp"

namespace redress {

struct ExampleDigest {
  std::size_t index = 0;
  AttackStatus status = AttackStatus::failed;
  std::uint64_t queries = 0;
  std::size_t edits = 0;
};

// Robustness metrics for one (pipeline, attack, dataset) run. ASR counts
// successes over attacked (non-skipped) examples; AA is its exact complement.
struct EvalReport {
  double clean_accuracy = 0.0;
  std::size_t attacked = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t skipped = 0;
  double asr = 0.0;
  double adversarial_accuracy = 100.0;
  double avg_queries = 0.0;
  std::vector<ExampleDigest> per_example;
  std::uint64_t config_digest = 0;

  std::size_t total() const { return successes + failures + skipped; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& d : per_example)
      per.push_back({{"index", d.index},
                     {"status", to_string(d.status)},
                     {"queries", d.queries},
                     {"edits", d.edits}});
    return nlohmann::ordered_json{{"schema", 1},
                                  {"clean_accuracy", clean_accuracy},
                                  {"attacked", attacked},
                                  {"successes", successes},
                                  {"failures", failures},
                                  {"skipped", skipped},
                                  {"asr", asr},
                                  {"adversarial_accuracy", adversarial_accuracy},
                                  {"avg_queries", avg_queries},
                                  {"config_digest", config_digest},
                                  {"per_example", std::move(per)}};
  }
};

// Accuracy (percent) of the pipeline on clean inputs.
inline double evaluate_clean(const TextClassifier& pipeline, const LabeledDataset& data) {
  if (data.items.empty()) throw ConfigError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for (const auto& ex : data.items)
    if (pipeline.predict_text(ex.text).predicted == ex.label) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.items.size());
}

inline double evaluate_clean(const Interceptor& interceptor, const TextClassifier& model,
                             const LabeledDataset& data) {
  if (data.items.empty()) throw ConfigError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for (const auto& ex : data.items)
    if (model.predict_text(interceptor.transform(ex.text)).predicted == ex.label) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.items.size());
}

// Runs one attack episode per example against the pipeline. The attacker only
// ever queries the composed pipeline (never the inner classifier or the
// rewriter alone), each episode gets its own counting handle and a seed of
// base_seed + index, and results are identical for any worker count.
inline EvalReport evaluate_under_attack(std::shared_ptr<const TextClassifier> pipeline,
                                        const LabeledDataset& data, const AttackSpec& spec,
                                        std::uint64_t base_seed, int jobs = 1,
                                        std::vector<AttackOutcome>* outcomes_out = nullptr) {
  if (!pipeline) throw ConfigError("evaluate_under_attack needs a pipeline");
  const std::size_t n = data.items.size();
  std::vector<AttackOutcome> outcomes(n);

  auto episode = [&](std::size_t i) {
    ClassifierHandle handle(pipeline);
    AttackSpec ep_spec = spec;
    ep_spec.seed = base_seed + i;
    outcomes[i] = run_attack(handle, data.items[i].text, data.items[i].label, ep_spec);
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) episode(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) episode(i);
      });
    for (auto& t : workers) t.join();
  }

  EvalReport report;
  report.clean_accuracy = evaluate_clean(*pipeline, data);
  std::uint64_t attack_queries = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = outcomes[i];
    switch (o.status) {
      case AttackStatus::success: ++report.successes; break;
      case AttackStatus::failed: ++report.failures; break;
      case AttackStatus::skipped: ++report.skipped; break;
    }
    if (o.status != AttackStatus::skipped) attack_queries += o.queries_used;
    report.per_example.push_back({i, o.status, o.queries_used, o.trajectory.edit_count()});
  }
  report.attacked = report.successes + report.failures;
  report.asr = report.attacked == 0
                   ? 0.0
                   : 100.0 * static_cast<double>(report.successes) /
                         static_cast<double>(report.attacked);
  report.adversarial_accuracy = 100.0 - report.asr;
  report.avg_queries = report.attacked == 0 ? 0.0
                                            : static_cast<double>(attack_queries) /
                                                  static_cast<double>(report.attacked);
  report.config_digest = fnv1a(spec.name + "|" + std::to_string(base_seed));
  if (outcomes_out) *outcomes_out = std::move(outcomes);
  return report;
}

// Spec-shaped convenience: optional interceptor defense in front of a model.
inline EvalReport evaluate_under_attack(const AttackSpec& spec, const Interceptor* defense,
                                        std::shared_ptr<const TextClassifier> model,
                                        const LabeledDataset& data, std::uint64_t base_seed,
                                        int jobs = 1,
                                        std::vector<AttackOutcome>* outcomes_out = nullptr) {
  std::shared_ptr<const TextClassifier> pipeline = model;
  if (defense) {
    // Non-owning view; the caller keeps the interceptor alive for the call.
    std::shared_ptr<const Interceptor> alias(std::shared_ptr<const Interceptor>(), defense);
    pipeline = std::make_shared<InterceptedClassifier>(alias, model);
  }
  return evaluate_under_attack(pipeline, data, spec, base_seed, jobs, outcomes_out);
}

struct LatencyReport {
  double pipeline_ms = 0.0;
  double bare_ms = 0.0;
  std::size_t measured = 0;  // predictions timed per side
};

// Mean wall-clock per prediction over the 100-clean + 100-adversarial
// protocol (other sizes only when enforce_protocol is off). Strictly
// single-threaded; warmup predictions are discarded.
inline LatencyReport measure_latency(const TextClassifier& pipeline, const TextClassifier& bare,
                                     std::span<const std::string> clean_texts,
                                     std::span<const std::string> adversarial_texts,
                                     int warmup = 5, bool enforce_protocol = true) {
  if (clean_texts.empty() || adversarial_texts.empty())
    throw ConfigError("latency measurement needs non-empty clean and adversarial sets");
  if (enforce_protocol && (clean_texts.size() != 100 || adversarial_texts.size() != 100))
    throw ConfigError("latency protocol expects exactly 100 clean + 100 adversarial texts");

  std::vector<std::string> all;
  all.reserve(clean_texts.size() + adversarial_texts.size());
  all.insert(all.end(), clean_texts.begin(), clean_texts.end());
  all.insert(all.end(), adversarial_texts.begin(), adversarial_texts.end());

  auto time_model = [&](const TextClassifier& model) {
    for (int w = 0; w < warmup; ++w) (void)model.predict_text(all[static_cast<std::size_t>(w) % all.size()]);
    auto start = std::chrono::steady_clock::now();
    for (const auto& text : all) (void)model.predict_text(text);
    auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    return elapsed.count() / static_cast<double>(all.size());
  };

  LatencyReport report;
  report.measured = all.size();
  report.bare_ms = time_model(bare);
  report.pipeline_ms = time_model(pipeline);
  return report;
}

struct TransferCell {
  double clean_before = 0.0;
  double clean_after = 0.0;
  double aa_before = 0.0;
  double aa_after = 0.0;
  double improvement = 0.0;  // aa_after - aa_before
};

struct TransferTarget {
  std::string name;
  std::shared_ptr<const TextClassifier> model;
  const LabeledDataset* data = nullptr;
};

struct NamedInterceptor {
  std::string name;
  std::shared_ptr<const Interceptor> interceptor;
};

struct TransferMatrix {
  std::vector<std::string> row_names;  // rewriter provenance
  std::vector<std::string> col_names;  // target classifier/dataset
  std::vector<std::vector<TransferCell>> cells;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cells.size(); ++r) {
      nlohmann::ordered_json cols = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < cells[r].size(); ++c)
        cols.push_back({{"target", col_names[c]},
                        {"clean_before", cells[r][c].clean_before},
                        {"clean_after", cells[r][c].clean_after},
                        {"aa_before", cells[r][c].aa_before},
                        {"aa_after", cells[r][c].aa_after},
                        {"improvement", cells[r][c].improvement}});
      rows.push_back({{"rewriter", row_names[r]}, {"cells", std::move(cols)}});
    }
    return nlohmann::ordered_json{{"schema", 1}, {"rows", std::move(rows)}};
  }
};

// Evaluates every rewriter against every target with and without the defense
// installed. Rewriters are never retrained here; that is the point.
inline TransferMatrix run_transfer_matrix(std::span<const NamedInterceptor> rewriters,
                                          std::span<const TransferTarget> targets,
                                          const AttackSpec& spec, std::uint64_t seed,
                                          int jobs = 1) {
  TransferMatrix matrix;
  for (const auto& r : rewriters) matrix.row_names.push_back(r.name);
  for (const auto& t : targets) matrix.col_names.push_back(t.name);

  for (const auto& r : rewriters) {
    std::vector<TransferCell> row;
    for (const auto& t : targets) {
      TransferCell cell;
      auto bare_report = evaluate_under_attack(t.model, *t.data, spec, seed, jobs);
      cell.clean_before = bare_report.clean_accuracy;
      cell.aa_before = bare_report.adversarial_accuracy;
      auto defended =
          std::make_shared<InterceptedClassifier>(r.interceptor, t.model);
      auto def_report = evaluate_under_attack(defended, *t.data, spec, seed, jobs);
      cell.clean_after = def_report.clean_accuracy;
      cell.aa_after = def_report.adversarial_accuracy;
      cell.improvement = cell.aa_after - cell.aa_before;
      row.push_back(cell);
    }
    matrix.cells.push_back(std::move(row));
  }
  return matrix;
}

// ---------------------------------------------------------------------------
// Report rendering: one row per defense, columns Clean Acc then per-attack
// AA / #Q pairs, in the order given.

enum class ReportFormat { markdown, csv, json_format };

inline ReportFormat report_format_from_string(const std::string& s) {
  if (s == "markdown" || s == "markdown-table" || s == "md") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json_format;
  throw ConfigError("unknown report format: " + s);
}

struct AttackCell {
  std::string attack;
  double aa = 0.0;
  double avg_queries = 0.0;
};

struct ReportRow {
  std::string defense;
  double clean_accuracy = 0.0;
  std::vector<AttackCell> attacks;
};

namespace detail {

inline std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

inline std::vector<std::string> attack_columns(std::span<const ReportRow> rows) {
  std::vector<std::string> names;
  for (const auto& row : rows)
    for (const auto& cell : row.attacks)
      if (std::find(names.begin(), names.end(), cell.attack) == names.end())
        names.push_back(cell.attack);
  return names;
}

inline const AttackCell* find_cell(const ReportRow& row, const std::string& attack) {
  for (const auto& c : row.attacks)
    if (c.attack == attack) return &c;
  return nullptr;
}

}  // namespace detail

inline std::string render_report(std::span<const ReportRow> rows, ReportFormat format) {
  auto attacks = detail::attack_columns(rows);

  if (format == ReportFormat::json_format) {
    nlohmann::ordered_json out;
    out["schema"] = 1;
    nlohmann::ordered_json jrows = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
      nlohmann::ordered_json jr;
      jr["defense"] = row.defense;
      jr["clean_accuracy"] = row.clean_accuracy;
      nlohmann::ordered_json cells = nlohmann::ordered_json::array();
      for (const auto& name : attacks) {
        if (const auto* c = detail::find_cell(row, name))
          cells.push_back({{"attack", name}, {"aa", c->aa}, {"avg_queries", c->avg_queries}});
      }
      jr["attacks"] = std::move(cells);
      jrows.push_back(std::move(jr));
    }
    out["rows"] = std::move(jrows);
    return out.dump(2) + "\n";
  }

  if (format == ReportFormat::csv) {
    std::string out = "Defense,Clean Acc";
    for (const auto& name : attacks) out += "," + name + " AA," + name + " #Q";
    out += "\n";
    for (const auto& row : rows) {
      out += row.defense + "," + detail::fixed2(row.clean_accuracy);
      for (const auto& name : attacks) {
        const auto* c = detail::find_cell(row, name);
        out += c ? "," + detail::fixed2(c->aa) + "," + detail::fixed2(c->avg_queries) : ",,";
      }
      out += "\n";
    }
    return out;
  }

  // markdown
  std::string out = "| Defense | Clean Acc |";
  std::string sep = "| --- | --- |";
  for (const auto& name : attacks) {
    out += " " + name + " AA | " + name + " #Q |";
    sep += " --- | --- |";
  }
  out += "\n" + sep + "\n";
  for (const auto& row : rows) {
    out += "| " + row.defense + " | " + detail::fixed2(row.clean_accuracy) + " |";
    for (const auto& name : attacks) {
      const auto* c = detail::find_cell(row, name);
      out += c ? " " + detail::fixed2(c->aa) + " | " + detail::fixed2(c->avg_queries) + " |"
               : "  |  |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace redress
