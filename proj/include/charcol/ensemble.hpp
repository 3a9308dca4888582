#pragma once

#include <map>
#include <string>
#include <vector>

#include "charcol/column.hpp"
#include "charcol/dataset.hpp"

namespace charcol {

// Multi-column network membership: ordered, non-empty, no duplicates.
struct EnsembleSpec {
  std::vector<std::string> member_ids;
};

void validate(const EnsembleSpec& spec);

// Elementwise arithmetic mean over the member score vectors.
ClassScores average_scores(const std::vector<ClassScores>& members);

// k class indices in strictly descending score order; ties break toward the
// lower class index. Throws InvalidArgument unless 1 <= k <= C.
std::vector<int> predict_topk(const ClassScores& scores, int k);

struct EvalReport {
  std::size_t n_samples = 0;
  std::uint32_t class_count = 0;
  std::vector<std::string> member_ids;
  std::map<int, std::size_t> topk_error_counts;  // k -> misclassified count
  double mean_latency_ms = 0.0;                  // ensemble ms per character
  std::vector<double> member_latency_ms;         // per member ms per character

  double topk_error(int k) const;  // fraction, error_count / n
  double top1_error() const { return topk_error(1); }
};

// Forward every member on every sample, average the scores, and test label
// membership in the top k for each requested k. Per-member forward time is
// measured per sample. Error statistics are deterministic for fixed inputs
// and independent of `threads`; latencies are measurements.
EvalReport evaluate(const std::vector<Column>& columns, const EnsembleSpec& spec,
                    const Dataset& dataset, const std::vector<int>& ks, int threads = 1);

struct AdditivityCheck {
  double ensemble_ms = 0.0;
  double member_sum_ms = 0.0;
  double ratio = 1.0;       // ensemble / sum of members
  bool within_10pct = true;
};

AdditivityCheck latency_breakdown(const EvalReport& report);

// Line-oriented key=value rendering. Numeric fields use 6 significant
// digits. Latency fields are measurements, so they are emitted only when
// `include_timing` is set; without them the text is byte-stable across runs.
std::string render_report_kv(const EvalReport& report, bool include_timing);

// Machine-readable JSON dump, same gating rule.
std::string render_report_json(const EvalReport& report, bool include_timing);

// 6-significant-digit formatting used by every numeric report field.
std::string fmt6(double v);

}  // namespace charcol
