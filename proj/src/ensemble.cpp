#include "charcol/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "charcol/imageprep.hpp"

namespace charcol {

void validate(const EnsembleSpec& spec) {
  if (spec.member_ids.empty()) throw InvalidArgument("ensemble must have at least one member");
  std::set<std::string> seen;
  for (const auto& id : spec.member_ids)
    if (!seen.insert(id).second)
      throw InvalidArgument("duplicate ensemble member '" + id + "'");
}

ClassScores average_scores(const std::vector<ClassScores>& members) {
  if (members.empty()) throw InvalidArgument("average_scores: empty member list");
  const std::size_t n = members[0].values.size();
  ClassScores out;
  out.values.assign(n, 0.0);
  for (const auto& m : members) {
    if (m.values.size() != n)
      throw InvalidArgument("average_scores: member score lengths differ");
    for (std::size_t i = 0; i < n; ++i) out.values[i] += m.values[i];
  }
  for (auto& v : out.values) v /= static_cast<double>(members.size());
  return out;
}

std::vector<int> predict_topk(const ClassScores& scores, int k) {
  const int c = static_cast<int>(scores.values.size());
  if (k < 1 || k > c)
    throw InvalidArgument("predict_topk: k=" + std::to_string(k) + " out of range for " +
                          std::to_string(c) + " classes");
  std::vector<int> idx(scores.values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto better = [&](int a, int b) {
    if (scores.values[a] != scores.values[b]) return scores.values[a] > scores.values[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), better);
  idx.resize(k);
  return idx;
}

double EvalReport::topk_error(int k) const {
  const auto it = topk_error_counts.find(k);
  if (it == topk_error_counts.end())
    throw InvalidArgument("report holds no top-" + std::to_string(k) + " entry");
  return n_samples == 0 ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n_samples);
}

namespace {

struct SampleOutcome {
  std::vector<char> missed;        // parallel to ks
  std::vector<double> member_ms;   // per member forward time
  double total_ms = 0.0;
};

SampleOutcome eval_one(const std::vector<Column>& columns, const Sample& sample,
                       const std::vector<int>& ks) {
  using clock = std::chrono::steady_clock;
  SampleOutcome out;
  out.member_ms.resize(columns.size());
  const Tensor input = normalize_for_net(sample.image);

  const auto t0 = clock::now();
  std::vector<ClassScores> member_scores;
  member_scores.reserve(columns.size());
  for (std::size_t m = 0; m < columns.size(); ++m) {
    const auto s0 = clock::now();
    member_scores.push_back(forward_column(columns[m], input));
    const auto s1 = clock::now();
    out.member_ms[m] = std::chrono::duration<double, std::milli>(s1 - s0).count();
  }
  const ClassScores avg = average_scores(member_scores);

  const int kmax = *std::max_element(ks.begin(), ks.end());
  const auto top = predict_topk(avg, kmax);
  out.missed.reserve(ks.size());
  for (int k : ks) {
    const auto end = top.begin() + k;
    out.missed.push_back(std::find(top.begin(), end, static_cast<int>(sample.label)) == end);
  }
  const auto t1 = clock::now();
  out.total_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

}  // namespace

EvalReport evaluate(const std::vector<Column>& columns, const EnsembleSpec& spec,
                    const Dataset& dataset, const std::vector<int>& ks, int threads) {
  validate(spec);
  if (columns.size() != spec.member_ids.size())
    throw InvalidArgument("evaluate: column count does not match ensemble spec");
  if (dataset.samples.empty()) throw DataError("evaluate: empty dataset");
  if (ks.empty()) throw InvalidArgument("evaluate: no k values requested");
  for (const auto& col : columns) {
    if (static_cast<std::uint32_t>(col.spec.class_count()) != dataset.class_count)
      throw DataError("evaluate: column has " + std::to_string(col.spec.class_count()) +
                      " classes, dataset has " + std::to_string(dataset.class_count));
  }
  for (int k : ks)
    if (k < 1 || k > static_cast<int>(dataset.class_count))
      throw InvalidArgument("evaluate: k=" + std::to_string(k) + " out of range");

  const std::size_t n = dataset.samples.size();
  std::vector<SampleOutcome> outcomes(n);
  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) outcomes[i] = eval_one(columns, dataset.samples[i], ks);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          outcomes[i] = eval_one(columns, dataset.samples[i], ks);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  EvalReport report;
  report.n_samples = n;
  report.class_count = dataset.class_count;
  report.member_ids = spec.member_ids;
  report.member_latency_ms.assign(columns.size(), 0.0);
  for (int k : ks) report.topk_error_counts[k] = 0;
  double total_ms = 0.0;
  for (const auto& o : outcomes) {
    for (std::size_t ki = 0; ki < ks.size(); ++ki)
      if (o.missed[ki]) ++report.topk_error_counts[ks[ki]];
    for (std::size_t m = 0; m < columns.size(); ++m)
      report.member_latency_ms[m] += o.member_ms[m];
    total_ms += o.total_ms;
  }
  for (auto& ms : report.member_latency_ms) ms /= static_cast<double>(n);
  report.mean_latency_ms = total_ms / static_cast<double>(n);
  return report;
}

AdditivityCheck latency_breakdown(const EvalReport& report) {
  AdditivityCheck check;
  check.ensemble_ms = report.mean_latency_ms;
  check.member_sum_ms = std::accumulate(report.member_latency_ms.begin(),
                                        report.member_latency_ms.end(), 0.0);
  check.ratio = check.member_sum_ms > 0 ? check.ensemble_ms / check.member_sum_ms : 1.0;
  check.within_10pct = std::abs(check.ratio - 1.0) <= 0.10;
  return check;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string render_report_kv(const EvalReport& report, bool include_timing) {
  std::ostringstream out;
  out << "n_samples=" << report.n_samples << '\n';
  out << "classes=" << report.class_count << '\n';
  out << "members=" << report.member_ids.size() << '\n';
  for (std::size_t i = 0; i < report.member_ids.size(); ++i)
    out << "member_" << i << '=' << report.member_ids[i] << '\n';
  for (const auto& [k, errors] : report.topk_error_counts) {
    out << "top" << k << "_errors=" << errors << '/' << report.n_samples << '\n';
    out << "top" << k << "_error_percent=" << fmt6(report.topk_error(k) * 100.0) << '\n';
  }
  if (include_timing) {
    out << "mean_latency_ms=" << fmt6(report.mean_latency_ms) << '\n';
    for (std::size_t i = 0; i < report.member_latency_ms.size(); ++i)
      out << "member_" << i << "_latency_ms=" << fmt6(report.member_latency_ms[i]) << '\n';
    const auto add = latency_breakdown(report);
    out << "latency_additivity_ratio=" << fmt6(add.ratio) << '\n';
  }
  return out.str();
}

std::string render_report_json(const EvalReport& report, bool include_timing) {
  nlohmann::json j;
  j["n_samples"] = report.n_samples;
  j["classes"] = report.class_count;
  j["members"] = report.member_ids;
  nlohmann::json topk = nlohmann::json::object();
  for (const auto& [k, errors] : report.topk_error_counts) {
    topk[std::to_string(k)] = {{"errors", errors},
                               {"rate", report.topk_error(k)},
                               {"percent_6sig", fmt6(report.topk_error(k) * 100.0)}};
  }
  j["topk"] = topk;
  if (include_timing) {
    j["mean_latency_ms"] = report.mean_latency_ms;
    j["member_latency_ms"] = report.member_latency_ms;
    j["latency_additivity_ratio"] = latency_breakdown(report).ratio;
  }
  return j.dump(2) + "\n";
}

}  // namespace charcol
