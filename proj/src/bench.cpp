#include "hitmatch/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <thread>

#include "hitmatch/index.hpp"
#include "hitmatch/oracle.hpp"
#include "hitmatch/query.hpp"

namespace hitmatch {

std::string_view method_name(BenchMethod method) {
  switch (method) {
    case BenchMethod::indexed: return "indexed";
    case BenchMethod::csc: return "csc";
    case BenchMethod::dense: return "dense";
  }
  return "?";
}

std::optional<BenchMethod> parse_method(std::string_view name) {
  for (BenchMethod m : {BenchMethod::indexed, BenchMethod::csc, BenchMethod::dense}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  // nearest rank
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

using ScoreFn = std::function<void(const QueryVector&, std::span<double>)>;

// One method under test: its scoring routine plus accumulated timings.
struct Runner {
  ScoreFn score;
  std::vector<double> latencies;
  double total_ms = 0.0;
};

volatile double sink_value = 0.0;

// One pass over all queries; returns wall time in ms.
double run_pass(std::span<const QueryVector> queries, const ScoreFn& score,
                std::span<double> scores, std::vector<double>* latencies) {
  const std::size_t probe = scores.size() / 2;
  double sink = 0.0;
  const auto start = Clock::now();
  for (const QueryVector& q : queries) {
    const auto t0 = Clock::now();
    score(q, scores);
    if (latencies) {
      latencies->push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    }
    if (!scores.empty()) sink += scores[probe];
  }
  const double ms = elapsed_ms(start);
  sink_value = sink_value + sink;
  return ms;
}

}  // namespace

BenchReport run_bench(const BinaryInteractionMatrix& matrix, std::span<const QueryVector> queries,
                      const BenchOptions& options) {
  if (options.iters == 0) fail(ErrorCode::invalid_argument, "bench needs at least one iteration");
  for (const QueryVector& q : queries) q.check_bounds(matrix.num_features());

  BenchReport report;
  report.num_ads = matrix.num_ads();
  report.num_features = matrix.num_features();
  report.nnz = matrix.nnz();
  report.query_count = queries.size();
  std::size_t terms = 0;
  for (const QueryVector& q : queries) terms += q.size();
  report.mean_query_nnz =
      queries.empty() ? 0.0 : static_cast<double>(terms) / static_cast<double>(queries.size());
  report.workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                        : options.workers;

  // Every structure is built, then used once cold. Timed passes interleave
  // the methods so that drift in machine load hits all of them alike.
  std::optional<GroupedIndex> index;
  std::optional<QueryEngine> engine;
  std::optional<CscMatrix> csc;
  std::optional<RowScanMatrix> rows;
  std::vector<double> scores(matrix.num_ads());
  std::vector<Runner> runners;
  for (BenchMethod method : options.methods) {
    BenchRow row;
    row.method = method;
    Runner runner;
    const auto t0 = Clock::now();
    switch (method) {
      case BenchMethod::indexed:
        index.emplace(build_index(matrix, report.workers));
        row.preprocess_ms = elapsed_ms(t0);
        engine.emplace(*index, QueryOptions{report.workers, options.tile_ads});
        runner.score = [&](const QueryVector& q, std::span<double> out) {
          engine->score_into(q, out);
        };
        break;
      case BenchMethod::csc:
        csc.emplace(csc_from_matrix(matrix));
        row.preprocess_ms = elapsed_ms(t0);
        runner.score = [&](const QueryVector& q, std::span<double> out) {
          csc_scores_into(*csc, q, out);
        };
        break;
      case BenchMethod::dense:
        rows.emplace(row_scan_from_matrix(matrix));
        row.preprocess_ms = elapsed_ms(t0);
        runner.score = [&](const QueryVector& q, std::span<double> out) {
          row_scan_scores_into(*rows, q, out);
        };
        break;
    }
    const double cold_ms = run_pass(queries, runner.score, scores, nullptr);
    row.cold_qps = cold_ms > 0 ? 1000.0 * static_cast<double>(queries.size()) / cold_ms : 0.0;
    runner.latencies.reserve(queries.size() * options.iters);
    report.rows.push_back(row);
    runners.push_back(std::move(runner));
  }

  for (unsigned it = 0; it < options.iters; ++it) {
    for (Runner& r : runners) r.total_ms += run_pass(queries, r.score, scores, &r.latencies);
  }

  for (std::size_t m = 0; m < runners.size(); ++m) {
    BenchRow& row = report.rows[m];
    std::vector<double>& lat = runners[m].latencies;
    row.timed_queries = lat.size();
    row.qps = runners[m].total_ms > 0
                  ? 1000.0 * static_cast<double>(lat.size()) / runners[m].total_ms
                  : 0.0;
    double sum = 0.0;
    for (double l : lat) sum += l;
    row.mean_us = lat.empty() ? 0.0 : sum / static_cast<double>(lat.size());
    std::sort(lat.begin(), lat.end());
    row.p50_us = percentile(lat, 0.50);
    row.p99_us = percentile(lat, 0.99);
  }
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "method,preprocess_ms,qps,p50_us,p99_us\n";
  for (const BenchRow& r : report.rows) {
    out << method_name(r.method) << ',' << r.preprocess_ms << ',' << r.qps << ',' << r.p50_us
        << ',' << r.p99_us << '\n';
  }
}

}  // namespace hitmatch
