#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hitmatch/query.hpp"
#include "hitmatch/types.hpp"

namespace hitmatch {

// indexed: grouped block index; csc: column gather; dense: scan of every
// stored interaction per query (row_scan_scores_into).
enum class BenchMethod { indexed, csc, dense };

std::string_view method_name(BenchMethod method);
std::optional<BenchMethod> parse_method(std::string_view name);

struct BenchOptions {
  std::vector<BenchMethod> methods{BenchMethod::indexed, BenchMethod::csc};
  unsigned iters = 1;      // timed passes after the cold pass
  unsigned workers = 0;    // 0: available parallelism (indexed method only)
  std::uint32_t tile_ads = kDefaultTileAds;
};

struct BenchRow {
  BenchMethod method = BenchMethod::indexed;
  double preprocess_ms = 0.0;
  double qps = 0.0;       // warm: timed queries / timed wall time
  double cold_qps = 0.0;  // first pass, right after preprocessing
  double p50_us = 0.0;
  double p99_us = 0.0;
  double mean_us = 0.0;
  std::size_t timed_queries = 0;

  // Preprocessing cost spread over `queries` queries, in microseconds.
  double amortized_us(std::size_t queries) const {
    return queries == 0 ? 0.0 : preprocess_ms * 1000.0 / static_cast<double>(queries);
  }
};

struct BenchReport {
  std::uint32_t num_ads = 0;
  std::uint32_t num_features = 0;
  std::size_t nnz = 0;
  std::size_t query_count = 0;
  double mean_query_nnz = 0.0;
  unsigned workers = 1;
  std::vector<BenchRow> rows;
};

// Builds each method's structure (timed as preprocessing) and runs one cold
// pass with it. Then runs `iters` timed passes over all queries, interleaved
// across methods.
BenchReport run_bench(const BinaryInteractionMatrix& matrix, std::span<const QueryVector> queries,
                      const BenchOptions& options);

// Fixed schema: method,preprocess_ms,qps,p50_us,p99_us
void write_bench_csv(std::ostream& out, const BenchReport& report);

}  // namespace hitmatch
