#pragma once

// Deterministic synthetic workloads. Every generator is a pure function of
// its arguments; the same spec and seed give the same output.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hitmatch/fusion.hpp"
#include "hitmatch/rank_loss.hpp"
#include "hitmatch/types.hpp"

namespace hitmatch {

enum class WeightKind { real, integer };

struct WorkloadSpec {
  std::uint32_t num_ads = 1'000'000;
  std::uint32_t num_features = 100'000;
  std::uint64_t nnz = 16'000'000;
  double skew = 0.8;  // Zipf exponent of feature popularity
  std::uint32_t query_count = 1000;
  std::uint32_t query_nnz = 50;
  WeightKind weights = WeightKind::real;  // real: U[-1, 1), integer: {1..16}
  std::uint64_t seed = 7;
};

// Column populations follow a Zipf(skew) law over a seeded permutation of the
// feature ids, capped at N; the entry count is exactly spec.nnz.
// Throws Error(invalid_argument) if nnz > N * M or counts are zero.
BinaryInteractionMatrix generate_matrix(const WorkloadSpec& spec);

// Query features are drawn with the same popularity law, so popular columns
// are queried often. Throws Error(invalid_argument) if query_nnz > M.
std::vector<QueryVector> generate_queries(const WorkloadSpec& spec);

// N rows of `dim` floats drawn from U[-1, 1) / sqrt(dim).
AdTowerTable generate_tower_table(std::uint32_t num_ads, std::uint32_t dim, std::uint64_t seed);
Embedding generate_user_embedding(std::uint32_t dim, std::uint64_t seed);

// Requests of `depth` items: N(0, 1) scores, a random ground-truth
// permutation, values from U[0, 10).
std::vector<RankedRequest> generate_requests(std::size_t count, std::size_t depth,
                                             std::uint64_t seed);

}  // namespace hitmatch
