#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "hitmatch/types.hpp"

namespace hmtest {

using hitmatch::BinaryInteractionMatrix;
using hitmatch::Entry;
using hitmatch::QueryTerm;
using hitmatch::QueryVector;

// Uniform random matrix with roughly `density` of the cells set.
inline BinaryInteractionMatrix random_matrix(std::mt19937_64& rng, std::uint32_t n,
                                             std::uint32_t m, double density) {
  std::vector<Entry> pairs;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto target = static_cast<std::size_t>(density * n * m);
  std::uniform_int_distribution<std::uint32_t> ad(0, n - 1), feat(0, m - 1);
  for (std::size_t k = 0; k < target; ++k) pairs.push_back({feat(rng), ad(rng)});
  return BinaryInteractionMatrix::from_entries(n, m, pairs);
}

// Matrix whose columns hold dense runs of ads, so every block group is used.
inline BinaryInteractionMatrix clustered_matrix(std::mt19937_64& rng, std::uint32_t n,
                                                std::uint32_t m) {
  std::vector<Entry> pairs;
  std::uniform_int_distribution<std::uint32_t> ad(0, n - 1);
  std::uniform_int_distribution<unsigned> run(1, 256);
  for (std::uint32_t f = 0; f < m; ++f) {
    const unsigned runs = 1 + f % 5;
    for (unsigned r = 0; r < runs; ++r) {
      const std::uint32_t start = ad(rng) & ~0xffu;
      const unsigned len = run(rng);
      std::bernoulli_distribution keep(0.5 + 0.5 * (r % 2));
      for (unsigned k = 0; k < len && start + k < n; ++k) {
        if (keep(rng)) pairs.push_back({f, start + k});
      }
    }
  }
  return BinaryInteractionMatrix::from_entries(n, m, pairs);
}

inline QueryVector random_query(std::mt19937_64& rng, std::uint32_t m, std::size_t nnz,
                                bool integer) {
  std::set<std::uint32_t> feats;
  std::uniform_int_distribution<std::uint32_t> f(0, m - 1);
  nnz = std::min<std::size_t>(nnz, m);
  while (feats.size() < nnz) feats.insert(f(rng));
  std::uniform_int_distribution<int> iw(-16, 16);
  std::uniform_real_distribution<double> rw(-1.0, 1.0);
  std::vector<QueryTerm> terms;
  for (std::uint32_t id : feats) {
    terms.push_back({id, integer ? static_cast<double>(iw(rng)) : rw(rng)});
  }
  return QueryVector(std::move(terms));
}

// Literal per-ad, per-term sum over a cell set; no shared code with the
// library's scorers.
inline std::vector<double> brute_scores(const BinaryInteractionMatrix& l, const QueryVector& q) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> cells;
  for (const Entry& e : l.entries()) cells.insert({e.ad, e.feature});
  std::vector<double> out(l.num_ads(), 0.0);
  for (std::uint32_t a = 0; a < l.num_ads(); ++a) {
    for (const QueryTerm& t : q.terms()) {
      if (cells.count({a, t.feature})) out[a] += t.weight;
    }
  }
  return out;
}

inline bool close(double actual, double expected, double rel = 1e-6, double abs = 1e-9) {
  const double d = actual > expected ? actual - expected : expected - actual;
  const double mag = expected < 0 ? -expected : expected;
  return d <= std::max(rel * mag, abs);
}

}  // namespace hmtest
