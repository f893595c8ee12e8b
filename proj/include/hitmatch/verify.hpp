#pragma once

#include <cstddef>
#include <span>

#include "hitmatch/index.hpp"
#include "hitmatch/query.hpp"
#include "hitmatch/types.hpp"

namespace hitmatch {

// |actual - expected| <= max(rel * |expected|, abs)
struct Tolerance {
  double rel = 1e-6;
  double abs = 1e-9;

  bool accepts(double actual, double expected) const;
};

struct VerifyReport {
  std::size_t queries = 0;
  std::size_t mismatched_scores = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // over scores where the relative bound is the binding one

  bool passed() const noexcept { return mismatched_scores == 0; }
};

// Scores every query with the index and with the CSC oracle built from
// `matrix`, and compares element-wise.
VerifyReport verify_index(const BinaryInteractionMatrix& matrix, const GroupedIndex& index,
                          std::span<const QueryVector> queries, const QueryOptions& options = {},
                          Tolerance tolerance = {});

}  // namespace hitmatch
