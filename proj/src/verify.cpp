#include "hitmatch/verify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hitmatch/oracle.hpp"

namespace hitmatch {

bool Tolerance::accepts(double actual, double expected) const {
  return std::abs(actual - expected) <= std::max(rel * std::abs(expected), abs);
}

VerifyReport verify_index(const BinaryInteractionMatrix& matrix, const GroupedIndex& index,
                          std::span<const QueryVector> queries, const QueryOptions& options,
                          Tolerance tolerance) {
  if (matrix.num_ads() != index.num_ads() || matrix.num_features() != index.num_features()) {
    fail(ErrorCode::dimension_mismatch,
         "index is " + std::to_string(index.num_ads()) + " x " +
             std::to_string(index.num_features()) + " but matrix is " +
             std::to_string(matrix.num_ads()) + " x " + std::to_string(matrix.num_features()));
  }
  const CscMatrix csc = csc_from_matrix(matrix);
  QueryEngine engine(index, options);
  std::vector<double> expected(matrix.num_ads());
  std::vector<double> actual(matrix.num_ads());

  VerifyReport report;
  for (const QueryVector& q : queries) {
    csc_scores_into(csc, q, expected);
    engine.score_into(q, actual);
    for (std::size_t a = 0; a < expected.size(); ++a) {
      const double err = std::abs(actual[a] - expected[a]);
      report.max_abs_err = std::max(report.max_abs_err, err);
      if (std::abs(expected[a]) * tolerance.rel >= tolerance.abs) {
        report.max_rel_err = std::max(report.max_rel_err, err / std::abs(expected[a]));
      }
      if (!tolerance.accepts(actual[a], expected[a])) ++report.mismatched_scores;
    }
    ++report.queries;
  }
  return report;
}

}  // namespace hitmatch
