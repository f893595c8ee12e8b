#include "hitmatch/oracle.hpp"

#include <algorithm>
#include <string>

namespace hitmatch {

CscMatrix csc_from_matrix(const BinaryInteractionMatrix& matrix) {
  CscMatrix csc;
  csc.num_ads = matrix.num_ads();
  csc.num_features = matrix.num_features();
  csc.col_offsets.assign(std::size_t{matrix.num_features()} + 1, 0);
  csc.row_ids.reserve(matrix.nnz());
  // Entries are feature-major sorted, so the columns come out in order.
  for (const Entry& e : matrix.entries()) {
    ++csc.col_offsets[e.feature + 1];
    csc.row_ids.push_back(e.ad);
  }
  for (std::size_t i = 1; i < csc.col_offsets.size(); ++i) {
    csc.col_offsets[i] += csc.col_offsets[i - 1];
  }
  return csc;
}

RowScanMatrix row_scan_from_matrix(const BinaryInteractionMatrix& matrix) {
  RowScanMatrix rows;
  rows.num_ads = matrix.num_ads();
  rows.num_features = matrix.num_features();
  rows.row_offsets.assign(std::size_t{matrix.num_ads()} + 1, 0);
  for (const Entry& e : matrix.entries()) ++rows.row_offsets[e.ad + 1];
  for (std::size_t a = 1; a < rows.row_offsets.size(); ++a) {
    rows.row_offsets[a] += rows.row_offsets[a - 1];
  }
  rows.feature_ids.resize(matrix.nnz());
  std::vector<std::uint64_t> fill(rows.row_offsets.begin(), rows.row_offsets.end() - 1);
  for (const Entry& e : matrix.entries()) rows.feature_ids[fill[e.ad]++] = e.feature;
  return rows;
}

DenseBitMatrix::DenseBitMatrix(const BinaryInteractionMatrix& matrix)
    : num_ads_(matrix.num_ads()),
      num_features_(matrix.num_features()),
      words_per_column_((std::size_t{matrix.num_ads()} + 63) / 64),
      bits_(words_per_column_ * matrix.num_features(), 0) {
  for (const Entry& e : matrix.entries()) {
    bits_[e.feature * words_per_column_ + (e.ad >> 6)] |= std::uint64_t{1} << (e.ad & 63);
  }
}

namespace {

void check_output(std::size_t expected, std::span<double> out) {
  if (out.size() != expected) {
    fail(ErrorCode::dimension_mismatch,
         "score buffer has length " + std::to_string(out.size()) + ", expected " +
             std::to_string(expected));
  }
}

}  // namespace

void csc_scores_into(const CscMatrix& csc, const QueryVector& query,
                     std::span<double> out) {
  query.check_bounds(csc.num_features);
  check_output(csc.num_ads, out);
  std::fill(out.begin(), out.end(), 0.0);
  double* scores = out.data();
  for (const QueryTerm& t : query.terms()) {
    const AdId* rows = csc.row_ids.data();
    const std::uint64_t end = csc.col_offsets[t.feature + 1];
    for (std::uint64_t p = csc.col_offsets[t.feature]; p < end; ++p) {
      scores[rows[p]] += t.weight;
    }
  }
}

void dense_scores_into(const DenseBitMatrix& dense, const QueryVector& query,
                       std::span<double> out) {
  query.check_bounds(dense.num_features_);
  check_output(dense.num_ads_, out);
  std::fill(out.begin(), out.end(), 0.0);
  double* scores = out.data();
  for (const QueryTerm& t : query.terms()) {
    const std::uint64_t* column = dense.bits_.data() + t.feature * dense.words_per_column_;
    for (AdId a = 0; a < dense.num_ads_; ++a) {
      const double bit = static_cast<double>((column[a >> 6] >> (a & 63)) & 1u);
      scores[a] += t.weight * bit;
    }
  }
}

void row_scan_scores_into(const RowScanMatrix& rows, const QueryVector& query,
                          std::span<double> out) {
  query.check_bounds(rows.num_features);
  check_output(rows.num_ads, out);
  std::vector<double> weights(rows.num_features, 0.0);
  for (const QueryTerm& t : query.terms()) weights[t.feature] = t.weight;
  const std::uint64_t* offsets = rows.row_offsets.data();
  const FeatureId* features = rows.feature_ids.data();
  for (AdId a = 0; a < rows.num_ads; ++a) {
    double s = 0.0;
    for (std::uint64_t p = offsets[a]; p < offsets[a + 1]; ++p) s += weights[features[p]];
    out[a] = s;
  }
}

ScoreVector oracle_scores(const CscMatrix& csc, const QueryVector& query) {
  ScoreVector s(csc.num_ads);
  csc_scores_into(csc, query, s.values());
  return s;
}

ScoreVector oracle_scores(const DenseBitMatrix& dense, const QueryVector& query) {
  ScoreVector s(dense.num_ads());
  dense_scores_into(dense, query, s.values());
  return s;
}

ScoreVector oracle_scores(const BinaryInteractionMatrix& matrix,
                          const QueryVector& query) {
  return oracle_scores(csc_from_matrix(matrix), query);
}

}  // namespace hitmatch
