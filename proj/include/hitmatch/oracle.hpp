#pragma once

// Reference scorers. Every route sums in ascending feature order, so for any
// ad the additions happen in the same sequence and the routes agree bit for
// bit.

#include <cstdint>
#include <span>
#include <vector>

#include "hitmatch/types.hpp"

namespace hitmatch {

// Column-compressed copy of L: column i holds the ads carrying feature i.
struct CscMatrix {
  std::uint32_t num_ads = 0;
  std::uint32_t num_features = 0;
  std::vector<std::uint64_t> col_offsets;  // length M + 1
  std::vector<AdId> row_ids;               // length nnz, ascending per column

  std::size_t nnz() const noexcept { return row_ids.size(); }
};

CscMatrix csc_from_matrix(const BinaryInteractionMatrix& matrix);

// Column-major bitmap of L, N bits per feature. Memory is N * M / 8 bytes.
class DenseBitMatrix {
 public:
  explicit DenseBitMatrix(const BinaryInteractionMatrix& matrix);

  std::uint32_t num_ads() const noexcept { return num_ads_; }
  std::uint32_t num_features() const noexcept { return num_features_; }

  bool test(FeatureId feature, AdId ad) const noexcept {
    const std::uint64_t word = bits_[feature * words_per_column_ + (ad >> 6)];
    return (word >> (ad & 63)) & 1u;
  }

 private:
  friend void dense_scores_into(const DenseBitMatrix&, const QueryVector&,
                                std::span<double>);

  std::uint32_t num_ads_ = 0;
  std::uint32_t num_features_ = 0;
  std::size_t words_per_column_ = 0;
  std::vector<std::uint64_t> bits_;
};

// Row-compressed copy of L: row a holds the features of ad a.
struct RowScanMatrix {
  std::uint32_t num_ads = 0;
  std::uint32_t num_features = 0;
  std::vector<std::uint64_t> row_offsets;  // length N + 1
  std::vector<FeatureId> feature_ids;      // length nnz, ascending per row

  std::size_t nnz() const noexcept { return feature_ids.size(); }
};

RowScanMatrix row_scan_from_matrix(const BinaryInteractionMatrix& matrix);

// scores[a] = sum over query terms of weight * L[a, feature], by gathering
// the query's columns. `out` must have length N; it is overwritten.
void csc_scores_into(const CscMatrix& csc, const QueryVector& query,
                     std::span<double> out);

// Same sum as a dense double loop over every ad for every query feature.
void dense_scores_into(const DenseBitMatrix& dense, const QueryVector& query,
                       std::span<double> out);

// Unindexed scan: every stored interaction of L is visited for every query
// and looked up in a dense copy of the query weights.
void row_scan_scores_into(const RowScanMatrix& rows, const QueryVector& query,
                          std::span<double> out);

ScoreVector oracle_scores(const CscMatrix& csc, const QueryVector& query);
ScoreVector oracle_scores(const DenseBitMatrix& dense, const QueryVector& query);
ScoreVector oracle_scores(const BinaryInteractionMatrix& matrix,
                          const QueryVector& query);

}  // namespace hitmatch
