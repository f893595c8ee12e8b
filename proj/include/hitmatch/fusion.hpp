#pragma once

// Full retrieval score: the extended dual-tower inner product plus the
// explicit HitMatch term,
//
//   s(u, a) = <[h_u, u~], [h_a, v~]> + sum_i w~_i L[a, i],
//
// where u~ = W_u [u_1 .. u_n] and v~ = W_v [v_1 .. v_m] are the IPNN
// projections of the concatenated field embeddings.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hitmatch/index.hpp"
#include "hitmatch/query.hpp"
#include "hitmatch/types.hpp"

namespace hitmatch {

// Field embeddings of one side (user or ad); all fields share one width.
class FieldEmbeddings {
 public:
  FieldEmbeddings() = default;
  explicit FieldEmbeddings(std::vector<Embedding> fields);

  std::size_t num_fields() const noexcept { return fields_.size(); }
  std::size_t field_dim() const noexcept { return fields_.empty() ? 0 : fields_.front().size(); }
  const Embedding& field(std::size_t i) const { return fields_[i]; }

  Embedding concatenated() const;
  Embedding field_sum() const;

 private:
  std::vector<Embedding> fields_;
};

// Dense row-major d x c matrix.
class ProjectionMatrix {
 public:
  ProjectionMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static ProjectionMatrix identity(std::size_t n);
  // [I I ... I]: maps a concatenation of `num_fields` fields to their sum.
  static ProjectionMatrix field_sum(std::size_t num_fields, std::size_t field_dim);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

// Throws Error(dimension_mismatch) on length mismatch.
double inner_product(std::span<const double> a, std::span<const double> b);
Embedding concat(const Embedding& a, const Embedding& b);

Embedding ipnn_project(const Embedding& x, const ProjectionMatrix& w);

// Sum over all field pairs (i, j) of <u_i, v_j>, evaluated pair by pair.
double pairwise_field_inner_sum(const FieldEmbeddings& u, const FieldEmbeddings& v);

// <[h_u, u~], [h_a, v~]> computed on the concatenated vectors.
double extended_tower_score(const Embedding& h_u, const Embedding& u_tilde,
                            const Embedding& h_a, const Embedding& v_tilde);

// Per-ad extended embeddings [h_a, v~], N rows of `dim` floats.
class AdTowerTable {
 public:
  AdTowerTable() = default;
  AdTowerTable(std::uint32_t num_ads, std::uint32_t dim, std::vector<float> values);

  // Concatenates h_a and v~ per ad; all rows must share widths.
  static AdTowerTable from_parts(std::span<const Embedding> h_a,
                                 std::span<const Embedding> v_tilde);

  std::uint32_t num_ads() const noexcept { return num_ads_; }
  std::uint32_t dim() const noexcept { return dim_; }
  std::span<const float> row(AdId a) const {
    return std::span<const float>(values_).subspan(std::size_t{a} * dim_, dim_);
  }
  std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const AdTowerTable&, const AdTowerTable&) = default;

 private:
  std::uint32_t num_ads_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> values_;
};

// out[a] = <user, row(a)>. `user` is the extended user embedding [h_u, u~].
void tower_scores_into(const AdTowerTable& ads, const Embedding& user, std::span<double> out);

// Tower part plus HitMatch part. Throws Error(dimension_mismatch) if the
// table and index disagree on N or the user width differs from the table.
ScoreVector fused_scores(const AdTowerTable& ads, const Embedding& user,
                         QueryEngine& engine, const QueryVector& query);
ScoreVector fused_scores(const AdTowerTable& ads, const Embedding& user,
                         const GroupedIndex& index, const QueryVector& query,
                         const QueryOptions& options = {});

struct ScoredAd {
  AdId ad = 0;
  double score = 0.0;

  friend bool operator==(const ScoredAd&, const ScoredAd&) = default;
};

// The k best ads by descending score, ties by ascending ad id.
// Throws Error(out_of_range) unless 1 <= k <= scores.size().
std::vector<ScoredAd> top_k(std::span<const double> scores, std::size_t k);

}  // namespace hitmatch
