#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hitmatch/error.hpp"

namespace hitmatch {

using AdId = std::uint32_t;
using FeatureId = std::uint32_t;

// One nonzero of the ad-by-feature incidence matrix: ad `ad` carries
// cross feature `feature`.
struct Entry {
  FeatureId feature = 0;
  AdId ad = 0;

  friend bool operator==(const Entry&, const Entry&) = default;
  friend auto operator<=>(const Entry&, const Entry&) = default;
};

// Binary N x M matrix stored as a set of (feature, ad) pairs. Entries are kept
// sorted feature-major, then by ad, with no duplicates.
class BinaryInteractionMatrix {
 public:
  BinaryInteractionMatrix() = default;

  // Deduplicates and bounds-checks `pairs`; throws Error(out_of_range) naming
  // the first offending pair.
  static BinaryInteractionMatrix from_entries(std::uint32_t num_ads,
                                              std::uint32_t num_features,
                                              std::span<const Entry> pairs);

  std::uint32_t num_ads() const noexcept { return num_ads_; }
  std::uint32_t num_features() const noexcept { return num_features_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Entry> entries() const noexcept { return entries_; }

  bool contains(FeatureId feature, AdId ad) const;

  // Number of ads carrying each feature, length M.
  std::vector<std::uint64_t> column_populations() const;

  friend bool operator==(const BinaryInteractionMatrix&,
                         const BinaryInteractionMatrix&) = default;

 private:
  std::uint32_t num_ads_ = 0;
  std::uint32_t num_features_ = 0;
  std::vector<Entry> entries_;
};

struct QueryTerm {
  FeatureId feature = 0;
  double weight = 0.0;  // pre-multiplied w_i * x_i

  friend bool operator==(const QueryTerm&, const QueryTerm&) = default;
};

// Sparse query: strictly increasing feature ids with finite weights.
class QueryVector {
 public:
  QueryVector() = default;
  explicit QueryVector(std::vector<QueryTerm> terms);

  std::span<const QueryTerm> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  // Throws Error(out_of_range) if any feature id is >= num_features.
  void check_bounds(std::uint32_t num_features) const;

  QueryVector scaled(double alpha) const;

  friend bool operator==(const QueryVector&, const QueryVector&) = default;

 private:
  std::vector<QueryTerm> terms_;
};

// Dense per-ad accumulator, length N.
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::size_t num_ads) : scores_(num_ads, 0.0) {}
  explicit ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {}

  std::size_t size() const noexcept { return scores_.size(); }
  double operator[](std::size_t a) const { return scores_[a]; }
  double& operator[](std::size_t a) { return scores_[a]; }

  std::span<const double> values() const noexcept { return scores_; }
  std::span<double> values() noexcept { return scores_; }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> scores_;
};

// Dense real vector with finite entries.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

}  // namespace hitmatch
