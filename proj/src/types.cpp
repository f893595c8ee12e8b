#include "hitmatch/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hitmatch {

BinaryInteractionMatrix BinaryInteractionMatrix::from_entries(
    std::uint32_t num_ads, std::uint32_t num_features,
    std::span<const Entry> pairs) {
  for (const Entry& e : pairs) {
    if (e.feature >= num_features || e.ad >= num_ads) {
      fail(ErrorCode::out_of_range,
           "entry (feature " + std::to_string(e.feature) + ", ad " +
               std::to_string(e.ad) + ") outside " + std::to_string(num_ads) +
               " ads x " + std::to_string(num_features) + " features");
    }
  }
  BinaryInteractionMatrix m;
  m.num_ads_ = num_ads;
  m.num_features_ = num_features;
  m.entries_.assign(pairs.begin(), pairs.end());
  if (!std::is_sorted(m.entries_.begin(), m.entries_.end())) {
    std::sort(m.entries_.begin(), m.entries_.end());
  }
  m.entries_.erase(std::unique(m.entries_.begin(), m.entries_.end()),
                   m.entries_.end());
  m.entries_.shrink_to_fit();
  return m;
}

bool BinaryInteractionMatrix::contains(FeatureId feature, AdId ad) const {
  return std::binary_search(entries_.begin(), entries_.end(), Entry{feature, ad});
}

std::vector<std::uint64_t> BinaryInteractionMatrix::column_populations() const {
  std::vector<std::uint64_t> pop(num_features_, 0);
  for (const Entry& e : entries_) ++pop[e.feature];
  return pop;
}

QueryVector::QueryVector(std::vector<QueryTerm> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!std::isfinite(terms_[i].weight)) {
      fail(ErrorCode::invalid_argument,
           "query weight for feature " + std::to_string(terms_[i].feature) +
               " is not finite");
    }
    if (i > 0 && terms_[i].feature <= terms_[i - 1].feature) {
      fail(ErrorCode::invalid_argument,
           "query feature ids must be strictly increasing (" +
               std::to_string(terms_[i - 1].feature) + " then " +
               std::to_string(terms_[i].feature) + ")");
    }
  }
}

void QueryVector::check_bounds(std::uint32_t num_features) const {
  if (!terms_.empty() && terms_.back().feature >= num_features) {
    fail(ErrorCode::out_of_range,
         "query feature " + std::to_string(terms_.back().feature) +
             " >= num_features " + std::to_string(num_features));
  }
}

QueryVector QueryVector::scaled(double alpha) const {
  std::vector<QueryTerm> out = terms_;
  for (auto& t : out) t.weight *= alpha;
  return QueryVector(std::move(out));
}

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "embedding value is not finite");
  }
}

}  // namespace hitmatch
