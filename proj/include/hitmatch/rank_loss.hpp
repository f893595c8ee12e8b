#pragma once

// Value-weighted LambdaRank objective for one request of D sampled ads.
//
// Every pair (x, y) where x has the better ground-truth rank contributes
//
//   log(1 + exp(-(s_x - s_y))) * (|dNDCG_xy| (*) |dValue_xy|)
//
// where (*) is multiplication or addition. dNDCG_xy is the NDCG change from
// swapping x and y in the ranking induced by the model scores. The gain
// exponent of the ad with true rank r is D - r, so the best ad gets D - 1.
// Discounts use log2(position + 1).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hitmatch/types.hpp"

namespace hitmatch {

struct RankedItem {
  AdId ad = 0;
  double score = 0.0;           // model score s_i
  std::uint32_t true_rank = 0;  // 1 = best
  double value = 0.0;           // commercial value, e.g. eCPM

  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

class RankedRequest {
 public:
  RankedRequest() = default;
  // Requires D >= 2, true ranks a permutation of 1..D, finite scores and
  // non-negative finite values.
  explicit RankedRequest(std::vector<RankedItem> items);

  std::size_t size() const noexcept { return items_.size(); }
  const RankedItem& operator[](std::size_t i) const { return items_[i]; }
  std::span<const RankedItem> items() const noexcept { return items_; }

  // Copy with scores replaced.
  RankedRequest with_scores(std::span<const double> scores) const;

  friend bool operator==(const RankedRequest&, const RankedRequest&) = default;

 private:
  std::vector<RankedItem> items_;
};

enum class CombineOp { multiply, add };

using ValueDelta = std::function<double(const RankedItem&, const RankedItem&)>;

struct LossConfig {
  CombineOp combine = CombineOp::multiply;
  bool use_value = true;
  ValueDelta value_delta;  // empty: |value_x - value_y|
};

// sum over positions i = 1..D of (2^p_i - 1) / log2(i + 1).
double dcg(std::span<const double> gain_exponents);

// Item indices sorted by descending model score; ties keep input order.
std::vector<std::size_t> model_order(const RankedRequest& request);

double ndcg(const RankedRequest& request);

// |NDCG change| when the items at 1-based positions i and j of the model
// ranking trade places. Throws Error(invalid_argument) if i == j or either
// position is outside 1..D.
double delta_ndcg(const RankedRequest& request, std::size_t i, std::size_t j);

// log(1 + exp(-diff)), stable for large |diff|.
double pairwise_logistic(double diff);

double pair_weight(double delta_ndcg_abs, double delta_value_abs, const LossConfig& config);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d s_i, input item order
};

LossResult lambdarank_loss(const RankedRequest& request, const LossConfig& config = {});

struct GradientCheck {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::size_t skipped = 0;  // scores within `step` of another score
};

// Compares the analytic gradient with Richardson-extrapolated central
// differences of steps `step` and `step / 2`.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
// A score within `step` of another one is skipped: the probe would reorder
// the model ranking, where the loss jumps.
GradientCheck check_gradient(const RankedRequest& request, const LossConfig& config,
                             double step = 1e-4);

}  // namespace hitmatch
