#include "hitmatch/rank_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hitmatch {

RankedRequest::RankedRequest(std::vector<RankedItem> items) : items_(std::move(items)) {
  const std::size_t d = items_.size();
  if (d < 2) fail(ErrorCode::invalid_argument, "a ranked request needs at least 2 items");
  std::vector<bool> seen(d + 1, false);
  for (const RankedItem& it : items_) {
    if (it.true_rank < 1 || it.true_rank > d || seen[it.true_rank]) {
      fail(ErrorCode::invalid_argument,
           "true ranks must be a permutation of 1.." + std::to_string(d) + " (bad rank " +
               std::to_string(it.true_rank) + ")");
    }
    seen[it.true_rank] = true;
    if (!std::isfinite(it.score)) fail(ErrorCode::invalid_argument, "score is not finite");
    if (!std::isfinite(it.value) || it.value < 0.0) {
      fail(ErrorCode::invalid_argument, "value must be finite and non-negative");
    }
  }
}

RankedRequest RankedRequest::with_scores(std::span<const double> scores) const {
  if (scores.size() != items_.size()) {
    fail(ErrorCode::dimension_mismatch, "score count does not match request length");
  }
  std::vector<RankedItem> copy = items_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].score = scores[i];
  return RankedRequest(std::move(copy));
}

namespace {

double discount(std::size_t position) {
  return 1.0 / std::log2(static_cast<double>(position) + 1.0);
}

double gain_exponent(const RankedRequest& r, std::size_t item) {
  return static_cast<double>(r.size() - r[item].true_rank);
}

double ideal_dcg(std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 1; i <= d; ++i) acc += (std::exp2(static_cast<double>(d - i)) - 1.0) * discount(i);
  return acc;
}

// position[item] = 1-based place of the item in the model ranking.
std::vector<std::size_t> positions_of(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = p + 1;
  return pos;
}

double delta_ndcg_items(const RankedRequest& r, std::size_t x, std::size_t y,
                        std::size_t pos_x, std::size_t pos_y, double max_dcg) {
  if (max_dcg == 0.0) return 0.0;
  const double gx = std::exp2(gain_exponent(r, x));
  const double gy = std::exp2(gain_exponent(r, y));
  return std::abs((gx - gy) * (discount(pos_x) - discount(pos_y))) / max_dcg;
}

}  // namespace

double dcg(std::span<const double> gain_exponents) {
  double acc = 0.0;
  for (std::size_t i = 0; i < gain_exponents.size(); ++i) {
    acc += (std::exp2(gain_exponents[i]) - 1.0) * discount(i + 1);
  }
  return acc;
}

std::vector<std::size_t> model_order(const RankedRequest& request) {
  std::vector<std::size_t> order(request.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return request[a].score > request[b].score;
  });
  return order;
}

double ndcg(const RankedRequest& request) {
  const double max_dcg = ideal_dcg(request.size());
  if (max_dcg == 0.0) return 1.0;
  const auto order = model_order(request);
  std::vector<double> exps(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) exps[p] = gain_exponent(request, order[p]);
  return dcg(exps) / max_dcg;
}

double delta_ndcg(const RankedRequest& request, std::size_t i, std::size_t j) {
  const std::size_t d = request.size();
  if (i == j || i < 1 || j < 1 || i > d || j > d) {
    fail(ErrorCode::invalid_argument, "swap positions must be distinct and within 1.." +
                                          std::to_string(d));
  }
  const auto order = model_order(request);
  return delta_ndcg_items(request, order[i - 1], order[j - 1], i, j, ideal_dcg(d));
}

double pairwise_logistic(double diff) {
  // log(1 + e^{-x}) = max(-x, 0) + log1p(e^{-|x|})
  return std::max(-diff, 0.0) + std::log1p(std::exp(-std::abs(diff)));
}

double pair_weight(double delta_ndcg_abs, double delta_value_abs, const LossConfig& config) {
  if (!config.use_value) return delta_ndcg_abs;
  return config.combine == CombineOp::multiply ? delta_ndcg_abs * delta_value_abs
                                               : delta_ndcg_abs + delta_value_abs;
}

LossResult lambdarank_loss(const RankedRequest& request, const LossConfig& config) {
  const std::size_t d = request.size();
  const auto pos = positions_of(model_order(request));
  const double max_dcg = ideal_dcg(d);

  // by_rank[r - 1] = item with true rank r
  std::vector<std::size_t> by_rank(d);
  for (std::size_t i = 0; i < d; ++i) by_rank[request[i].true_rank - 1] = i;

  LossResult out;
  out.grad.assign(d, 0.0);
  for (std::size_t rx = 0; rx < d; ++rx) {
    const std::size_t x = by_rank[rx];
    for (std::size_t ry = rx + 1; ry < d; ++ry) {
      const std::size_t y = by_rank[ry];
      const double dn = delta_ndcg_items(request, x, y, pos[x], pos[y], max_dcg);
      const double dv = config.value_delta ? std::abs(config.value_delta(request[x], request[y]))
                                           : std::abs(request[x].value - request[y].value);
      const double w = pair_weight(dn, dv, config);
      const double diff = request[x].score - request[y].score;
      out.loss += w * pairwise_logistic(diff);
      // d/d(diff) log(1 + e^{-diff}) = -sigmoid(-diff)
      const double lambda = w / (1.0 + std::exp(diff));
      out.grad[x] -= lambda;
      out.grad[y] += lambda;
    }
  }
  return out;
}

GradientCheck check_gradient(const RankedRequest& request, const LossConfig& config,
                             double step) {
  const LossResult analytic = lambdarank_loss(request, config);
  std::vector<double> scores(request.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = request[i].score;

  GradientCheck check;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool near_tie = std::any_of(scores.begin(), scores.end(), [&](const double& other) {
      return &other != &scores[i] && std::abs(other - scores[i]) <= step;
    });
    if (near_tie) {
      ++check.skipped;
      continue;
    }
    auto central = [&](double h) {
      auto probe = scores;
      probe[i] = scores[i] + h;
      const double up = lambdarank_loss(request.with_scores(probe), config).loss;
      probe[i] = scores[i] - h;
      const double down = lambdarank_loss(request.with_scores(probe), config).loss;
      return (up - down) / (2.0 * h);
    };
    // Richardson extrapolation cancels the h^2 term, so `step` can stay large
    // enough that rounding in the loss does not swamp small gradients.
    const double numeric = (4.0 * central(step / 2) - central(step)) / 3.0;
    const double abs_err = std::abs(analytic.grad[i] - numeric);
    const double scale = std::max({std::abs(analytic.grad[i]), std::abs(numeric), 1e-6});
    check.max_abs_err = std::max(check.max_abs_err, abs_err);
    check.max_rel_err = std::max(check.max_rel_err, abs_err / scale);
  }
  return check;
}

}  // namespace hitmatch
