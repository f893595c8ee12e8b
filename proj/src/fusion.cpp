#include "hitmatch/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hitmatch {

namespace {

[[noreturn]] void mismatch(const std::string& what, std::size_t got, std::size_t want) {
  fail(ErrorCode::dimension_mismatch,
       what + ": got " + std::to_string(got) + ", expected " + std::to_string(want));
}

}  // namespace

FieldEmbeddings::FieldEmbeddings(std::vector<Embedding> fields) : fields_(std::move(fields)) {
  for (const Embedding& f : fields_) {
    if (f.size() != fields_.front().size()) {
      mismatch("field width", f.size(), fields_.front().size());
    }
  }
}

Embedding FieldEmbeddings::concatenated() const {
  std::vector<double> out;
  out.reserve(num_fields() * field_dim());
  for (const Embedding& f : fields_) out.insert(out.end(), f.values().begin(), f.values().end());
  return Embedding(std::move(out));
}

Embedding FieldEmbeddings::field_sum() const {
  std::vector<double> out(field_dim(), 0.0);
  for (const Embedding& f : fields_) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += f[k];
  }
  return Embedding(std::move(out));
}

ProjectionMatrix::ProjectionMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) mismatch("projection values", values_.size(), rows_ * cols_);
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "projection value is not finite");
  }
}

ProjectionMatrix ProjectionMatrix::identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return ProjectionMatrix(n, n, std::move(v));
}

ProjectionMatrix ProjectionMatrix::field_sum(std::size_t num_fields, std::size_t field_dim) {
  const std::size_t cols = num_fields * field_dim;
  std::vector<double> v(field_dim * cols, 0.0);
  for (std::size_t r = 0; r < field_dim; ++r) {
    for (std::size_t f = 0; f < num_fields; ++f) v[r * cols + f * field_dim + r] = 1.0;
  }
  return ProjectionMatrix(field_dim, cols, std::move(v));
}

double inner_product(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) mismatch("inner product length", b.size(), a.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

Embedding concat(const Embedding& a, const Embedding& b) {
  std::vector<double> out(a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  return Embedding(std::move(out));
}

Embedding ipnn_project(const Embedding& x, const ProjectionMatrix& w) {
  if (w.cols() != x.size()) mismatch("projection input length", x.size(), w.cols());
  std::vector<double> out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) acc += w.at(r, c) * x[c];
    out[r] = acc;
  }
  return Embedding(std::move(out));
}

double pairwise_field_inner_sum(const FieldEmbeddings& u, const FieldEmbeddings& v) {
  if (u.num_fields() == 0 || v.num_fields() == 0) return 0.0;
  if (u.field_dim() != v.field_dim()) mismatch("field width", v.field_dim(), u.field_dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < u.num_fields(); ++i) {
    for (std::size_t j = 0; j < v.num_fields(); ++j) {
      acc += inner_product(u.field(i).values(), v.field(j).values());
    }
  }
  return acc;
}

double extended_tower_score(const Embedding& h_u, const Embedding& u_tilde,
                            const Embedding& h_a, const Embedding& v_tilde) {
  if (h_u.size() != h_a.size()) mismatch("tower width", h_a.size(), h_u.size());
  if (u_tilde.size() != v_tilde.size()) mismatch("ipnn width", v_tilde.size(), u_tilde.size());
  return inner_product(concat(h_u, u_tilde).values(), concat(h_a, v_tilde).values());
}

AdTowerTable::AdTowerTable(std::uint32_t num_ads, std::uint32_t dim, std::vector<float> values)
    : num_ads_(num_ads), dim_(dim), values_(std::move(values)) {
  if (values_.size() != std::size_t{num_ads_} * dim_) {
    mismatch("tower table values", values_.size(), std::size_t{num_ads_} * dim_);
  }
  for (float v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "tower table value is not finite");
  }
}

AdTowerTable AdTowerTable::from_parts(std::span<const Embedding> h_a,
                                      std::span<const Embedding> v_tilde) {
  if (h_a.size() != v_tilde.size()) mismatch("ad count", v_tilde.size(), h_a.size());
  const std::size_t dt = h_a.empty() ? 0 : h_a.front().size();
  const std::size_t di = v_tilde.empty() ? 0 : v_tilde.front().size();
  std::vector<float> values;
  values.reserve(h_a.size() * (dt + di));
  for (std::size_t a = 0; a < h_a.size(); ++a) {
    if (h_a[a].size() != dt) mismatch("tower width", h_a[a].size(), dt);
    if (v_tilde[a].size() != di) mismatch("ipnn width", v_tilde[a].size(), di);
    for (double x : h_a[a].values()) values.push_back(static_cast<float>(x));
    for (double x : v_tilde[a].values()) values.push_back(static_cast<float>(x));
  }
  return AdTowerTable(static_cast<std::uint32_t>(h_a.size()),
                      static_cast<std::uint32_t>(dt + di), std::move(values));
}

void tower_scores_into(const AdTowerTable& ads, const Embedding& user, std::span<double> out) {
  if (user.size() != ads.dim()) mismatch("user embedding width", user.size(), ads.dim());
  if (out.size() != ads.num_ads()) mismatch("score buffer length", out.size(), ads.num_ads());
  const auto u = user.values();
  for (AdId a = 0; a < ads.num_ads(); ++a) {
    const auto r = ads.row(a);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) acc += u[k] * static_cast<double>(r[k]);
    out[a] = acc;
  }
}

ScoreVector fused_scores(const AdTowerTable& ads, const Embedding& user,
                         QueryEngine& engine, const QueryVector& query) {
  if (ads.num_ads() != engine.index().num_ads()) {
    mismatch("tower table rows vs index ads", ads.num_ads(), engine.index().num_ads());
  }
  ScoreVector fused = engine.score(query);
  std::vector<double> tower(ads.num_ads());
  tower_scores_into(ads, user, tower);
  for (std::size_t a = 0; a < tower.size(); ++a) fused[a] += tower[a];
  return fused;
}

ScoreVector fused_scores(const AdTowerTable& ads, const Embedding& user,
                         const GroupedIndex& index, const QueryVector& query,
                         const QueryOptions& options) {
  QueryEngine engine(index, options);
  return fused_scores(ads, user, engine, query);
}

std::vector<ScoredAd> top_k(std::span<const double> scores, std::size_t k) {
  if (k == 0 || k > scores.size()) {
    fail(ErrorCode::out_of_range, "k = " + std::to_string(k) + " outside [1, " +
                                      std::to_string(scores.size()) + "]");
  }
  std::vector<ScoredAd> all(scores.size());
  for (std::size_t a = 0; a < scores.size(); ++a) all[a] = {static_cast<AdId>(a), scores[a]};
  auto better = [](const ScoredAd& x, const ScoredAd& y) {
    return x.score > y.score || (x.score == y.score && x.ad < y.ad);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

}  // namespace hitmatch
