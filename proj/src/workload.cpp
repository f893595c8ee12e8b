#include "hitmatch/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace hitmatch {

namespace {

// Independent stream per purpose so changing one generator never shifts
// another's draws.
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose};
  return std::mt19937_64(seq);
}

enum : std::uint32_t { kPermStream = 1, kMatrixStream, kQueryStream, kTowerStream, kUserStream,
                       kRequestStream };

void check_spec(const WorkloadSpec& spec) {
  if (spec.num_ads == 0 || spec.num_features == 0) {
    fail(ErrorCode::invalid_argument, "workload needs at least one ad and one feature");
  }
  if (!std::isfinite(spec.skew) || spec.skew < 0.0) {
    fail(ErrorCode::invalid_argument, "skew must be finite and non-negative");
  }
}

std::vector<double> zipf_weights(std::uint32_t m, double skew) {
  std::vector<double> p(m);
  for (std::uint32_t r = 0; r < m; ++r) p[r] = std::pow(static_cast<double>(r) + 1.0, -skew);
  return p;
}

// rank -> feature id
std::vector<FeatureId> popularity_permutation(const WorkloadSpec& spec) {
  std::vector<FeatureId> perm(spec.num_features);
  std::iota(perm.begin(), perm.end(), FeatureId{0});
  auto rng = stream(spec.seed, kPermStream);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace

BinaryInteractionMatrix generate_matrix(const WorkloadSpec& spec) {
  check_spec(spec);
  const std::uint64_t n = spec.num_ads;
  const std::uint32_t m = spec.num_features;
  if (spec.nnz > n * m) {
    fail(ErrorCode::invalid_argument, "nnz " + std::to_string(spec.nnz) + " exceeds N*M = " +
                                          std::to_string(n * m));
  }
  auto rng = stream(spec.seed, kMatrixStream);

  // Multinomial split of nnz over ranks via sequential binomials, then cap at
  // N and push any overflow onto the next ranks with room.
  const auto p = zipf_weights(m, spec.skew);
  std::vector<double> tail(std::size_t{m} + 1, 0.0);
  for (std::size_t r = m; r-- > 0;) tail[r] = tail[r + 1] + p[r];
  std::vector<std::uint64_t> pop(m, 0);
  std::uint64_t remaining = spec.nnz;
  for (std::uint32_t r = 0; r < m && remaining > 0; ++r) {
    const double prob = r + 1 == m ? 1.0 : std::clamp(p[r] / tail[r], 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(remaining, prob);
    pop[r] = std::min<std::uint64_t>(draw(rng), n);
    remaining -= pop[r];
  }
  for (std::uint32_t r = 0; r < m && remaining > 0; ++r) {
    const std::uint64_t room = std::min(remaining, n - pop[r]);
    pop[r] += room;
    remaining -= room;
  }

  const auto perm = popularity_permutation(spec);
  std::vector<std::uint32_t> rank_of(m);
  for (std::uint32_t r = 0; r < m; ++r) rank_of[perm[r]] = r;

  std::vector<Entry> entries;
  entries.reserve(spec.nnz);
  std::vector<std::uint8_t> marked(n, 0);
  std::uniform_int_distribution<AdId> pick(0, static_cast<AdId>(n - 1));
  std::vector<AdId> chosen;
  for (FeatureId f = 0; f < m; ++f) {
    const std::uint64_t k = pop[rank_of[f]];
    if (k == 0) continue;
    // Sample the smaller of the column and its complement.
    const bool complement = 2 * k > n;
    const std::uint64_t draws = complement ? n - k : k;
    chosen.clear();
    while (chosen.size() < draws) {
      const AdId a = pick(rng);
      if (!marked[a]) {
        marked[a] = 1;
        chosen.push_back(a);
      }
    }
    if (complement || draws * 64 > n) {
      for (AdId a = 0; a < n; ++a) {
        if (static_cast<bool>(marked[a]) != complement) entries.push_back({f, a});
        marked[a] = 0;
      }
    } else {
      std::sort(chosen.begin(), chosen.end());
      for (AdId a : chosen) {
        entries.push_back({f, a});
        marked[a] = 0;
      }
    }
  }
  return BinaryInteractionMatrix::from_entries(spec.num_ads, m, entries);
}

std::vector<QueryVector> generate_queries(const WorkloadSpec& spec) {
  check_spec(spec);
  const std::uint32_t m = spec.num_features;
  if (spec.query_nnz > m) {
    fail(ErrorCode::invalid_argument, "query_nnz " + std::to_string(spec.query_nnz) +
                                          " exceeds num_features " + std::to_string(m));
  }
  const auto perm = popularity_permutation(spec);
  const auto p = zipf_weights(m, spec.skew);
  std::discrete_distribution<std::uint32_t> rank_draw(p.begin(), p.end());
  std::uniform_real_distribution<double> real_w(-1.0, 1.0);
  std::uniform_int_distribution<int> int_w(1, 16);
  auto rng = stream(spec.seed, kQueryStream);

  std::vector<QueryVector> queries;
  queries.reserve(spec.query_count);
  std::vector<std::uint8_t> used(m, 0);
  std::vector<std::uint32_t> ranks;
  for (std::uint32_t q = 0; q < spec.query_count; ++q) {
    ranks.clear();
    const std::uint64_t budget = 64ull * spec.query_nnz + 64;
    for (std::uint64_t tries = 0; ranks.size() < spec.query_nnz && tries < budget; ++tries) {
      const std::uint32_t r = rank_draw(rng);
      if (!used[r]) {
        used[r] = 1;
        ranks.push_back(r);
      }
    }
    // Heavy skew with many nonzeros: fill up with the most popular unused ranks.
    for (std::uint32_t r = 0; ranks.size() < spec.query_nnz; ++r) {
      if (!used[r]) {
        used[r] = 1;
        ranks.push_back(r);
      }
    }
    std::vector<QueryTerm> terms;
    terms.reserve(ranks.size());
    for (std::uint32_t r : ranks) {
      used[r] = 0;
      terms.push_back({perm[r], 0.0});
    }
    std::sort(terms.begin(), terms.end(),
              [](const QueryTerm& a, const QueryTerm& b) { return a.feature < b.feature; });
    for (auto& t : terms) {
      t.weight = spec.weights == WeightKind::integer ? static_cast<double>(int_w(rng)) : real_w(rng);
    }
    queries.emplace_back(std::move(terms));
  }
  return queries;
}

AdTowerTable generate_tower_table(std::uint32_t num_ads, std::uint32_t dim, std::uint64_t seed) {
  auto rng = stream(seed, kTowerStream);
  const double scale = dim == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<float> values(std::size_t{num_ads} * dim);
  for (float& v : values) v = static_cast<float>(u(rng) * scale);
  return AdTowerTable(num_ads, dim, std::move(values));
}

Embedding generate_user_embedding(std::uint32_t dim, std::uint64_t seed) {
  auto rng = stream(seed, kUserStream);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(dim);
  for (double& v : values) v = u(rng);
  return Embedding(std::move(values));
}

std::vector<RankedRequest> generate_requests(std::size_t count, std::size_t depth,
                                             std::uint64_t seed) {
  auto rng = stream(seed, kRequestStream);
  std::normal_distribution<double> score(0.0, 1.0);
  std::uniform_real_distribution<double> value(0.0, 10.0);
  std::vector<RankedRequest> out;
  out.reserve(count);
  std::vector<std::uint32_t> ranks(depth);
  for (std::size_t q = 0; q < count; ++q) {
    std::iota(ranks.begin(), ranks.end(), 1u);
    std::shuffle(ranks.begin(), ranks.end(), rng);
    std::vector<RankedItem> items(depth);
    for (std::size_t i = 0; i < depth; ++i) {
      items[i] = {static_cast<AdId>(i), score(rng), ranks[i], value(rng)};
    }
    out.emplace_back(std::move(items));
  }
  return out;
}

}  // namespace hitmatch
