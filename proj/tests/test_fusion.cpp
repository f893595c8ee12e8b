#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "hitmatch/error.hpp"
#include "hitmatch/fusion.hpp"
#include "hitmatch/oracle.hpp"
#include "support.hpp"

using namespace hitmatch;

namespace {

Embedding random_embedding(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = n(rng);
  return Embedding(v);
}

FieldEmbeddings random_fields(std::mt19937_64& rng, std::size_t fields, std::size_t d) {
  std::vector<Embedding> f;
  for (std::size_t i = 0; i < fields; ++i) f.push_back(random_embedding(rng, d));
  return FieldEmbeddings(f);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> vec(const Embedding& e) { return {e.values().begin(), e.values().end()}; }

}  // namespace

TEST(IpnnProject, Identity) {
  EXPECT_EQ(vec(ipnn_project(Embedding({1, 2, 3}), ProjectionMatrix::identity(3))),
            (std::vector<double>{1, 2, 3}));
}

TEST(IpnnProject, Zeros) {
  const ProjectionMatrix w(2, 3, std::vector<double>(6, 0.0));
  EXPECT_EQ(vec(ipnn_project(Embedding({1, 2, 3}), w)), (std::vector<double>{0, 0}));
}

TEST(IpnnProject, TwoByThree) {
  const ProjectionMatrix w(2, 3, {1, 0, 1, 0, 1, 0});
  EXPECT_EQ(vec(ipnn_project(Embedding({1, 2, 3}), w)), (std::vector<double>{4, 2}));
}

TEST(IpnnProject, DimensionMismatch) {
  try {
    ipnn_project(Embedding({1, 2}), ProjectionMatrix::identity(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
  EXPECT_THROW(ProjectionMatrix(2, 2, {1, 2, 3}), Error);
}

TEST(PairwiseFieldInnerSum, Examples) {
  const FieldEmbeddings u({Embedding({1, 0}), Embedding({0, 1})});
  const FieldEmbeddings v({Embedding({1, 1})});
  EXPECT_EQ(pairwise_field_inner_sum(u, v), 2.0);
  EXPECT_EQ(dot(u.field_sum().values(), v.field_sum().values()), 2.0);
  EXPECT_EQ(pairwise_field_inner_sum(u, FieldEmbeddings()), 0.0);
}

TEST(PairwiseFieldInnerSum, MatchesSummedFields) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 500; ++t) {
    const auto u = random_fields(rng, 3, 4);
    const auto v = random_fields(rng, 2, 4);
    std::vector<double> su(4, 0.0), sv(4, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < 4; ++k) su[k] += u.field(i)[k];
    }
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 4; ++k) sv[k] += v.field(j)[k];
    }
    EXPECT_NEAR(pairwise_field_inner_sum(u, v), dot(su, sv), 1e-9);
  }
}

TEST(PairwiseFieldInnerSum, FieldSumProjectionGivesSameValue) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t nu = 1 + rng() % 5, nv = 1 + rng() % 5, d = 1 + rng() % 8;
    const auto u = random_fields(rng, nu, d);
    const auto v = random_fields(rng, nv, d);
    const Embedding ut = ipnn_project(u.concatenated(), ProjectionMatrix::field_sum(nu, d));
    const Embedding vt = ipnn_project(v.concatenated(), ProjectionMatrix::field_sum(nv, d));
    EXPECT_NEAR(pairwise_field_inner_sum(u, v), dot(ut.values(), vt.values()), 1e-9);
  }
}

TEST(PairwiseFieldInnerSum, WidthMismatch) {
  const FieldEmbeddings u({Embedding({1, 0})});
  const FieldEmbeddings v({Embedding({1, 1, 1})});
  EXPECT_THROW(pairwise_field_inner_sum(u, v), Error);
  EXPECT_THROW(FieldEmbeddings({Embedding({1}), Embedding({1, 2})}), Error);
}

TEST(ExtendedTowerScore, Examples) {
  EXPECT_EQ(extended_tower_score(Embedding({1, 0}), Embedding({2}), Embedding({0, 1}),
                                 Embedding({3})),
            6.0);
  EXPECT_EQ(extended_tower_score(Embedding({0, 0}), Embedding({0}), Embedding({0, 0}),
                                 Embedding({0})),
            0.0);
}

TEST(ExtendedTowerScore, SplitsIntoPartDots) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    const std::size_t dt = 1 + rng() % 16, di = 1 + rng() % 16;
    const auto hu = random_embedding(rng, dt), ha = random_embedding(rng, dt);
    const auto ut = random_embedding(rng, di), vt = random_embedding(rng, di);
    const double parts = dot(hu.values(), ha.values()) + dot(ut.values(), vt.values());
    EXPECT_NEAR(extended_tower_score(hu, ut, ha, vt), parts, 1e-12 * (1 + std::abs(parts)));
  }
  EXPECT_THROW(extended_tower_score(Embedding({1}), Embedding({1}), Embedding({1, 2}),
                                    Embedding({1})),
               Error);
}

TEST(FusedScores, SumOfParts) {
  const std::vector<Entry> pairs = {{0, 0}, {2, 0}, {1, 1}, {0, 2}, {1, 2}, {3, 2}};
  const auto idx = build_index(BinaryInteractionMatrix::from_entries(3, 4, pairs));
  const AdTowerTable towers(3, 1, {0.0f, 0.0f, 0.3f});
  const QueryVector q({{0, 0.5}, {1, 2.0}, {3, 1.0}});
  const ScoreVector s = fused_scores(towers, Embedding({1.0}), idx, q);
  EXPECT_NEAR(s[2], 3.8, 1e-6);
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[1], 2.0);
}

namespace {

AdTowerTable random_towers(std::mt19937_64& rng, std::uint32_t n, std::uint32_t dim) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(std::size_t{n} * dim);
  for (float& x : v) x = u(rng);
  return AdTowerTable(n, dim, v);
}

}  // namespace

TEST(FusedScores, EmptyQueryIsTowerOnly) {
  std::mt19937_64 rng(4);
  const auto l = hmtest::random_matrix(rng, 50, 10, 0.3);
  const auto towers = random_towers(rng, 50, 6);
  const auto user = random_embedding(rng, 6);
  const ScoreVector s = fused_scores(towers, user, build_index(l), QueryVector());
  std::vector<double> tower(50);
  tower_scores_into(towers, user, tower);
  EXPECT_EQ(std::vector<double>(s.values().begin(), s.values().end()), tower);
}

TEST(FusedScores, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::uint32_t dt = 1 + rng() % 8, di = 1 + rng() % 8;
    const auto l = hmtest::random_matrix(rng, 100, 20, 0.2);
    std::vector<Embedding> ha, vt;
    for (int a = 0; a < 100; ++a) {
      ha.push_back(random_embedding(rng, dt));
      vt.push_back(random_embedding(rng, di));
    }
    const auto towers = AdTowerTable::from_parts(ha, vt);
    const auto hu = random_embedding(rng, dt), ut = random_embedding(rng, di);
    const auto q = hmtest::random_query(rng, 20, 8, false);
    const ScoreVector s = fused_scores(towers, concat(hu, ut), build_index(l), q, {2, 256});
    const auto hit = hmtest::brute_scores(l, q);
    for (AdId a = 0; a < 100; ++a) {
      // The table stores floats, so the brute force reads the rounded rows.
      double tower = 0.0;
      const auto row = towers.row(a);
      for (std::size_t k = 0; k < dt; ++k) tower += hu[k] * double(row[k]);
      for (std::size_t k = 0; k < di; ++k) tower += ut[k] * double(row[dt + k]);
      EXPECT_NEAR(s[a], tower + hit[a], 1e-6);
      EXPECT_NEAR(s[a], extended_tower_score(hu, ut, ha[a], vt[a]) + hit[a], 1e-5);
    }
  }
}

TEST(FusedScores, RejectsMismatchedShapes) {
  const auto idx = build_index(BinaryInteractionMatrix::from_entries(3, 2, {}));
  const AdTowerTable four(4, 1, {0, 0, 0, 0});
  const AdTowerTable three(3, 2, {0, 0, 0, 0, 0, 0});
  EXPECT_THROW(fused_scores(four, Embedding({1.0}), idx, QueryVector()), Error);
  EXPECT_THROW(fused_scores(three, Embedding({1.0}), idx, QueryVector()), Error);
  EXPECT_THROW(AdTowerTable(2, 2, {0, 0, 0}), Error);
}

TEST(TopK, Examples) {
  const std::vector<double> s = {0.5, 2.0, 3.5};
  EXPECT_EQ(top_k(s, 2), (std::vector<ScoredAd>{{2, 3.5}, {1, 2.0}}));
  EXPECT_EQ(top_k(s, 3), (std::vector<ScoredAd>{{2, 3.5}, {1, 2.0}, {0, 0.5}}));
  const std::vector<double> flat = {1.0, 1.0, 1.0, 1.0};
  EXPECT_EQ(top_k(flat, 2), (std::vector<ScoredAd>{{0, 1.0}, {1, 1.0}}));
}

TEST(TopK, RejectsBadK) {
  const std::vector<double> s = {0.5, 2.0, 3.5};
  EXPECT_THROW(top_k(s, 0), Error);
  EXPECT_THROW(top_k(s, 4), Error);
}

TEST(TopK, MatchesFullSortUnderPermutation) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<double> s(n);
    for (double& x : s) x = double(rng() % 20);
    std::vector<ScoredAd> all;
    for (std::size_t a = 0; a < n; ++a) all.push_back({AdId(a), s[a]});
    std::sort(all.begin(), all.end(), [](const ScoredAd& x, const ScoredAd& y) {
      return x.score != y.score ? x.score > y.score : x.ad < y.ad;
    });
    const std::size_t k = 1 + rng() % n;
    const auto got = top_k(s, k);
    EXPECT_EQ(got, std::vector<ScoredAd>(all.begin(), all.begin() + k));
  }
}
