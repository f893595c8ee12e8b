#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "hitmatch/error.hpp"
#include "hitmatch/index.hpp"
#include "hitmatch/io.hpp"
#include "support.hpp"

using namespace hitmatch;

namespace {

struct Block {
  FeatureId feature;
  unsigned group;
  std::uint32_t header;
  std::vector<std::uint8_t> residuals;
  bool operator==(const Block&) const = default;
};

std::vector<Block> blocks_of(const GroupedIndex& idx) {
  std::vector<Block> out;
  idx.for_each_block([&](const BlockView& b) {
    const auto r = b.residuals();
    out.push_back({b.feature, b.group, b.header, {r.begin(), r.end()}});
  });
  return out;
}

// ceil(log2 n) by doubling.
unsigned slow_ceil_log2(unsigned n) {
  unsigned g = 0;
  while ((1u << g) < n) ++g;
  return g;
}

BinaryInteractionMatrix three_entry() {
  const std::vector<Entry> pairs = {{0, 5}, {0, 260}, {1, 5}};
  return BinaryInteractionMatrix::from_entries(300, 2, pairs);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(SplitAdId, Examples) {
  EXPECT_EQ(split_ad_id(260), (SplitAdId{1, 4}));
  EXPECT_EQ(split_ad_id(0), (SplitAdId{0, 0}));
  EXPECT_EQ(split_ad_id(65535), (SplitAdId{255, 255}));
  EXPECT_EQ(split_ad_id(0xffffffffu), (SplitAdId{0xffffff, 255}));
}

TEST(SplitAdId, JoinInverts) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto v = static_cast<AdId>(rng());
    const SplitAdId s = split_ad_id(v);
    EXPECT_EQ(std::uint64_t{s.header} * 256 + s.residual, v);
    EXPECT_EQ(join_ad_id(s.header, s.residual), v);
  }
}

TEST(GroupOf, Examples) {
  EXPECT_EQ(group_of(1), 0u);
  EXPECT_EQ(group_of(3), 2u);
  EXPECT_EQ(padded_length(group_of(3)), 4u);
  EXPECT_EQ(group_of(256), 8u);
}

TEST(GroupOf, MatchesCeilLog2ForEveryPopulation) {
  for (unsigned n = 1; n <= 256; ++n) {
    const unsigned g = group_of(n);
    EXPECT_EQ(g, slow_ceil_log2(n)) << n;
    if (g == 0) {
      EXPECT_EQ(n, 1u);
    } else {
      EXPECT_GT(n, 1u << (g - 1));
      EXPECT_LE(n, 1u << g);
    }
  }
}

TEST(GroupOf, RejectsOutsideRange) {
  EXPECT_EQ(code_of([] { group_of(0); }), ErrorCode::contract_violation);
  EXPECT_EQ(code_of([] { group_of(257); }), ErrorCode::contract_violation);
}

TEST(HeaderWord, PackingIsReversible) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const std::uint32_t h = rng() & 0xffffff;
    const unsigned n = 1 + rng() % 256;
    const std::uint32_t word = pack_header(h, n);
    EXPECT_EQ(header_of(word), h);
    EXPECT_EQ(valid_count_of(word), n);
  }
  EXPECT_EQ(pack_header(1, 1), 0x100u);
  EXPECT_EQ(pack_header(0, 256), 0xffu);
}

TEST(BuildIndex, ThreeEntryExample) {
  const GroupedIndex idx = build_index(three_entry());
  const std::vector<Block> expected = {{0, 0, 0, {5}}, {0, 0, 1, {4}}, {1, 0, 0, {5}}};
  EXPECT_EQ(blocks_of(idx), expected);
  EXPECT_EQ(idx.group(0).key_offsets, (std::vector<std::uint32_t>{0, 2, 3}));
  EXPECT_EQ(idx.group(0).values, (std::vector<std::uint8_t>{5, 4, 5}));
  for (unsigned g = 1; g < kNumGroups; ++g) EXPECT_EQ(idx.group(g).block_count(), 0u);
}

TEST(BuildIndex, FullBlockLandsInGroupEight) {
  std::vector<Entry> pairs;
  for (AdId a = 0; a < 256; ++a) pairs.push_back({0, a});
  const GroupedIndex idx = build_index(BinaryInteractionMatrix::from_entries(256, 1, pairs));
  ASSERT_EQ(idx.total_blocks(), 1u);
  const BlockGroup& g8 = idx.group(8);
  ASSERT_EQ(g8.block_count(), 1u);
  EXPECT_EQ(header_of(g8.headers[0]), 0u);
  EXPECT_EQ(valid_count_of(g8.headers[0]), 256u);
  ASSERT_EQ(g8.values.size(), 256u);
  for (unsigned j = 0; j < 256; ++j) EXPECT_EQ(g8.values[j], j);
}

TEST(BuildIndex, EmptyMatrix) {
  const GroupedIndex idx = build_index(BinaryInteractionMatrix::from_entries(10, 4, {}));
  for (unsigned g = 0; g < kNumGroups; ++g) {
    EXPECT_EQ(idx.group(g).key_offsets, std::vector<std::uint32_t>(5, 0));
    EXPECT_TRUE(idx.group(g).headers.empty());
    EXPECT_TRUE(idx.group(g).values.empty());
  }
  EXPECT_EQ(decode_index(idx).nnz(), 0u);
}

TEST(BuildIndex, PadsWithZeroBytes) {
  const std::vector<Entry> pairs = {{0, 257}, {0, 258}, {0, 300}};
  const GroupedIndex idx = build_index(BinaryInteractionMatrix::from_entries(400, 1, pairs));
  EXPECT_EQ(idx.group(2).values, (std::vector<std::uint8_t>{1, 2, 44, 0}));
  EXPECT_EQ(idx.group(2).headers, (std::vector<std::uint32_t>{pack_header(1, 3)}));
}

TEST(DecodeIndex, SmallRoundTrips) {
  const std::vector<Entry> six = {{0, 0}, {2, 0}, {1, 1}, {0, 2}, {1, 2}, {3, 2}};
  const auto m6 = BinaryInteractionMatrix::from_entries(3, 4, six);
  EXPECT_EQ(decode_index(build_index(m6)), m6);
  EXPECT_EQ(decode_index(build_index(three_entry())), three_entry());
}

TEST(DecodeIndex, RandomRoundTripAndStructure) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const std::uint32_t n = 1 + rng() % (t < 25 ? 5000 : 100000);
    const std::uint32_t m = 1 + rng() % (t < 25 ? 300 : 10000);
    const auto l = t % 2 ? hmtest::clustered_matrix(rng, n, m)
                         : hmtest::random_matrix(rng, n, m, std::min(0.05, 2e5 / (double(n) * m)));
    const GroupedIndex idx = build_index(l);
    ASSERT_EQ(decode_index(idx), l);

    std::size_t value_bytes = 0;
    for (unsigned g = 0; g < kNumGroups; ++g) {
      const BlockGroup& grp = idx.group(g);
      EXPECT_EQ(grp.key_offsets.front(), 0u);
      EXPECT_TRUE(std::is_sorted(grp.key_offsets.begin(), grp.key_offsets.end()));
      EXPECT_EQ(grp.values.size(), grp.block_count() * padded_length(g));
      value_bytes += grp.values.size();
    }
    std::size_t expected_bytes = 0;
    std::uint32_t prev_header = 0;
    FeatureId prev_feature = 0;
    unsigned prev_group = kNumGroups;
    idx.for_each_block([&](const BlockView& b) {
      EXPECT_EQ(b.group, slow_ceil_log2(b.valid_count));
      EXPECT_EQ(b.padded.size(), std::size_t{1} << b.group);
      expected_bytes += std::size_t{1} << b.group;
      const auto r = b.residuals();
      EXPECT_TRUE(std::adjacent_find(r.begin(), r.end(), std::greater_equal<>()) == r.end());
      if (b.group == prev_group && b.feature == prev_feature) EXPECT_GT(b.header, prev_header);
      prev_group = b.group;
      prev_feature = b.feature;
      prev_header = b.header;
    });
    EXPECT_EQ(value_bytes, expected_bytes);
  }
}

TEST(BuildIndex, ByteIdenticalAcrossWorkerCounts) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 6; ++t) {
    const auto l = hmtest::clustered_matrix(rng, 20000, 500 + 300 * t);
    const GroupedIndex one = build_index(l, 1);
    const Bytes ref = encode_index(one);
    for (unsigned w : {2u, 3u, 8u, 64u, 0u}) {
      const GroupedIndex many = build_index(l, w);
      EXPECT_EQ(many, one) << w;
      EXPECT_EQ(encode_index(many), ref) << w;
    }
  }
}

TEST(IndexStats, Accounting) {
  std::mt19937_64 rng(6);
  const auto l = hmtest::clustered_matrix(rng, 4000, 100);
  const GroupedIndex idx = build_index(l);
  const IndexStats s = index_stats(idx);
  EXPECT_EQ(s.total_ads, l.nnz());
  EXPECT_EQ(s.total_blocks, idx.total_blocks());
  std::size_t bytes = 0;
  for (unsigned g = 0; g < kNumGroups; ++g) {
    EXPECT_EQ(s.groups[g].value_bytes, s.groups[g].blocks << g);
    bytes += s.groups[g].value_bytes + 4 * s.groups[g].blocks + 4 * (l.num_features() + 1);
  }
  EXPECT_EQ(s.storage_bytes, bytes);
}

class FromParts : public ::testing::Test {
 protected:
  std::array<BlockGroup, kNumGroups> parts = build_index(three_entry()).groups();
  ErrorCode rebuild() {
    return code_of([&] { GroupedIndex::from_parts(300, 2, parts); });
  }
};

TEST_F(FromParts, AcceptsUntouched) {
  EXPECT_EQ(GroupedIndex::from_parts(300, 2, parts), build_index(three_entry()));
}

TEST_F(FromParts, WrongKeyLength) {
  parts[0].key_offsets.pop_back();
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, DecreasingKeys) {
  parts[0].key_offsets = {0, 3, 2};
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, KeysPastBlockCount) {
  parts[0].key_offsets = {0, 2, 4};
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, BlockInWrongGroup) {
  parts[0].headers[0] = pack_header(0, 2);
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, HeadersOutOfOrder) {
  std::swap(parts[0].headers[0], parts[0].headers[1]);
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, AdBeyondN) {
  parts[0].values[1] = 200;  // 256 + 200 >= 300
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, ValuesLengthMismatch) {
  parts[0].values.push_back(0);
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}

TEST_F(FromParts, ResidualsNotIncreasing) {
  parts[1].key_offsets = {0, 1, 1};
  parts[1].headers = {pack_header(0, 2)};
  parts[1].values = {9, 9};
  EXPECT_EQ(rebuild(), ErrorCode::corrupt_index);
}
