#pragma once

// Compressed inverted index over the columns of L.
//
// Each feature's ad list is cut into blocks of ads sharing the high 24 bits
// of their id. A block stores one 32-bit header word and one residual byte
// per ad. A block with n ads goes to group ceil(log2 n) and its residuals are
// padded to 2^g bytes, so all blocks in a group have the same footprint.
//
// Header word layout: bits 31..8 hold the shared high part h, bits 7..0 hold
// (valid_count - 1). Padded lanes past valid_count are written as 0 and never
// read back as ads.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hitmatch/types.hpp"

namespace hitmatch {

inline constexpr unsigned kNumGroups = 9;
inline constexpr unsigned kResidualBits = 8;
inline constexpr unsigned kBlockSpan = 1u << kResidualBits;  // ads per header

struct SplitAdId {
  std::uint32_t header = 0;   // high 24 bits
  std::uint8_t residual = 0;  // low 8 bits

  friend bool operator==(const SplitAdId&, const SplitAdId&) = default;
};

constexpr SplitAdId split_ad_id(AdId v) noexcept {
  return {v >> kResidualBits, static_cast<std::uint8_t>(v & (kBlockSpan - 1))};
}

constexpr AdId join_ad_id(std::uint32_t header, std::uint8_t residual) noexcept {
  return (header << kResidualBits) | residual;
}

// ceil(log2 n) for a block population n in [1, 256]; group_of(1) == 0.
// Throws Error(contract_violation) outside that range.
unsigned group_of(unsigned n);

constexpr std::size_t padded_length(unsigned group) noexcept {
  return std::size_t{1} << group;
}

constexpr std::uint32_t pack_header(std::uint32_t header, unsigned valid_count) noexcept {
  return (header << kResidualBits) | ((valid_count - 1) & (kBlockSpan - 1));
}

constexpr std::uint32_t header_of(std::uint32_t word) noexcept {
  return word >> kResidualBits;
}

constexpr unsigned valid_count_of(std::uint32_t word) noexcept {
  return (word & (kBlockSpan - 1)) + 1;
}

// SoA storage for one group.
struct BlockGroup {
  std::vector<std::uint32_t> key_offsets;  // length M + 1, block range per feature
  std::vector<std::uint32_t> headers;      // one packed word per block
  std::vector<std::uint8_t> values;        // block b at [b << g, (b + 1) << g)

  std::size_t block_count() const noexcept { return headers.size(); }

  friend bool operator==(const BlockGroup&, const BlockGroup&) = default;
};

struct BlockView {
  FeatureId feature = 0;
  unsigned group = 0;
  std::uint32_t header = 0;
  unsigned valid_count = 0;
  std::span<const std::uint8_t> padded;  // length 2^group

  std::span<const std::uint8_t> residuals() const { return padded.first(valid_count); }
  AdId ad(unsigned lane) const { return join_ad_id(header, padded[lane]); }
};

class GroupedIndex {
 public:
  GroupedIndex() = default;

  // Assembles an index from raw arrays and checks every structural
  // invariant; throws Error(corrupt_index) describing the first violation.
  static GroupedIndex from_parts(std::uint32_t num_ads, std::uint32_t num_features,
                                 std::array<BlockGroup, kNumGroups> groups);

  std::uint32_t num_ads() const noexcept { return num_ads_; }
  std::uint32_t num_features() const noexcept { return num_features_; }
  const BlockGroup& group(unsigned g) const { return groups_[g]; }
  const std::array<BlockGroup, kNumGroups>& groups() const noexcept { return groups_; }

  std::size_t total_blocks() const noexcept;

  // Visits blocks group by group, then feature by feature, then by header.
  template <class Fn>
  void for_each_block(Fn&& fn) const {
    for (unsigned g = 0; g < kNumGroups; ++g) {
      const BlockGroup& grp = groups_[g];
      const std::size_t len = padded_length(g);
      for (FeatureId f = 0; f < num_features_; ++f) {
        for (std::uint32_t b = grp.key_offsets[f]; b < grp.key_offsets[f + 1]; ++b) {
          const std::uint32_t word = grp.headers[b];
          fn(BlockView{f, g, header_of(word), valid_count_of(word),
                       std::span<const std::uint8_t>(grp.values).subspan(b * len, len)});
        }
      }
    }
  }

  friend bool operator==(const GroupedIndex&, const GroupedIndex&) = default;

 private:
  friend GroupedIndex build_index(const BinaryInteractionMatrix&, unsigned);

  std::uint32_t num_ads_ = 0;
  std::uint32_t num_features_ = 0;
  std::array<BlockGroup, kNumGroups> groups_{};
};

// Builds the index with `workers` threads (0 means available parallelism).
// Output is byte-identical for every worker count.
GroupedIndex build_index(const BinaryInteractionMatrix& matrix, unsigned workers = 1);

BinaryInteractionMatrix decode_index(const GroupedIndex& index);

struct GroupStats {
  std::size_t blocks = 0;
  std::size_t ads = 0;          // valid residuals
  std::size_t value_bytes = 0;  // including padding
};

struct IndexStats {
  std::array<GroupStats, kNumGroups> groups{};
  std::size_t total_blocks = 0;
  std::size_t total_ads = 0;
  std::size_t storage_bytes = 0;  // keys + headers + values
};

IndexStats index_stats(const GroupedIndex& index);

}  // namespace hitmatch
