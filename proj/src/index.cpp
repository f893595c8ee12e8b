#include "hitmatch/index.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <thread>

namespace hitmatch {

unsigned group_of(unsigned n) {
  if (n == 0 || n > kBlockSpan) {
    fail(ErrorCode::contract_violation,
         "block population " + std::to_string(n) + " outside [1, 256]");
  }
  return static_cast<unsigned>(std::bit_width(n - 1));
}

std::size_t GroupedIndex::total_blocks() const noexcept {
  std::size_t total = 0;
  for (const BlockGroup& g : groups_) total += g.block_count();
  return total;
}

namespace {

[[noreturn]] void corrupt(unsigned g, const std::string& what) {
  fail(ErrorCode::corrupt_index, "group " + std::to_string(g) + ": " + what);
}

void validate_group(unsigned g, const BlockGroup& grp, std::uint32_t num_ads,
                    std::uint32_t num_features) {
  const std::size_t len = padded_length(g);
  if (grp.key_offsets.size() != std::size_t{num_features} + 1) {
    corrupt(g, "key_offsets has " + std::to_string(grp.key_offsets.size()) +
                   " entries, expected " + std::to_string(std::size_t{num_features} + 1));
  }
  if (grp.key_offsets.front() != 0) corrupt(g, "key_offsets[0] is not 0");
  for (std::size_t f = 0; f < num_features; ++f) {
    if (grp.key_offsets[f + 1] < grp.key_offsets[f]) {
      corrupt(g, "key_offsets decreases at feature " + std::to_string(f));
    }
  }
  if (grp.key_offsets.back() != grp.headers.size()) {
    corrupt(g, "key_offsets[M] = " + std::to_string(grp.key_offsets.back()) +
                   " but group holds " + std::to_string(grp.headers.size()) + " blocks");
  }
  if (grp.values.size() != grp.headers.size() * len) {
    corrupt(g, "values has " + std::to_string(grp.values.size()) + " bytes, expected " +
                   std::to_string(grp.headers.size() * len));
  }
  for (std::size_t f = 0; f < num_features; ++f) {
    std::uint32_t prev_header = 0;
    for (std::uint32_t b = grp.key_offsets[f]; b < grp.key_offsets[f + 1]; ++b) {
      const std::uint32_t word = grp.headers[b];
      const unsigned n = valid_count_of(word);
      if (group_of(n) != g) {
        corrupt(g, "block " + std::to_string(b) + " holds " + std::to_string(n) +
                       " ads, which belongs to group " + std::to_string(group_of(n)));
      }
      const std::uint32_t h = header_of(word);
      if (b > grp.key_offsets[f] && h <= prev_header) {
        corrupt(g, "block headers not strictly increasing for feature " + std::to_string(f));
      }
      prev_header = h;
      const std::uint8_t* res = grp.values.data() + b * len;
      for (unsigned j = 0; j < n; ++j) {
        if (j > 0 && res[j] <= res[j - 1]) {
          corrupt(g, "residuals not strictly increasing in block " + std::to_string(b));
        }
        const std::uint64_t ad = (std::uint64_t{h} << kResidualBits) | res[j];
        if (ad >= num_ads) {
          corrupt(g, "block " + std::to_string(b) + " references ad " + std::to_string(ad) +
                         " >= num_ads " + std::to_string(num_ads));
        }
      }
    }
  }
}

// Local build output for a contiguous feature range.
struct PartialGroups {
  std::array<std::vector<std::uint32_t>, kNumGroups> counts;  // blocks per feature
  std::array<std::vector<std::uint32_t>, kNumGroups> headers;
  std::array<std::vector<std::uint8_t>, kNumGroups> values;
};

void build_range(std::span<const Entry> entries, FeatureId first_feature,
                 FeatureId end_feature, PartialGroups& out) {
  const std::size_t features = end_feature - first_feature;
  for (unsigned g = 0; g < kNumGroups; ++g) out.counts[g].assign(features, 0);

  // Entries are sorted by (feature, ad): each block is a maximal run with the
  // same feature and the same high part, already in header order.
  std::size_t i = 0;
  while (i < entries.size()) {
    const FeatureId f = entries[i].feature;
    const std::uint32_t h = split_ad_id(entries[i].ad).header;
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].feature == f &&
           split_ad_id(entries[j].ad).header == h) {
      ++j;
    }
    const auto n = static_cast<unsigned>(j - i);
    const unsigned g = group_of(n);
    out.headers[g].push_back(pack_header(h, n));
    auto& vals = out.values[g];
    for (std::size_t k = i; k < j; ++k) vals.push_back(split_ad_id(entries[k].ad).residual);
    vals.resize(vals.size() + (padded_length(g) - n), 0);
    ++out.counts[g][f - first_feature];
    i = j;
  }
}

}  // namespace

GroupedIndex GroupedIndex::from_parts(std::uint32_t num_ads, std::uint32_t num_features,
                                      std::array<BlockGroup, kNumGroups> groups) {
  for (unsigned g = 0; g < kNumGroups; ++g) {
    validate_group(g, groups[g], num_ads, num_features);
  }
  GroupedIndex idx;
  idx.num_ads_ = num_ads;
  idx.num_features_ = num_features;
  idx.groups_ = std::move(groups);
  return idx;
}

GroupedIndex build_index(const BinaryInteractionMatrix& matrix, unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  const std::uint32_t m = matrix.num_features();
  const auto entries = matrix.entries();

  // Feature boundaries in the sorted entry array.
  std::vector<std::size_t> feature_start(std::size_t{m} + 1, 0);
  for (const Entry& e : entries) ++feature_start[e.feature + 1];
  for (std::size_t f = 0; f < m; ++f) feature_start[f + 1] += feature_start[f];

  // Split features into contiguous ranges holding roughly equal entry counts.
  workers = std::max(1u, std::min<unsigned>(workers, std::max<std::uint32_t>(m, 1)));
  std::vector<FeatureId> cut(workers + 1, 0);
  cut[workers] = m;
  for (unsigned w = 1; w < workers; ++w) {
    const std::size_t target = entries.size() * w / workers;
    auto it = std::lower_bound(feature_start.begin(), feature_start.end(), target);
    cut[w] = std::clamp<FeatureId>(static_cast<FeatureId>(it - feature_start.begin()),
                                   cut[w - 1], m);
  }

  std::vector<PartialGroups> parts(workers);
  auto run = [&](unsigned w) {
    const std::size_t lo = feature_start[cut[w]];
    const std::size_t hi = feature_start[cut[w + 1]];
    build_range(entries.subspan(lo, hi - lo), cut[w], cut[w + 1], parts[w]);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }

  // Merge in feature order; the result does not depend on the partition.
  GroupedIndex idx;
  idx.num_ads_ = matrix.num_ads();
  idx.num_features_ = m;
  for (unsigned g = 0; g < kNumGroups; ++g) {
    BlockGroup& grp = idx.groups_[g];
    grp.key_offsets.assign(std::size_t{m} + 1, 0);
    std::size_t blocks = 0;
    std::size_t bytes = 0;
    for (const auto& p : parts) {
      blocks += p.headers[g].size();
      bytes += p.values[g].size();
    }
    grp.headers.reserve(blocks);
    grp.values.reserve(bytes);
    std::uint32_t running = 0;
    for (unsigned w = 0; w < workers; ++w) {
      const auto& p = parts[w];
      for (std::size_t k = 0; k < p.counts[g].size(); ++k) {
        running += p.counts[g][k];
        grp.key_offsets[cut[w] + k + 1] = running;
      }
      grp.headers.insert(grp.headers.end(), p.headers[g].begin(), p.headers[g].end());
      grp.values.insert(grp.values.end(), p.values[g].begin(), p.values[g].end());
    }
  }
  return idx;
}

BinaryInteractionMatrix decode_index(const GroupedIndex& index) {
  std::vector<Entry> entries;
  entries.reserve(index_stats(index).total_ads);
  index.for_each_block([&](const BlockView& block) {
    for (unsigned j = 0; j < block.valid_count; ++j) {
      entries.push_back({block.feature, block.ad(j)});
    }
  });
  return BinaryInteractionMatrix::from_entries(index.num_ads(), index.num_features(), entries);
}

IndexStats index_stats(const GroupedIndex& index) {
  IndexStats s;
  for (unsigned g = 0; g < kNumGroups; ++g) {
    const BlockGroup& grp = index.group(g);
    GroupStats& gs = s.groups[g];
    gs.blocks = grp.block_count();
    gs.value_bytes = grp.values.size();
    for (std::uint32_t word : grp.headers) gs.ads += valid_count_of(word);
    s.total_blocks += gs.blocks;
    s.total_ads += gs.ads;
    s.storage_bytes += grp.key_offsets.size() * sizeof(std::uint32_t) +
                       grp.headers.size() * sizeof(std::uint32_t) + grp.values.size();
  }
  return s;
}

}  // namespace hitmatch
