#pragma once

// Query-time scoring over a GroupedIndex.
//
// For every group, the blocks owned by the query's features form one flat
// list of work items (one item per block). An exclusive scan over the
// per-feature block counts gives each feature's segment in that list, and
// the list is cut into equal contiguous pieces, one per lane. A lane finds
// the feature of its first item with a merge-path search over the segment
// starts, so every item knows which query weight to add.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hitmatch/index.hpp"
#include "hitmatch/types.hpp"

namespace hitmatch {

// offsets[i] = sum of lengths[j] for j < i.
std::vector<std::uint32_t> exclusive_scan(std::span<const std::uint32_t> lengths);

struct GroupPlan {
  std::vector<std::uint32_t> key_lengths;   // blocks per query term
  std::vector<std::uint32_t> key_segments;  // exclusive scan of key_lengths
  std::vector<std::uint32_t> key_begin;     // first block of each term in the group
  std::uint32_t total_blocks = 0;
};

struct WorkPlan {
  std::array<GroupPlan, kNumGroups> groups;
  std::vector<FeatureId> features;  // query term features, in query order
  std::vector<double> weights;

  std::size_t total_blocks() const noexcept;
};

// Throws Error(out_of_range) if a query feature is >= M.
WorkPlan plan_query(const GroupedIndex& index, const QueryVector& query);

// Index of the segment containing `item`: the last j with segments[j] <= item.
// Zero-length segments are skipped over.
std::uint32_t merge_path_search(std::span<const std::uint32_t> segments,
                                std::uint32_t item);

// Contiguous range of one group's work items given to one lane.
struct LaneRange {
  std::uint32_t first_item = 0;
  std::uint32_t end_item = 0;
  std::uint32_t first_term = 0;  // query term owning first_item

  std::uint32_t size() const noexcept { return end_item - first_item; }
};

struct Assignment {
  unsigned lanes = 0;
  std::array<std::vector<LaneRange>, kNumGroups> ranges;  // [group][lane]
};

// Splits each group's items into `lanes` contiguous ranges whose sizes differ
// by at most one. Throws Error(invalid_argument) if lanes == 0.
Assignment balanced_assignment(const WorkPlan& plan, unsigned lanes);

struct WorkItem {
  unsigned group = 0;
  std::uint32_t term = 0;
  FeatureId feature = 0;
  std::uint32_t block = 0;  // block index within the group

  friend bool operator==(const WorkItem&, const WorkItem&) = default;
};

// Expands one lane's range in one group into explicit work items.
std::vector<WorkItem> lane_items(const WorkPlan& plan, const Assignment& assignment,
                                 unsigned group, unsigned lane);

using GroupMask = std::uint32_t;
inline constexpr GroupMask kAllGroups = (1u << kNumGroups) - 1;

inline constexpr std::uint32_t kDefaultTileAds = 16384;

struct QueryOptions {
  unsigned workers = 1;                      // 0 means available parallelism
  std::uint32_t tile_ads = kDefaultTileAds;  // multiple of 256
};

// Overwrites `out` (length N) with the scores contributed by `lane`'s work
// items in the groups selected by `groups`. The ad range is processed tile by
// tile so the touched part of `out` stays cache resident.
void score_lane(const GroupedIndex& index, const WorkPlan& plan,
                const Assignment& assignment, unsigned lane, GroupMask groups,
                std::uint32_t tile_ads, std::span<double> out);

// Reusable scorer bound to one index. Holds the worker threads and the
// per-worker partial score buffers. One query at a time per engine.
class QueryEngine {
 public:
  explicit QueryEngine(const GroupedIndex& index, QueryOptions options = {});
  ~QueryEngine();
  QueryEngine(QueryEngine&&) noexcept;
  QueryEngine& operator=(QueryEngine&&) noexcept;

  const GroupedIndex& index() const noexcept { return *index_; }
  unsigned workers() const noexcept;

  // `out` must have length N; it is overwritten.
  void score_into(const QueryVector& query, std::span<double> out);
  ScoreVector score(const QueryVector& query);

 private:
  struct State;
  const GroupedIndex* index_;
  QueryOptions options_;
  std::unique_ptr<State> state_;
};

ScoreVector hitmatch_scores(const GroupedIndex& index, const QueryVector& query,
                            const QueryOptions& options = {});

}  // namespace hitmatch
