#include "hitmatch/query.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "worker_pool.hpp"

namespace hitmatch {

std::vector<std::uint32_t> exclusive_scan(std::span<const std::uint32_t> lengths) {
  std::vector<std::uint32_t> offsets(lengths.size());
  std::exclusive_scan(lengths.begin(), lengths.end(), offsets.begin(), std::uint32_t{0});
  return offsets;
}

std::size_t WorkPlan::total_blocks() const noexcept {
  std::size_t total = 0;
  for (const GroupPlan& g : groups) total += g.total_blocks;
  return total;
}

WorkPlan plan_query(const GroupedIndex& index, const QueryVector& query) {
  query.check_bounds(index.num_features());
  WorkPlan plan;
  const auto terms = query.terms();
  plan.features.reserve(terms.size());
  plan.weights.reserve(terms.size());
  for (const QueryTerm& t : terms) {
    plan.features.push_back(t.feature);
    plan.weights.push_back(t.weight);
  }
  for (unsigned g = 0; g < kNumGroups; ++g) {
    const auto& keys = index.group(g).key_offsets;
    GroupPlan& gp = plan.groups[g];
    gp.key_lengths.resize(terms.size());
    gp.key_begin.resize(terms.size());
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const FeatureId f = terms[j].feature;
      gp.key_begin[j] = keys[f];
      gp.key_lengths[j] = keys[f + 1] - keys[f];
    }
    gp.key_segments = exclusive_scan(gp.key_lengths);
    gp.total_blocks = terms.empty() ? 0 : gp.key_segments.back() + gp.key_lengths.back();
  }
  return plan;
}

std::uint32_t merge_path_search(std::span<const std::uint32_t> segments,
                                std::uint32_t item) {
  // Walks the merge path of the segment starts against the item indices:
  // the first segment start greater than `item` marks the crossing.
  const auto it = std::upper_bound(segments.begin(), segments.end(), item);
  return it == segments.begin() ? 0 : static_cast<std::uint32_t>(it - segments.begin() - 1);
}

Assignment balanced_assignment(const WorkPlan& plan, unsigned lanes) {
  if (lanes == 0) fail(ErrorCode::invalid_argument, "lane count must be at least 1");
  Assignment a;
  a.lanes = lanes;
  for (unsigned g = 0; g < kNumGroups; ++g) {
    const GroupPlan& gp = plan.groups[g];
    const std::uint64_t total = gp.total_blocks;
    auto& ranges = a.ranges[g];
    ranges.resize(lanes);
    for (unsigned lane = 0; lane < lanes; ++lane) {
      LaneRange& r = ranges[lane];
      r.first_item = static_cast<std::uint32_t>(total * lane / lanes);
      r.end_item = static_cast<std::uint32_t>(total * (lane + 1) / lanes);
      r.first_term = merge_path_search(gp.key_segments, r.first_item);
    }
  }
  return a;
}

std::vector<WorkItem> lane_items(const WorkPlan& plan, const Assignment& assignment,
                                 unsigned group, unsigned lane) {
  const GroupPlan& gp = plan.groups[group];
  const LaneRange& r = assignment.ranges[group][lane];
  std::vector<WorkItem> items;
  items.reserve(r.size());
  std::uint32_t term = r.first_term;
  for (std::uint32_t item = r.first_item; item < r.end_item; ++item) {
    while (item >= gp.key_segments[term] + gp.key_lengths[term]) ++term;
    items.push_back({group, term, plan.features[term],
                     gp.key_begin[term] + (item - gp.key_segments[term])});
  }
  return items;
}

namespace {

struct Cursor {
  const std::uint32_t* headers;
  const std::uint8_t* values;
  double weight;
  std::uint32_t next;
  std::uint32_t end;
};

// Scatters blocks [b, end) of one group whose header is below header_limit;
// returns the first block not consumed. A block of group G holds more than
// 2^(G-1) ads, so that many slots are always valid.
template <unsigned G>
std::uint32_t scatter_run(double* tile, std::uint32_t header_base, const std::uint32_t* headers,
                          const std::uint8_t* values, std::uint32_t b, std::uint32_t end,
                          std::uint32_t header_limit, double w) {
  constexpr unsigned width = 1u << G;
  constexpr unsigned always = G == 0 ? 1 : width / 2 + 1;
  for (; b < end; ++b) {
    const std::uint32_t word = headers[b];
    if (header_of(word) >= header_limit) break;
    double* base = tile + (std::size_t{header_of(word) - header_base} << kResidualBits);
    const std::uint8_t* res = values + std::size_t{b} * width;
    for (unsigned j = 0; j < always; ++j) base[res[j]] += w;
    if constexpr (G >= 2) {
      const unsigned n = valid_count_of(word);
      for (unsigned j = always; j < n; ++j) base[res[j]] += w;
    }
  }
  return b;
}

// Advances every live cursor of group G through the current tile. Exhausted
// cursors are swapped past `live`.
template <unsigned G>
void scan_group(std::vector<Cursor>& cursors, std::size_t& live, double* tile,
                std::uint32_t header_base, std::uint32_t header_limit) {
  for (std::size_t k = 0; k < live;) {
    Cursor& c = cursors[k];
    if (header_of(c.headers[c.next]) >= header_limit) {
      ++k;
      continue;
    }
    c.next = scatter_run<G>(tile, header_base, c.headers, c.values, c.next, c.end, header_limit,
                            c.weight);
    if (c.next == c.end) {
      std::swap(c, cursors[--live]);
    } else {
      ++k;
    }
  }
}

void check_tile(std::uint32_t tile_ads) {
  if (tile_ads == 0 || tile_ads % kBlockSpan != 0) {
    fail(ErrorCode::invalid_argument,
         "tile size " + std::to_string(tile_ads) + " is not a positive multiple of 256");
  }
}

}  // namespace

void score_lane(const GroupedIndex& index, const WorkPlan& plan,
                const Assignment& assignment, unsigned lane, GroupMask groups,
                std::uint32_t tile_ads, std::span<double> out) {
  check_tile(tile_ads);
  if (out.size() != index.num_ads()) {
    fail(ErrorCode::dimension_mismatch,
         "score buffer has length " + std::to_string(out.size()) + ", expected " +
             std::to_string(index.num_ads()));
  }

  std::array<std::vector<Cursor>, kNumGroups> cursors;
  std::array<std::size_t, kNumGroups> live{};
  for (unsigned g = 0; g < kNumGroups; ++g) {
    if (!(groups & (1u << g))) continue;
    const GroupPlan& gp = plan.groups[g];
    const LaneRange& r = assignment.ranges[g][lane];
    const BlockGroup& grp = index.group(g);
    std::uint32_t item = r.first_item;
    std::uint32_t term = r.first_term;
    while (item < r.end_item) {
      const std::uint32_t seg_end = gp.key_segments[term] + gp.key_lengths[term];
      if (seg_end <= item) {
        ++term;
        continue;
      }
      const std::uint32_t stop = std::min(r.end_item, seg_end);
      const std::uint32_t first_block = gp.key_begin[term] + (item - gp.key_segments[term]);
      cursors[g].push_back({grp.headers.data(), grp.values.data(), plan.weights[term],
                            first_block, first_block + (stop - item)});
      item = stop;
      ++term;
    }
    live[g] = cursors[g].size();
  }

  // Each tile of `out` is zeroed right before its blocks are scattered, so
  // it is still cache-resident when the scatter starts.
  const std::size_t num_ads = out.size();
  const std::uint32_t tile_headers = tile_ads >> kResidualBits;
  std::uint32_t header_base = 0;
  for (std::size_t first = 0; first < num_ads; first += tile_ads, header_base += tile_headers) {
    double* tile = out.data() + first;
    std::fill(tile, tile + std::min<std::size_t>(tile_ads, num_ads - first), 0.0);
    const std::uint32_t header_limit = header_base + tile_headers;
    [&]<std::size_t... G>(std::index_sequence<G...>) {
      (scan_group<G>(cursors[G], live[G], tile, header_base, header_limit), ...);
    }(std::make_index_sequence<kNumGroups>{});
  }
}

struct QueryEngine::State {
  explicit State(unsigned workers) : pool(workers) {}
  detail::WorkerPool pool;
  std::vector<std::vector<double>> partials;  // workers 1..W-1
};

QueryEngine::QueryEngine(const GroupedIndex& index, QueryOptions options)
    : index_(&index), options_(options) {
  check_tile(options_.tile_ads);
  unsigned w = options_.workers;
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  options_.workers = w;
  state_ = std::make_unique<State>(w);
  state_->partials.resize(w - 1);
}

QueryEngine::~QueryEngine() = default;
QueryEngine::QueryEngine(QueryEngine&&) noexcept = default;
QueryEngine& QueryEngine::operator=(QueryEngine&&) noexcept = default;

unsigned QueryEngine::workers() const noexcept { return options_.workers; }

void QueryEngine::score_into(const QueryVector& query, std::span<double> out) {
  const WorkPlan plan = plan_query(*index_, query);
  const unsigned workers = options_.workers;
  const Assignment assignment = balanced_assignment(plan, workers);
  if (workers == 1) {
    score_lane(*index_, plan, assignment, 0, kAllGroups, options_.tile_ads, out);
    return;
  }
  if (out.size() != index_->num_ads()) {
    fail(ErrorCode::dimension_mismatch, "score buffer length does not match num_ads");
  }
  for (auto& p : state_->partials) p.resize(out.size());

  // Each lane scores into its own buffer, then ad slices are reduced in
  // parallel into `out`.
  auto& partials = state_->partials;
  state_->pool.run([&](unsigned w) {
    std::span<double> dst = w == 0 ? out : std::span<double>(partials[w - 1]);
    score_lane(*index_, plan, assignment, w, kAllGroups, options_.tile_ads, dst);
  });
  const std::size_t n = out.size();
  state_->pool.run([&](unsigned w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    for (const auto& p : partials) {
      for (std::size_t a = lo; a < hi; ++a) out[a] += p[a];
    }
  });
}

ScoreVector QueryEngine::score(const QueryVector& query) {
  ScoreVector s(index_->num_ads());
  score_into(query, s.values());
  return s;
}

ScoreVector hitmatch_scores(const GroupedIndex& index, const QueryVector& query,
                            const QueryOptions& options) {
  QueryEngine engine(index, options);
  return engine.score(query);
}

}  // namespace hitmatch
