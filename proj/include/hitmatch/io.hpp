#pragma once

// File formats. Binary formats are little-endian with no padding.
//
//   HMLM matrix:   "HMLM" version:u32 N:u32 M:u32 nnz:u64 then nnz x (feature:u32 ad:u32)
//   HMIX index:    "HMIX" version:u32 N:u32 M:u32 then for g = 0..8:
//                  block_count:u32 key_offsets:(M+1) x u32 headers:block_count x u32
//                  values:block_count * 2^g bytes
//   HMAT towers:   "HMAT" N:u32 dim:u32 then N*dim f32, row-major
//   HMQS queries:  "HMQS" version:u32 count:u32 then per query
//                  nnz:u32 then nnz x (feature:u32 weight:f64)
//
// Text formats: matrix as "ad_id<TAB>feature_id" lines (optional header
// "# hitmatch-matrix N M"); ranked requests as blocks of a "D" line followed
// by D lines "ad_id score true_rank value"; score dumps as CSV.
//
// Decoding errors throw Error(format) naming the byte offset (binary) or line
// number (text). An index whose arrays decode but break an invariant throws
// Error(corrupt_index).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "hitmatch/fusion.hpp"
#include "hitmatch/index.hpp"
#include "hitmatch/rank_loss.hpp"
#include "hitmatch/types.hpp"

namespace hitmatch {

inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::uint32_t kIndexFormatVersion = 1;
inline constexpr std::uint32_t kQueryFormatVersion = 1;

using Bytes = std::vector<std::uint8_t>;

Bytes encode_matrix(const BinaryInteractionMatrix& matrix);
BinaryInteractionMatrix decode_matrix(std::span<const std::uint8_t> bytes);

Bytes encode_index(const GroupedIndex& index);
GroupedIndex decode_index_snapshot(std::span<const std::uint8_t> bytes);

Bytes encode_towers(const AdTowerTable& table);
AdTowerTable decode_towers(std::span<const std::uint8_t> bytes);

Bytes encode_queries(std::span<const QueryVector> queries);
std::vector<QueryVector> decode_queries(std::span<const std::uint8_t> bytes);

void write_matrix_text(std::ostream& out, const BinaryInteractionMatrix& matrix);
// Without a header line the bounds are inferred as max id + 1.
BinaryInteractionMatrix read_matrix_text(std::istream& in);

void write_requests(std::ostream& out, std::span<const RankedRequest> requests);
std::vector<RankedRequest> read_requests(std::istream& in);

// "query,rank,ad_id,score" rows for the given top list.
void write_scores_csv_header(std::ostream& out);
void write_scores_csv(std::ostream& out, std::size_t query, std::span<const ScoredAd> ranked);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Picks text or HMLM by content (binary files start with the magic).
BinaryInteractionMatrix load_matrix(const std::filesystem::path& path);

}  // namespace hitmatch
