#include "hitmatch/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

namespace hitmatch {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMatrixMagic{'H', 'M', 'L', 'M'};
constexpr std::array<char, 4> kIndexMagic{'H', 'M', 'I', 'X'};
constexpr std::array<char, 4> kTowerMagic{'H', 'M', 'A', 'T'};
constexpr std::array<char, 4> kQueryMagic{'H', 'M', 'Q', 'S'};

class ByteWriter {
 public:
  void magic(const std::array<char, 4>& m) { raw(m.data(), m.size()); }
  template <class T>
  void put(T v) {
    raw(&v, sizeof v);
  }
  template <class T>
  void put_all(std::span<const T> v) {
    raw(v.data(), v.size_bytes());
  }
  Bytes take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  Bytes buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const char* format)
      : bytes_(bytes), format_(format) {}

  void magic(const std::array<char, 4>& expected) {
    need(4, "magic");
    const std::string_view found(reinterpret_cast<const char*>(bytes_.data()), 4);
    const std::string_view want(expected.data(), 4);
    if (found != want) {
      fail(ErrorCode::format, std::string(format_) + ": bad magic at byte offset 0: expected '" +
                                  std::string(want) + "', found '" + printable(found) + "'");
    }
    pos_ = 4;
  }

  void version(std::uint32_t expected) {
    const std::size_t at = pos_;
    const auto v = get<std::uint32_t>("version");
    if (v != expected) {
      fail(ErrorCode::format, std::string(format_) + ": unsupported version " + std::to_string(v) +
                                  " at byte offset " + std::to_string(at) + ", expected " +
                                  std::to_string(expected));
    }
  }

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }

  template <class T>
  std::vector<T> get_all(std::uint64_t count, const char* what) {
    if (count > (bytes_.size() - pos_) / sizeof(T)) need(count * sizeof(T), what);
    std::vector<T> v(count);
    std::memcpy(v.data(), bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
    return v;
  }

  void finish() const {
    if (pos_ != bytes_.size()) {
      fail(ErrorCode::format, std::string(format_) + ": " +
                                  std::to_string(bytes_.size() - pos_) +
                                  " trailing bytes at byte offset " + std::to_string(pos_));
    }
  }

  std::size_t offset() const noexcept { return pos_; }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (n > bytes_.size() - pos_) {
      fail(ErrorCode::format, std::string(format_) + ": truncated input at byte offset " +
                                  std::to_string(pos_) + " reading " + what + " (need " +
                                  std::to_string(n) + " bytes, " +
                                  std::to_string(bytes_.size() - pos_) + " left)");
    }
  }

  static std::string printable(std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c >= 0x20 && c < 0x7f) {
        out += c;
      } else {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
        out += buf;
      }
    }
    return out;
  }

  std::span<const std::uint8_t> bytes_;
  const char* format_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void text_error(const char* format, std::size_t line, const std::string& what) {
  fail(ErrorCode::format, std::string(format) + ": line " + std::to_string(line) + ": " + what);
}

template <class T>
T parse_number(std::string_view tok, const char* format, std::size_t line, const char* what) {
  T v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    text_error(format, line, std::string("cannot parse ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Bytes encode_matrix(const BinaryInteractionMatrix& matrix) {
  ByteWriter w;
  w.magic(kMatrixMagic);
  w.put<std::uint32_t>(kMatrixFormatVersion);
  w.put<std::uint32_t>(matrix.num_ads());
  w.put<std::uint32_t>(matrix.num_features());
  w.put<std::uint64_t>(matrix.nnz());
  for (const Entry& e : matrix.entries()) {
    w.put<std::uint32_t>(e.feature);
    w.put<std::uint32_t>(e.ad);
  }
  return w.take();
}

BinaryInteractionMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "HMLM matrix");
  r.magic(kMatrixMagic);
  r.version(kMatrixFormatVersion);
  const auto n = r.get<std::uint32_t>("num_ads");
  const auto m = r.get<std::uint32_t>("num_features");
  const auto nnz = r.get<std::uint64_t>("nnz");
  const auto raw = r.get_all<std::uint32_t>(nnz * 2, "entries");
  r.finish();
  std::vector<Entry> entries(nnz);
  for (std::uint64_t i = 0; i < nnz; ++i) entries[i] = {raw[2 * i], raw[2 * i + 1]};
  return BinaryInteractionMatrix::from_entries(n, m, entries);
}

Bytes encode_index(const GroupedIndex& index) {
  ByteWriter w;
  w.magic(kIndexMagic);
  w.put<std::uint32_t>(kIndexFormatVersion);
  w.put<std::uint32_t>(index.num_ads());
  w.put<std::uint32_t>(index.num_features());
  for (unsigned g = 0; g < kNumGroups; ++g) {
    const BlockGroup& grp = index.group(g);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(grp.block_count()));
    w.put_all<std::uint32_t>(grp.key_offsets);
    w.put_all<std::uint32_t>(grp.headers);
    w.put_all<std::uint8_t>(grp.values);
  }
  return w.take();
}

GroupedIndex decode_index_snapshot(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "HMIX index");
  r.magic(kIndexMagic);
  r.version(kIndexFormatVersion);
  const auto n = r.get<std::uint32_t>("num_ads");
  const auto m = r.get<std::uint32_t>("num_features");
  std::array<BlockGroup, kNumGroups> groups;
  for (unsigned g = 0; g < kNumGroups; ++g) {
    const auto blocks = r.get<std::uint32_t>("block_count");
    groups[g].key_offsets = r.get_all<std::uint32_t>(std::uint64_t{m} + 1, "key_offsets");
    groups[g].headers = r.get_all<std::uint32_t>(blocks, "headers");
    groups[g].values = r.get_all<std::uint8_t>(std::uint64_t{blocks} << g, "values");
  }
  r.finish();
  return GroupedIndex::from_parts(n, m, std::move(groups));
}

Bytes encode_towers(const AdTowerTable& table) {
  ByteWriter w;
  w.magic(kTowerMagic);
  w.put<std::uint32_t>(table.num_ads());
  w.put<std::uint32_t>(table.dim());
  w.put_all<float>(table.values());
  return w.take();
}

AdTowerTable decode_towers(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "HMAT tower table");
  r.magic(kTowerMagic);
  const auto n = r.get<std::uint32_t>("num_ads");
  const auto dim = r.get<std::uint32_t>("dim");
  auto values = r.get_all<float>(std::uint64_t{n} * dim, "values");
  r.finish();
  return AdTowerTable(n, dim, std::move(values));
}

Bytes encode_queries(std::span<const QueryVector> queries) {
  ByteWriter w;
  w.magic(kQueryMagic);
  w.put<std::uint32_t>(kQueryFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(queries.size()));
  for (const QueryVector& q : queries) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(q.size()));
    for (const QueryTerm& t : q.terms()) {
      w.put<std::uint32_t>(t.feature);
      w.put<double>(t.weight);
    }
  }
  return w.take();
}

std::vector<QueryVector> decode_queries(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "HMQS query stream");
  r.magic(kQueryMagic);
  r.version(kQueryFormatVersion);
  const auto count = r.get<std::uint32_t>("query count");
  std::vector<QueryVector> out;
  out.reserve(std::min<std::size_t>(count, bytes.size() / 4));
  for (std::uint32_t q = 0; q < count; ++q) {
    const auto nnz = r.get<std::uint32_t>("query nnz");
    std::vector<QueryTerm> terms;
    terms.reserve(std::min<std::size_t>(nnz, bytes.size() / 12));
    for (std::uint32_t k = 0; k < nnz; ++k) {
      const auto f = r.get<std::uint32_t>("feature id");
      const auto w = r.get<double>("weight");
      terms.push_back({f, w});
    }
    const std::size_t at = r.offset();
    try {
      out.emplace_back(std::move(terms));
    } catch (const Error& e) {
      fail(ErrorCode::format, "HMQS query stream: query " + std::to_string(q) +
                                  " ending at byte offset " + std::to_string(at) + ": " + e.what());
    }
  }
  r.finish();
  return out;
}

void write_matrix_text(std::ostream& out, const BinaryInteractionMatrix& matrix) {
  out << "# hitmatch-matrix " << matrix.num_ads() << ' ' << matrix.num_features() << '\n';
  for (const Entry& e : matrix.entries()) out << e.ad << '\t' << e.feature << '\n';
}

BinaryInteractionMatrix read_matrix_text(std::istream& in) {
  constexpr const char* kFormat = "matrix text";
  std::vector<Entry> entries;
  bool have_dims = false;
  std::uint32_t n = 0, m = 0;
  std::uint64_t max_ad = 0, max_feature = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0].starts_with('#')) {
      if (tok.size() == 4 && tok[0] == "#" && tok[1] == "hitmatch-matrix") {
        n = parse_number<std::uint32_t>(tok[2], kFormat, lineno, "num_ads");
        m = parse_number<std::uint32_t>(tok[3], kFormat, lineno, "num_features");
        have_dims = true;
      }
      continue;
    }
    if (tok.size() != 2) text_error(kFormat, lineno, "expected 'ad_id<TAB>feature_id'");
    const auto ad = parse_number<AdId>(tok[0], kFormat, lineno, "ad id");
    const auto f = parse_number<FeatureId>(tok[1], kFormat, lineno, "feature id");
    max_ad = std::max<std::uint64_t>(max_ad, ad);
    max_feature = std::max<std::uint64_t>(max_feature, f);
    entries.push_back({f, ad});
  }
  if (!have_dims) {
    if (entries.empty()) return {};
    if (max_ad >= UINT32_MAX || max_feature >= UINT32_MAX) {
      fail(ErrorCode::out_of_range, "matrix text: ids too large to infer bounds");
    }
    n = static_cast<std::uint32_t>(max_ad + 1);
    m = static_cast<std::uint32_t>(max_feature + 1);
  }
  return BinaryInteractionMatrix::from_entries(n, m, entries);
}

void write_requests(std::ostream& out, std::span<const RankedRequest> requests) {
  for (const RankedRequest& r : requests) {
    out << r.size() << '\n';
    for (const RankedItem& it : r.items()) {
      out << it.ad << ' ' << format_double(it.score) << ' ' << it.true_rank << ' '
          << format_double(it.value) << '\n';
    }
  }
}

std::vector<RankedRequest> read_requests(std::istream& in) {
  constexpr const char* kFormat = "ranked requests";
  std::vector<RankedRequest> out;
  std::string line;
  std::size_t lineno = 0;
  auto next_tokens = [&](std::vector<std::string_view>& tok) {
    while (std::getline(in, line)) {
      ++lineno;
      tok = split_ws(line);
      if (!tok.empty() && !tok[0].starts_with('#')) return true;
    }
    return false;
  };
  std::vector<std::string_view> tok;
  while (next_tokens(tok)) {
    if (tok.size() != 1) text_error(kFormat, lineno, "expected a request header 'D'");
    const auto d = parse_number<std::size_t>(tok[0], kFormat, lineno, "request length");
    const std::size_t header_line = lineno;
    std::vector<RankedItem> items;
    items.reserve(std::min<std::size_t>(d, 1 << 16));
    for (std::size_t i = 0; i < d; ++i) {
      if (!next_tokens(tok)) {
        text_error(kFormat, lineno,
                   "request ended after " + std::to_string(i) + " of " + std::to_string(d) +
                       " items");
      }
      if (tok.size() != 4) text_error(kFormat, lineno, "expected 'ad_id score true_rank value'");
      items.push_back({parse_number<AdId>(tok[0], kFormat, lineno, "ad id"),
                       parse_number<double>(tok[1], kFormat, lineno, "score"),
                       parse_number<std::uint32_t>(tok[2], kFormat, lineno, "true rank"),
                       parse_number<double>(tok[3], kFormat, lineno, "value")});
    }
    try {
      out.emplace_back(std::move(items));
    } catch (const Error& e) {
      text_error(kFormat, header_line, e.what());
    }
  }
  return out;
}

void write_scores_csv_header(std::ostream& out) { out << "query,rank,ad_id,score\n"; }

void write_scores_csv(std::ostream& out, std::size_t query, std::span<const ScoredAd> ranked) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out << query << ',' << i + 1 << ',' << ranked[i].ad << ',' << format_double(ranked[i].score)
        << '\n';
  }
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    fail(ErrorCode::io, "cannot read " + path.string());
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
}

BinaryInteractionMatrix load_matrix(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMatrixMagic.data(), 4) == 0) {
    return decode_matrix(bytes);
  }
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  return read_matrix_text(in);
}

}  // namespace hitmatch
