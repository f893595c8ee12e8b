// hitmatch: generate workloads, build and query indexes, verify, benchmark,
// and check the ranking-loss gradient. Talks to the library only through the
// C API.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hitmatch/hitmatch.h"

namespace {

struct CallFailed {
  hm_status status;
  std::string what;
};

void check(hm_status status, const std::string& context) {
  if (status != HM_OK) throw CallFailed{status, context + ": " + hm_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Matrix = std::unique_ptr<hm_matrix, Deleter<hm_matrix, hm_matrix_free>>;
using Index = std::unique_ptr<hm_index, Deleter<hm_index, hm_index_free>>;
using Queries = std::unique_ptr<hm_queries, Deleter<hm_queries, hm_queries_free>>;
using Towers = std::unique_ptr<hm_towers, Deleter<hm_towers, hm_towers_free>>;
using Requests = std::unique_ptr<hm_requests, Deleter<hm_requests, hm_requests_free>>;
using Engine = std::unique_ptr<hm_engine, Deleter<hm_engine, hm_engine_free>>;

Matrix load_matrix(const std::string& path) {
  hm_matrix* m = nullptr;
  check(hm_matrix_load(path.c_str(), &m), "loading matrix " + path);
  return Matrix(m);
}

Index load_index(const std::string& path) {
  hm_index* ix = nullptr;
  check(hm_index_load(path.c_str(), &ix), "loading index " + path);
  return Index(ix);
}

Queries load_queries(const std::string& path) {
  hm_queries* q = nullptr;
  check(hm_queries_load(path.c_str(), &q), "loading queries " + path);
  return Queries(q);
}

Matrix decode(const hm_index* index) {
  hm_matrix* m = nullptr;
  check(hm_index_decode(index, &m), "decoding index");
  return Matrix(m);
}

struct Query {
  std::vector<std::uint32_t> features;
  std::vector<double> weights;
};

Query query_at(const hm_queries* queries, std::size_t i) {
  std::size_t nnz = 0;
  check(hm_queries_nnz(queries, i, &nnz), "reading query");
  Query q{std::vector<std::uint32_t>(nnz), std::vector<double>(nnz)};
  check(hm_queries_copy(queries, i, q.features.data(), q.weights.data(), nnz), "reading query");
  return q;
}

// Output stream: a file, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw CallFailed{HM_ERR_IO, "cannot open " + path + " for writing"};
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool is_stdout() const { return !file_.is_open(); }
  void close(const std::string& path) {
    if (!file_.is_open()) return;
    file_.close();
    if (!file_) throw CallFailed{HM_ERR_IO, "write failed: " + path};
  }

 private:
  std::ofstream file_;
};

std::uint32_t default_tile() {
  hm_query_options o{};
  hm_query_options_default(&o);
  return o.tile_ads;
}

// ---- gen

struct GenArgs {
  hm_workload_spec spec{};
  std::string out = "workload";
  std::size_t requests = 0;
  std::size_t depth = 20;
  std::uint32_t towers_dim = 0;
};

int cmd_gen(const GenArgs& a) {
  hm_matrix* m = nullptr;
  check(hm_generate_matrix(&a.spec, &m), "generating matrix");
  Matrix matrix(m);
  hm_queries* q = nullptr;
  check(hm_generate_queries(&a.spec, &q), "generating queries");
  Queries queries(q);

  const std::string matrix_path = a.out + ".matrix";
  const std::string queries_path = a.out + ".queries";
  check(hm_matrix_save(matrix.get(), matrix_path.c_str(), HM_MATRIX_BINARY), "writing matrix");
  check(hm_queries_save(queries.get(), queries_path.c_str()), "writing queries");
  std::cout << "matrix   " << matrix_path << "  N=" << hm_matrix_num_ads(matrix.get())
            << " M=" << hm_matrix_num_features(matrix.get())
            << " nnz=" << hm_matrix_nnz(matrix.get()) << " skew=" << a.spec.skew << '\n';
  std::cout << "queries  " << queries_path << "  count=" << hm_queries_count(queries.get())
            << " nnz/query=" << a.spec.query_nnz
            << (a.spec.integer_weights ? " weights=integer" : " weights=real") << '\n';

  if (a.towers_dim > 0) {
    hm_towers* t = nullptr;
    check(hm_generate_towers(a.spec.num_ads, a.towers_dim, a.spec.seed, &t), "generating towers");
    Towers towers(t);
    const std::string path = a.out + ".towers";
    check(hm_towers_save(towers.get(), path.c_str()), "writing towers");
    std::cout << "towers   " << path << "  dim=" << a.towers_dim << '\n';
  }
  if (a.requests > 0) {
    hm_requests* r = nullptr;
    check(hm_generate_requests(a.requests, a.depth, a.spec.seed, &r), "generating requests");
    Requests requests(r);
    const std::string path = a.out + ".requests";
    check(hm_requests_save(requests.get(), path.c_str()), "writing requests");
    std::cout << "requests " << path << "  count=" << a.requests << " depth=" << a.depth << '\n';
  }
  return 0;
}

// ---- build

struct BuildArgs {
  std::string matrix;
  std::string out;
  unsigned threads = 0;
};

int cmd_build(const BuildArgs& a) {
  Matrix matrix = load_matrix(a.matrix);
  hm_index* ix = nullptr;
  const auto t0 = std::chrono::steady_clock::now();
  check(hm_index_build(matrix.get(), a.threads, &ix), "building index");
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  Index index(ix);
  check(hm_index_save(index.get(), a.out.c_str()), "writing index");

  hm_index_stats s{};
  check(hm_index_stats_get(index.get(), &s), "index stats");
  std::cout << "index " << a.out << "  N=" << s.num_ads << " M=" << s.num_features
            << " ads=" << s.total_ads << " blocks=" << s.total_blocks
            << " bytes=" << s.storage_bytes << '\n';
  std::cout << "group  blocks      ads\n";
  for (int g = 0; g < HM_NUM_GROUPS; ++g) {
    char line[64];
    std::snprintf(line, sizeof line, "%5d %7llu %8llu\n", g,
                  static_cast<unsigned long long>(s.group_blocks[g]),
                  static_cast<unsigned long long>(s.group_ads[g]));
    std::cout << line;
  }
  std::cout << "build_ms " << ms << '\n';
  return 0;
}

// ---- query

struct QueryArgs {
  std::string index;
  std::string queries;
  std::size_t k = 10;
  std::string towers;
  std::uint64_t user_seed = 1;
  std::string out = "-";
  unsigned threads = 0;
  std::uint32_t tile = default_tile();
};

int cmd_query(const QueryArgs& a) {
  Index index = load_index(a.index);
  Queries queries = load_queries(a.queries);
  Towers towers;
  std::vector<double> user;
  if (!a.towers.empty()) {
    hm_towers* t = nullptr;
    check(hm_towers_load(a.towers.c_str(), &t), "loading towers " + a.towers);
    towers.reset(t);
    user.resize(hm_towers_dim(t));
    check(hm_generate_user(hm_towers_dim(t), a.user_seed, user.data(), user.size()),
          "generating user embedding");
  }

  const hm_query_options opts{a.threads, a.tile};
  hm_engine* e = nullptr;
  check(hm_engine_create(index.get(), &opts, &e), "creating engine");
  Engine engine(e);

  hm_index_stats s{};
  check(hm_index_stats_get(index.get(), &s), "index stats");
  std::vector<double> scores(s.num_ads);
  std::vector<std::uint32_t> ads(a.k);
  std::vector<double> best(a.k);

  Output out(a.out);
  out.stream() << "query,rank,ad_id,score\n";
  for (std::size_t i = 0; i < hm_queries_count(queries.get()); ++i) {
    const Query q = query_at(queries.get(), i);
    if (towers) {
      check(hm_fused_score(engine.get(), towers.get(), user.data(), user.size(),
                           q.features.data(), q.weights.data(), q.features.size(), scores.data(),
                           scores.size()),
            "scoring query " + std::to_string(i));
    } else {
      check(hm_engine_score(engine.get(), q.features.data(), q.weights.data(), q.features.size(),
                            scores.data(), scores.size()),
            "scoring query " + std::to_string(i));
    }
    check(hm_top_k(scores.data(), scores.size(), a.k, ads.data(), best.data()), "top-k");
    for (std::size_t r = 0; r < a.k; ++r) {
      out.stream() << i << ',' << r + 1 << ',' << ads[r] << ',' << best[r] << '\n';
    }
  }
  out.close(a.out);
  return 0;
}

// ---- verify

struct VerifyArgs {
  std::string index;
  std::string queries;
  std::string matrix;
  double rel = 1e-6;
  double abs = 1e-9;
  unsigned threads = 0;
  std::uint32_t tile = default_tile();
};

int cmd_verify(const VerifyArgs& a) {
  Index index;
  try {
    index = load_index(a.index);
  } catch (const CallFailed& e) {
    std::cout << "FAIL  " << e.what << '\n';
    return 1;
  }
  Queries queries = load_queries(a.queries);
  Matrix matrix = a.matrix.empty() ? decode(index.get()) : load_matrix(a.matrix);

  const hm_query_options opts{a.threads, a.tile};
  hm_verify_report r{};
  check(hm_verify(matrix.get(), index.get(), queries.get(), &opts, a.rel, a.abs, &r), "verify");
  std::cout << (r.passed ? "PASS" : "FAIL") << "  queries=" << r.queries
            << " mismatched=" << r.mismatched_scores << " max_abs_err=" << r.max_abs_err
            << " max_rel_err=" << r.max_rel_err << '\n';
  return r.passed ? 0 : 1;
}

// ---- bench

struct BenchArgs {
  std::string index;
  std::string matrix;
  std::string queries;
  std::vector<std::string> baselines{"csc"};
  unsigned iters = 1;
  unsigned threads = 0;
  std::uint32_t tile = default_tile();
  std::string csv = "-";
};

int cmd_bench(const BenchArgs& a) {
  Matrix matrix;
  if (!a.matrix.empty()) {
    matrix = load_matrix(a.matrix);
  } else {
    Index index = load_index(a.index);
    matrix = decode(index.get());
  }
  Queries queries = load_queries(a.queries);

  std::vector<hm_bench_method> methods{HM_BENCH_INDEXED};
  for (const std::string& name : a.baselines) {
    hm_bench_method m = HM_BENCH_INDEXED;
    if (name == "csc") m = HM_BENCH_CSC;
    else if (name == "dense") m = HM_BENCH_DENSE;
    else if (name != "indexed") throw CallFailed{HM_ERR_INVALID_ARGUMENT, "unknown baseline " + name};
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
  }

  const hm_bench_options opts{methods.data(), methods.size(), a.iters, a.threads, a.tile};
  std::vector<hm_bench_row> rows(methods.size());
  hm_bench_summary sum{};
  check(hm_bench(matrix.get(), queries.get(), &opts, rows.data(), rows.size(), &sum), "bench");

  Output csv(a.csv);
  csv.stream() << "method,preprocess_ms,qps,p50_us,p99_us\n";
  for (const hm_bench_row& r : rows) {
    csv.stream() << hm_bench_method_name(r.method) << ',' << r.preprocess_ms << ',' << r.qps << ','
                 << r.p50_us << ',' << r.p99_us << '\n';
  }
  csv.close(a.csv);

  std::ostream& report = csv.is_stdout() ? std::cerr : std::cout;
  report << "workload N=" << sum.num_ads << " M=" << sum.num_features << " nnz=" << sum.nnz
         << " queries=" << sum.query_count << " nnz/query=" << sum.mean_query_nnz
         << " threads=" << sum.workers << " iters=" << a.iters << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %13s %10s %10s %10s %10s %12s %12s\n", "method",
                "preprocess_ms", "qps", "cold_qps", "p50_us", "p99_us", "amort@1e4_us",
                "amort@1e5_us");
  report << line;
  for (const hm_bench_row& r : rows) {
    std::snprintf(line, sizeof line, "%-8s %13.2f %10.2f %10.2f %10.1f %10.1f %12.3f %12.3f\n",
                  hm_bench_method_name(r.method), r.preprocess_ms, r.qps, r.cold_qps, r.p50_us,
                  r.p99_us, r.preprocess_ms * 1000.0 / 1e4, r.preprocess_ms * 1000.0 / 1e5);
    report << line;
  }
  for (const hm_bench_row& r : rows) {
    if (r.method == HM_BENCH_INDEXED) continue;
    report << "indexed/" << hm_bench_method_name(r.method) << " speedup "
           << (r.qps > 0 ? rows[0].qps / r.qps : 0.0) << "x\n";
  }
  if (rows[0].mean_us > 0) {
    report << "indexed build overhead at 1e5 queries: "
           << 100.0 * (rows[0].preprocess_ms * 1000.0 / 1e5) / rows[0].mean_us
           << "% of mean query latency\n";
  }
  return 0;
}

// ---- losscheck

struct LossArgs {
  std::string requests;
  std::string op = "mul";
  bool no_value = false;
  double step = 1e-4;
  double tol = 1e-4;
};

int cmd_losscheck(const LossArgs& a) {
  hm_requests* r = nullptr;
  check(hm_requests_load(a.requests.c_str(), &r), "loading requests " + a.requests);
  Requests requests(r);
  const hm_loss_config cfg{a.op == "add" ? HM_COMBINE_ADD : HM_COMBINE_MULTIPLY,
                           a.no_value ? 0 : 1};

  const std::size_t count = hm_requests_count(r);
  double total_loss = 0.0;
  double total_ndcg = 0.0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    double loss = 0.0;
    double nd = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    check(hm_lambdarank_loss(r, i, &cfg, &loss, nullptr, 0), "loss");
    check(hm_ndcg(r, i, &nd), "ndcg");
    check(hm_gradient_check(r, i, &cfg, a.step, &abs_err, &rel_err), "gradient check");
    total_loss += loss;
    total_ndcg += nd;
    max_abs = std::max(max_abs, abs_err);
    max_rel = std::max(max_rel, rel_err);
  }
  const bool ok = max_rel <= a.tol;
  std::cout << (ok ? "PASS" : "FAIL") << "  requests=" << count << " op=" << a.op
            << " value=" << (a.no_value ? "off" : "on") << " loss=" << total_loss
            << " mean_ndcg=" << (count ? total_ndcg / static_cast<double>(count) : 0.0)
            << " max_grad_abs_err=" << max_abs << " max_grad_rel_err=" << max_rel << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hitmatch: compressed inverted index scoring for explicit ad/feature interactions"};
  app.require_subcommand(1);

  GenArgs gen;
  hm_workload_spec_default(&gen.spec);
  bool int_weights = false;
  auto* g = app.add_subcommand("gen", "Generate a synthetic matrix and query stream");
  g->add_option("--ads", gen.spec.num_ads, "Number of ads N")->required();
  g->add_option("--features", gen.spec.num_features, "Number of cross features M")->required();
  g->add_option("--nnz", gen.spec.nnz, "Matrix nonzeros")->required();
  g->add_option("--queries", gen.spec.query_count, "Number of queries")->required();
  g->add_option("--qnnz", gen.spec.query_nnz, "Nonzeros per query")->required();
  g->add_option("--seed", gen.spec.seed, "RNG seed")->required();
  g->add_option("--skew", gen.spec.skew, "Zipf exponent of feature popularity")->capture_default_str();
  g->add_flag("--int-weights", int_weights, "Integer query weights in 1..16");
  g->add_option("--out", gen.out, "Output path prefix")->capture_default_str();
  g->add_option("--towers", gen.towers_dim, "Also write an ad tower table of this width");
  g->add_option("--requests", gen.requests, "Also write this many ranked requests");
  g->add_option("--depth", gen.depth, "Ads per ranked request")->capture_default_str();

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build an index snapshot from a matrix");
  b->add_option("--matrix", build.matrix, "Matrix file (text or binary)")->required();
  b->add_option("--out", build.out, "Index snapshot path")->required();
  b->add_option("--threads", build.threads, "Worker threads, 0 = all cores")->capture_default_str();

  QueryArgs query;
  auto* q = app.add_subcommand("query", "Score queries and write the top-k ads as CSV");
  q->add_option("--index", query.index, "Index snapshot")->required();
  q->add_option("--queries", query.queries, "Query file")->required();
  q->add_option("--k", query.k, "Ads per query")->capture_default_str()->check(CLI::PositiveNumber);
  q->add_option("--towers", query.towers, "Ad tower table; adds the tower score");
  q->add_option("--user-seed", query.user_seed, "Seed of the synthetic user embedding")
      ->capture_default_str();
  q->add_option("--out", query.out, "CSV path, - for stdout")->capture_default_str();
  q->add_option("--threads", query.threads, "Worker threads, 0 = all cores")->capture_default_str();
  q->add_option("--tile", query.tile, "Ads per scoring tile")->capture_default_str();

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Compare index scores with the reference scorer");
  v->add_option("--index", verify.index, "Index snapshot")->required();
  v->add_option("--queries", verify.queries, "Query file")->required();
  v->add_option("--matrix", verify.matrix, "Source matrix; default decodes the index");
  v->add_option("--rel", verify.rel, "Relative tolerance")->capture_default_str();
  v->add_option("--abs", verify.abs, "Absolute tolerance")->capture_default_str();
  v->add_option("--threads", verify.threads, "Worker threads, 0 = all cores")->capture_default_str();
  v->add_option("--tile", verify.tile, "Ads per scoring tile")->capture_default_str();

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Time preprocessing and query throughput");
  auto* bench_src = be->add_option_group("source");
  bench_src->add_option("--index", bench.index, "Index snapshot");
  bench_src->add_option("--matrix", bench.matrix, "Matrix file");
  bench_src->require_option(1);
  be->add_option("--queries", bench.queries, "Query file")->required();
  be->add_option("--baseline", bench.baselines, "Methods besides indexed: csc, dense")
      ->delimiter(',')
      ->check(CLI::IsMember({"csc", "dense", "indexed"}));
  be->add_option("--iters", bench.iters, "Timed passes")->capture_default_str()->check(CLI::PositiveNumber);
  be->add_option("--threads", bench.threads, "Worker threads, 0 = all cores")->capture_default_str();
  be->add_option("--tile", bench.tile, "Ads per scoring tile")->capture_default_str();
  be->add_option("--csv", bench.csv, "CSV path, - for stdout")->capture_default_str();

  LossArgs loss;
  auto* l = app.add_subcommand("losscheck", "Check the ranking-loss gradient numerically");
  l->add_option("--requests", loss.requests, "Ranked request file")->required();
  l->add_option("--op", loss.op, "Combine |dNDCG| and |dValue| by mul or add")->capture_default_str()
      ->check(CLI::IsMember({"mul", "add"}));
  l->add_flag("--no-value", loss.no_value, "Weight pairs by |dNDCG| only");
  l->add_option("--step", loss.step, "Finite-difference step")->capture_default_str();
  l->add_option("--tol", loss.tol, "Max relative gradient error")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  gen.spec.integer_weights = int_weights ? 1 : 0;

  try {
    if (*g) return cmd_gen(gen);
    if (*b) return cmd_build(build);
    if (*q) return cmd_query(query);
    if (*v) return cmd_verify(verify);
    if (*be) return cmd_bench(bench);
    if (*l) return cmd_losscheck(loss);
  } catch (const CallFailed& e) {
    std::cerr << "error (" << hm_status_name(e.status) << "): " << e.what << '\n';
    return 1;
  }
  return 1;
}
