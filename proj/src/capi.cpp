#include "hitmatch/hitmatch.h"

#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "hitmatch/bench.hpp"
#include "hitmatch/fusion.hpp"
#include "hitmatch/index.hpp"
#include "hitmatch/io.hpp"
#include "hitmatch/oracle.hpp"
#include "hitmatch/query.hpp"
#include "hitmatch/rank_loss.hpp"
#include "hitmatch/verify.hpp"
#include "hitmatch/workload.hpp"

struct hm_matrix {
  hitmatch::BinaryInteractionMatrix value;
};
struct hm_index {
  hitmatch::GroupedIndex value;
};
struct hm_queries {
  std::vector<hitmatch::QueryVector> value;
};
struct hm_towers {
  hitmatch::AdTowerTable value;
};
struct hm_requests {
  std::vector<hitmatch::RankedRequest> value;
};
struct hm_engine {
  hitmatch::QueryEngine value;
};

namespace {

using hitmatch::Error;
using hitmatch::ErrorCode;
using hitmatch::fail;

thread_local std::string last_error;

hm_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return HM_ERR_INVALID_ARGUMENT;
    case ErrorCode::out_of_range: return HM_ERR_OUT_OF_RANGE;
    case ErrorCode::dimension_mismatch: return HM_ERR_DIMENSION_MISMATCH;
    case ErrorCode::contract_violation: return HM_ERR_CONTRACT_VIOLATION;
    case ErrorCode::io: return HM_ERR_IO;
    case ErrorCode::format: return HM_ERR_FORMAT;
    case ErrorCode::corrupt_index: return HM_ERR_CORRUPT_INDEX;
  }
  return HM_ERR_INTERNAL;
}

template <class Fn>
hm_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return HM_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HM_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HM_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return HM_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) fail(ErrorCode::invalid_argument, std::string(name) + " is null");
}

template <class Handle, class Value>
void emit(Handle** out, Value&& value) {
  *out = new Handle{std::forward<Value>(value)};
}

hitmatch::WorkloadSpec to_spec(const hm_workload_spec& s) {
  hitmatch::WorkloadSpec spec;
  spec.num_ads = s.num_ads;
  spec.num_features = s.num_features;
  spec.nnz = s.nnz;
  spec.skew = s.skew;
  spec.query_count = s.query_count;
  spec.query_nnz = s.query_nnz;
  spec.weights = s.integer_weights ? hitmatch::WeightKind::integer : hitmatch::WeightKind::real;
  spec.seed = s.seed;
  return spec;
}

hitmatch::QueryOptions to_options(const hm_query_options* o) {
  hitmatch::QueryOptions options;
  if (o != nullptr) {
    options.workers = o->workers;
    options.tile_ads = o->tile_ads;
  }
  return options;
}

hitmatch::QueryVector make_query(const std::uint32_t* features, const double* weights,
                                 std::size_t nnz) {
  if (nnz > 0) {
    require(features, "features");
    require(weights, "weights");
  }
  std::vector<hitmatch::QueryTerm> terms(nnz);
  for (std::size_t i = 0; i < nnz; ++i) terms[i] = {features[i], weights[i]};
  return hitmatch::QueryVector(std::move(terms));
}

std::span<double> score_buffer(double* scores, std::size_t num_scores, std::uint32_t num_ads) {
  if (num_scores != num_ads) {
    fail(ErrorCode::dimension_mismatch, "score buffer has " + std::to_string(num_scores) +
                                            " slots, expected " + std::to_string(num_ads));
  }
  if (num_scores > 0) require(scores, "scores");
  return {scores, num_scores};
}

const hitmatch::RankedRequest& request_at(const hm_requests* r, std::size_t i) {
  require(r, "requests");
  if (i >= r->value.size()) {
    fail(ErrorCode::out_of_range, "request " + std::to_string(i) + " of " +
                                      std::to_string(r->value.size()));
  }
  return r->value[i];
}

hitmatch::LossConfig to_loss_config(const hm_loss_config* c) {
  hitmatch::LossConfig config;
  if (c != nullptr) {
    if (c->combine != HM_COMBINE_MULTIPLY && c->combine != HM_COMBINE_ADD) {
      fail(ErrorCode::invalid_argument, "unknown combine op");
    }
    config.combine = c->combine == HM_COMBINE_ADD ? hitmatch::CombineOp::add
                                                  : hitmatch::CombineOp::multiply;
    config.use_value = c->use_value != 0;
  }
  return config;
}

}  // namespace

extern "C" {

const char* hm_version(void) { return "0.1.0"; }

const char* hm_status_name(hm_status status) {
  switch (status) {
    case HM_OK: return "ok";
    case HM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HM_ERR_OUT_OF_RANGE: return "out_of_range";
    case HM_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case HM_ERR_CONTRACT_VIOLATION: return "contract_violation";
    case HM_ERR_IO: return "io";
    case HM_ERR_FORMAT: return "format";
    case HM_ERR_CORRUPT_INDEX: return "corrupt_index";
    case HM_ERR_OUT_OF_MEMORY: return "out_of_memory";
    case HM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hm_last_error(void) { return last_error.c_str(); }

// ---- matrix

hm_status hm_matrix_create(uint32_t num_ads, uint32_t num_features, const uint32_t* features,
                           const uint32_t* ads, size_t count, hm_matrix** out) {
  return guarded([&] {
    require(out, "out");
    if (count > 0) {
      require(features, "features");
      require(ads, "ads");
    }
    std::vector<hitmatch::Entry> pairs(count);
    for (std::size_t i = 0; i < count; ++i) pairs[i] = {features[i], ads[i]};
    emit(out, hitmatch::BinaryInteractionMatrix::from_entries(num_ads, num_features, pairs));
  });
}

hm_status hm_matrix_load(const char* path, hm_matrix** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit(out, hitmatch::load_matrix(path));
  });
}

hm_status hm_matrix_save(const hm_matrix* matrix, const char* path, hm_matrix_format format) {
  return guarded([&] {
    require(matrix, "matrix");
    require(path, "path");
    if (format == HM_MATRIX_BINARY) {
      hitmatch::write_file(path, hitmatch::encode_matrix(matrix->value));
    } else if (format == HM_MATRIX_TEXT) {
      std::ofstream f(path);
      if (!f) fail(ErrorCode::io, std::string("cannot open ") + path + " for writing");
      hitmatch::write_matrix_text(f, matrix->value);
      f.flush();
      if (!f) fail(ErrorCode::io, std::string("write failed: ") + path);
    } else {
      fail(ErrorCode::invalid_argument, "unknown matrix format");
    }
  });
}

void hm_matrix_free(hm_matrix* matrix) { delete matrix; }

uint32_t hm_matrix_num_ads(const hm_matrix* matrix) { return matrix ? matrix->value.num_ads() : 0; }

uint32_t hm_matrix_num_features(const hm_matrix* matrix) {
  return matrix ? matrix->value.num_features() : 0;
}

uint64_t hm_matrix_nnz(const hm_matrix* matrix) { return matrix ? matrix->value.nnz() : 0; }

hm_status hm_matrix_entries(const hm_matrix* matrix, uint32_t* features, uint32_t* ads,
                            size_t capacity) {
  return guarded([&] {
    require(matrix, "matrix");
    const auto entries = matrix->value.entries();
    if (capacity < entries.size()) {
      fail(ErrorCode::dimension_mismatch, "capacity " + std::to_string(capacity) + " < nnz " +
                                              std::to_string(entries.size()));
    }
    if (!entries.empty()) {
      require(features, "features");
      require(ads, "ads");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      features[i] = entries[i].feature;
      ads[i] = entries[i].ad;
    }
  });
}

// ---- queries

hm_status hm_queries_create(hm_queries** out) {
  return guarded([&] {
    require(out, "out");
    *out = new hm_queries{};
  });
}

hm_status hm_queries_append(hm_queries* queries, const uint32_t* features, const double* weights,
                            size_t nnz) {
  return guarded([&] {
    require(queries, "queries");
    queries->value.push_back(make_query(features, weights, nnz));
  });
}

hm_status hm_queries_load(const char* path, hm_queries** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit(out, hitmatch::decode_queries(hitmatch::read_file(path)));
  });
}

hm_status hm_queries_save(const hm_queries* queries, const char* path) {
  return guarded([&] {
    require(queries, "queries");
    require(path, "path");
    hitmatch::write_file(path, hitmatch::encode_queries(queries->value));
  });
}

void hm_queries_free(hm_queries* queries) { delete queries; }

size_t hm_queries_count(const hm_queries* queries) { return queries ? queries->value.size() : 0; }

hm_status hm_queries_nnz(const hm_queries* queries, size_t i, size_t* nnz) {
  return guarded([&] {
    require(queries, "queries");
    require(nnz, "nnz");
    if (i >= queries->value.size()) fail(ErrorCode::out_of_range, "query index out of range");
    *nnz = queries->value[i].size();
  });
}

hm_status hm_queries_copy(const hm_queries* queries, size_t i, uint32_t* features,
                          double* weights, size_t capacity) {
  return guarded([&] {
    require(queries, "queries");
    if (i >= queries->value.size()) fail(ErrorCode::out_of_range, "query index out of range");
    const auto terms = queries->value[i].terms();
    if (capacity < terms.size()) fail(ErrorCode::dimension_mismatch, "capacity below query nnz");
    if (!terms.empty()) {
      require(features, "features");
      require(weights, "weights");
    }
    for (std::size_t t = 0; t < terms.size(); ++t) {
      features[t] = terms[t].feature;
      weights[t] = terms[t].weight;
    }
  });
}

// ---- workloads

void hm_workload_spec_default(hm_workload_spec* spec) {
  if (spec == nullptr) return;
  const hitmatch::WorkloadSpec d;
  spec->num_ads = d.num_ads;
  spec->num_features = d.num_features;
  spec->nnz = d.nnz;
  spec->skew = d.skew;
  spec->query_count = d.query_count;
  spec->query_nnz = d.query_nnz;
  spec->integer_weights = d.weights == hitmatch::WeightKind::integer;
  spec->seed = d.seed;
}

hm_status hm_generate_matrix(const hm_workload_spec* spec, hm_matrix** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    emit(out, hitmatch::generate_matrix(to_spec(*spec)));
  });
}

hm_status hm_generate_queries(const hm_workload_spec* spec, hm_queries** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    emit(out, hitmatch::generate_queries(to_spec(*spec)));
  });
}

hm_status hm_generate_towers(uint32_t num_ads, uint32_t dim, uint64_t seed, hm_towers** out) {
  return guarded([&] {
    require(out, "out");
    emit(out, hitmatch::generate_tower_table(num_ads, dim, seed));
  });
}

hm_status hm_generate_user(uint32_t dim, uint64_t seed, double* out, size_t capacity) {
  return guarded([&] {
    if (capacity < dim) fail(ErrorCode::dimension_mismatch, "capacity below dim");
    if (dim > 0) require(out, "out");
    const hitmatch::Embedding user = hitmatch::generate_user_embedding(dim, seed);
    for (std::size_t i = 0; i < user.size(); ++i) out[i] = user[i];
  });
}

hm_status hm_generate_requests(size_t count, size_t depth, uint64_t seed, hm_requests** out) {
  return guarded([&] {
    require(out, "out");
    emit(out, hitmatch::generate_requests(count, depth, seed));
  });
}

// ---- index

hm_status hm_index_build(const hm_matrix* matrix, unsigned workers, hm_index** out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "out");
    emit(out, hitmatch::build_index(matrix->value, workers));
  });
}

hm_status hm_index_load(const char* path, hm_index** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit(out, hitmatch::decode_index_snapshot(hitmatch::read_file(path)));
  });
}

hm_status hm_index_save(const hm_index* index, const char* path) {
  return guarded([&] {
    require(index, "index");
    require(path, "path");
    hitmatch::write_file(path, hitmatch::encode_index(index->value));
  });
}

hm_status hm_index_decode(const hm_index* index, hm_matrix** out) {
  return guarded([&] {
    require(index, "index");
    require(out, "out");
    emit(out, hitmatch::decode_index(index->value));
  });
}

void hm_index_free(hm_index* index) { delete index; }

hm_status hm_index_stats_get(const hm_index* index, hm_index_stats* out) {
  return guarded([&] {
    require(index, "index");
    require(out, "out");
    const hitmatch::IndexStats s = hitmatch::index_stats(index->value);
    *out = hm_index_stats{};
    out->num_ads = index->value.num_ads();
    out->num_features = index->value.num_features();
    for (std::size_t g = 0; g < hitmatch::kNumGroups; ++g) {
      out->group_blocks[g] = s.groups[g].blocks;
      out->group_ads[g] = s.groups[g].ads;
      out->group_value_bytes[g] = s.groups[g].value_bytes;
    }
    out->total_blocks = s.total_blocks;
    out->total_ads = s.total_ads;
    out->storage_bytes = s.storage_bytes;
  });
}

// ---- scoring

void hm_query_options_default(hm_query_options* options) {
  if (options == nullptr) return;
  const hitmatch::QueryOptions d;
  options->workers = d.workers;
  options->tile_ads = d.tile_ads;
}

hm_status hm_engine_create(const hm_index* index, const hm_query_options* options,
                           hm_engine** out) {
  return guarded([&] {
    require(index, "index");
    require(out, "out");
    *out = new hm_engine{hitmatch::QueryEngine(index->value, to_options(options))};
  });
}

void hm_engine_free(hm_engine* engine) { delete engine; }

unsigned hm_engine_workers(const hm_engine* engine) { return engine ? engine->value.workers() : 0; }

hm_status hm_engine_score(hm_engine* engine, const uint32_t* features, const double* weights,
                          size_t nnz, double* scores, size_t num_scores) {
  return guarded([&] {
    require(engine, "engine");
    const hitmatch::QueryVector q = make_query(features, weights, nnz);
    engine->value.score_into(q, score_buffer(scores, num_scores, engine->value.index().num_ads()));
  });
}

hm_status hm_oracle_score(const hm_matrix* matrix, const uint32_t* features,
                          const double* weights, size_t nnz, double* scores, size_t num_scores) {
  return guarded([&] {
    require(matrix, "matrix");
    const hitmatch::QueryVector q = make_query(features, weights, nnz);
    auto out = score_buffer(scores, num_scores, matrix->value.num_ads());
    const hitmatch::ScoreVector s = hitmatch::oracle_scores(matrix->value, q);
    std::copy(s.values().begin(), s.values().end(), out.begin());
  });
}

hm_status hm_fused_score(hm_engine* engine, const hm_towers* towers, const double* user,
                         size_t user_dim, const uint32_t* features, const double* weights,
                         size_t nnz, double* scores, size_t num_scores) {
  return guarded([&] {
    require(engine, "engine");
    require(towers, "towers");
    if (user_dim > 0) require(user, "user");
    const hitmatch::QueryVector q = make_query(features, weights, nnz);
    auto out = score_buffer(scores, num_scores, engine->value.index().num_ads());
    const hitmatch::Embedding u(std::vector<double>(user, user + user_dim));
    const hitmatch::ScoreVector s = hitmatch::fused_scores(towers->value, u, engine->value, q);
    std::copy(s.values().begin(), s.values().end(), out.begin());
  });
}

hm_status hm_top_k(const double* scores, size_t num_scores, size_t k, uint32_t* ads,
                   double* top_scores) {
  return guarded([&] {
    if (num_scores > 0) require(scores, "scores");
    const auto best = hitmatch::top_k({scores, num_scores}, k);
    require(ads, "ads");
    for (std::size_t i = 0; i < best.size(); ++i) {
      ads[i] = best[i].ad;
      if (top_scores != nullptr) top_scores[i] = best[i].score;
    }
  });
}

// ---- towers

hm_status hm_towers_create(uint32_t num_ads, uint32_t dim, const float* values, hm_towers** out) {
  return guarded([&] {
    require(out, "out");
    const std::size_t n = std::size_t{num_ads} * dim;
    if (n > 0) require(values, "values");
    emit(out, hitmatch::AdTowerTable(num_ads, dim, std::vector<float>(values, values + n)));
  });
}

hm_status hm_towers_load(const char* path, hm_towers** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit(out, hitmatch::decode_towers(hitmatch::read_file(path)));
  });
}

hm_status hm_towers_save(const hm_towers* towers, const char* path) {
  return guarded([&] {
    require(towers, "towers");
    require(path, "path");
    hitmatch::write_file(path, hitmatch::encode_towers(towers->value));
  });
}

void hm_towers_free(hm_towers* towers) { delete towers; }

uint32_t hm_towers_num_ads(const hm_towers* towers) { return towers ? towers->value.num_ads() : 0; }

uint32_t hm_towers_dim(const hm_towers* towers) { return towers ? towers->value.dim() : 0; }

// ---- verify

hm_status hm_verify(const hm_matrix* matrix, const hm_index* index, const hm_queries* queries,
                    const hm_query_options* options, double rel_tol, double abs_tol,
                    hm_verify_report* out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(index, "index");
    require(queries, "queries");
    require(out, "out");
    if (!(rel_tol >= 0.0) || !(abs_tol >= 0.0)) {
      fail(ErrorCode::invalid_argument, "tolerances must be non-negative");
    }
    const hitmatch::VerifyReport r = hitmatch::verify_index(
        matrix->value, index->value, queries->value, to_options(options), {rel_tol, abs_tol});
    out->queries = r.queries;
    out->mismatched_scores = r.mismatched_scores;
    out->max_abs_err = r.max_abs_err;
    out->max_rel_err = r.max_rel_err;
    out->passed = r.passed() ? 1 : 0;
  });
}

// ---- bench

const char* hm_bench_method_name(hm_bench_method method) {
  switch (method) {
    case HM_BENCH_INDEXED: return "indexed";
    case HM_BENCH_CSC: return "csc";
    case HM_BENCH_DENSE: return "dense";
  }
  return "unknown";
}

hm_status hm_bench(const hm_matrix* matrix, const hm_queries* queries,
                   const hm_bench_options* options, hm_bench_row* rows, size_t row_capacity,
                   hm_bench_summary* summary) {
  return guarded([&] {
    require(matrix, "matrix");
    require(queries, "queries");
    require(options, "options");
    if (options->method_count > 0) require(options->methods, "methods");
    if (row_capacity < options->method_count) {
      fail(ErrorCode::dimension_mismatch, "row capacity below method count");
    }
    if (options->method_count > 0) require(rows, "rows");

    hitmatch::BenchOptions bo;
    bo.methods.clear();
    for (std::size_t i = 0; i < options->method_count; ++i) {
      switch (options->methods[i]) {
        case HM_BENCH_INDEXED: bo.methods.push_back(hitmatch::BenchMethod::indexed); break;
        case HM_BENCH_CSC: bo.methods.push_back(hitmatch::BenchMethod::csc); break;
        case HM_BENCH_DENSE: bo.methods.push_back(hitmatch::BenchMethod::dense); break;
        default: fail(ErrorCode::invalid_argument, "unknown bench method");
      }
    }
    bo.iters = options->iters;
    bo.workers = options->workers;
    bo.tile_ads = options->tile_ads;

    const hitmatch::BenchReport report = hitmatch::run_bench(matrix->value, queries->value, bo);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      const hitmatch::BenchRow& r = report.rows[i];
      rows[i] = hm_bench_row{options->methods[i], r.preprocess_ms, r.qps, r.cold_qps,
                             r.p50_us, r.p99_us, r.mean_us, r.timed_queries};
    }
    if (summary != nullptr) {
      *summary = hm_bench_summary{report.num_ads, report.num_features, report.nnz,
                                  report.query_count, report.mean_query_nnz, report.workers};
    }
  });
}

// ---- ranking loss

hm_status hm_requests_load(const char* path, hm_requests** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream f(path);
    if (!f) fail(ErrorCode::io, std::string("cannot open ") + path);
    emit(out, hitmatch::read_requests(f));
  });
}

hm_status hm_requests_save(const hm_requests* requests, const char* path) {
  return guarded([&] {
    require(requests, "requests");
    require(path, "path");
    std::ofstream f(path);
    if (!f) fail(ErrorCode::io, std::string("cannot open ") + path + " for writing");
    hitmatch::write_requests(f, requests->value);
    f.flush();
    if (!f) fail(ErrorCode::io, std::string("write failed: ") + path);
  });
}

void hm_requests_free(hm_requests* requests) { delete requests; }

size_t hm_requests_count(const hm_requests* requests) {
  return requests ? requests->value.size() : 0;
}

hm_status hm_requests_depth(const hm_requests* requests, size_t i, size_t* depth) {
  return guarded([&] {
    require(depth, "depth");
    *depth = request_at(requests, i).size();
  });
}

hm_status hm_ndcg(const hm_requests* requests, size_t i, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = hitmatch::ndcg(request_at(requests, i));
  });
}

hm_status hm_lambdarank_loss(const hm_requests* requests, size_t i, const hm_loss_config* config,
                             double* loss, double* grad, size_t grad_capacity) {
  return guarded([&] {
    const hitmatch::RankedRequest& req = request_at(requests, i);
    require(loss, "loss");
    if (grad != nullptr && grad_capacity < req.size()) {
      fail(ErrorCode::dimension_mismatch, "gradient capacity below request depth");
    }
    const hitmatch::LossResult r = hitmatch::lambdarank_loss(req, to_loss_config(config));
    *loss = r.loss;
    if (grad != nullptr) std::copy(r.grad.begin(), r.grad.end(), grad);
  });
}

hm_status hm_gradient_check(const hm_requests* requests, size_t i, const hm_loss_config* config,
                            double step, double* max_abs_err, double* max_rel_err) {
  return guarded([&] {
    const hitmatch::RankedRequest& req = request_at(requests, i);
    if (!(step > 0.0) || !std::isfinite(step)) {
      fail(ErrorCode::invalid_argument, "step must be positive and finite");
    }
    const hitmatch::GradientCheck c = hitmatch::check_gradient(req, to_loss_config(config), step);
    if (max_abs_err != nullptr) *max_abs_err = c.max_abs_err;
    if (max_rel_err != nullptr) *max_rel_err = c.max_rel_err;
  });
}

}  // extern "C"
