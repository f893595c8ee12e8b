/*
 * hitmatch C API.
 *
 * Objects are opaque handles created by hm_*_create / hm_*_load /
 * hm_generate_* and released with the matching hm_*_free (which accepts
 * NULL). Every fallible call returns an hm_status; on failure the output
 * handle is left untouched and hm_last_error() describes what went wrong on
 * the calling thread.
 *
 * Handles are immutable after construction, except hm_queries (append) and
 * hm_engine (owns scratch state). Immutable handles may be shared across
 * threads; an engine serves one query at a time.
 */
#ifndef HITMATCH_H_
#define HITMATCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HITMATCH_BUILDING)
#    define HM_API __declspec(dllexport)
#  else
#    define HM_API __declspec(dllimport)
#  endif
#else
#  define HM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define HM_NUM_GROUPS 9

typedef enum hm_status {
  HM_OK = 0,
  HM_ERR_INVALID_ARGUMENT = 1,
  HM_ERR_OUT_OF_RANGE = 2,
  HM_ERR_DIMENSION_MISMATCH = 3,
  HM_ERR_CONTRACT_VIOLATION = 4,
  HM_ERR_IO = 5,
  HM_ERR_FORMAT = 6,
  HM_ERR_CORRUPT_INDEX = 7,
  HM_ERR_OUT_OF_MEMORY = 8,
  HM_ERR_INTERNAL = 9
} hm_status;

typedef struct hm_matrix hm_matrix;
typedef struct hm_index hm_index;
typedef struct hm_queries hm_queries;
typedef struct hm_towers hm_towers;
typedef struct hm_requests hm_requests;
typedef struct hm_engine hm_engine;

HM_API const char* hm_version(void);
HM_API const char* hm_status_name(hm_status status);
/* Message for the most recent failure on this thread; "" if none. */
HM_API const char* hm_last_error(void);

/* ---- interaction matrix ------------------------------------------------ */

typedef enum hm_matrix_format { HM_MATRIX_TEXT = 0, HM_MATRIX_BINARY = 1 } hm_matrix_format;

/* Pairs (features[i], ads[i]); duplicates are dropped, out-of-range ids fail. */
HM_API hm_status hm_matrix_create(uint32_t num_ads, uint32_t num_features,
                                  const uint32_t* features, const uint32_t* ads, size_t count,
                                  hm_matrix** out);
/* Text ("ad_id<TAB>feature_id" lines) or HMLM binary, detected by content. */
HM_API hm_status hm_matrix_load(const char* path, hm_matrix** out);
HM_API hm_status hm_matrix_save(const hm_matrix* matrix, const char* path, hm_matrix_format format);
HM_API void hm_matrix_free(hm_matrix* matrix);
HM_API uint32_t hm_matrix_num_ads(const hm_matrix* matrix);
HM_API uint32_t hm_matrix_num_features(const hm_matrix* matrix);
HM_API uint64_t hm_matrix_nnz(const hm_matrix* matrix);
/* Copies entries in (feature, ad) order; capacity must be >= nnz. */
HM_API hm_status hm_matrix_entries(const hm_matrix* matrix, uint32_t* features, uint32_t* ads,
                                   size_t capacity);

/* ---- query streams ------------------------------------------------------ */

HM_API hm_status hm_queries_create(hm_queries** out);
/* Feature ids must be strictly increasing and weights finite. */
HM_API hm_status hm_queries_append(hm_queries* queries, const uint32_t* features,
                                   const double* weights, size_t nnz);
HM_API hm_status hm_queries_load(const char* path, hm_queries** out);
HM_API hm_status hm_queries_save(const hm_queries* queries, const char* path);
HM_API void hm_queries_free(hm_queries* queries);
HM_API size_t hm_queries_count(const hm_queries* queries);
HM_API hm_status hm_queries_nnz(const hm_queries* queries, size_t i, size_t* nnz);
HM_API hm_status hm_queries_copy(const hm_queries* queries, size_t i, uint32_t* features,
                                 double* weights, size_t capacity);

/* ---- synthetic workloads ------------------------------------------------ */

typedef struct hm_workload_spec {
  uint32_t num_ads;
  uint32_t num_features;
  uint64_t nnz;
  double skew; /* Zipf exponent of feature popularity */
  uint32_t query_count;
  uint32_t query_nnz;
  int integer_weights; /* nonzero: weights in {1..16}; else U[-1, 1) */
  uint64_t seed;
} hm_workload_spec;

HM_API void hm_workload_spec_default(hm_workload_spec* spec);
HM_API hm_status hm_generate_matrix(const hm_workload_spec* spec, hm_matrix** out);
HM_API hm_status hm_generate_queries(const hm_workload_spec* spec, hm_queries** out);
HM_API hm_status hm_generate_towers(uint32_t num_ads, uint32_t dim, uint64_t seed, hm_towers** out);
HM_API hm_status hm_generate_user(uint32_t dim, uint64_t seed, double* out, size_t capacity);
HM_API hm_status hm_generate_requests(size_t count, size_t depth, uint64_t seed,
                                      hm_requests** out);

/* ---- inverted index ----------------------------------------------------- */

/* workers == 0 uses available parallelism. */
HM_API hm_status hm_index_build(const hm_matrix* matrix, unsigned workers, hm_index** out);
HM_API hm_status hm_index_load(const char* path, hm_index** out);
HM_API hm_status hm_index_save(const hm_index* index, const char* path);
HM_API hm_status hm_index_decode(const hm_index* index, hm_matrix** out);
HM_API void hm_index_free(hm_index* index);

typedef struct hm_index_stats {
  uint32_t num_ads;
  uint32_t num_features;
  uint64_t group_blocks[HM_NUM_GROUPS];
  uint64_t group_ads[HM_NUM_GROUPS];
  uint64_t group_value_bytes[HM_NUM_GROUPS];
  uint64_t total_blocks;
  uint64_t total_ads;
  uint64_t storage_bytes;
} hm_index_stats;

HM_API hm_status hm_index_stats_get(const hm_index* index, hm_index_stats* out);

/* ---- scoring ------------------------------------------------------------ */

typedef struct hm_query_options {
  unsigned workers;  /* 0: available parallelism */
  uint32_t tile_ads; /* multiple of 256 */
} hm_query_options;

HM_API void hm_query_options_default(hm_query_options* options);

/* The index must outlive the engine. options may be NULL. */
HM_API hm_status hm_engine_create(const hm_index* index, const hm_query_options* options,
                                  hm_engine** out);
HM_API void hm_engine_free(hm_engine* engine);
HM_API unsigned hm_engine_workers(const hm_engine* engine);

/* HitMatch scores for one sparse query into scores[0..num_scores), num_scores == N. */
HM_API hm_status hm_engine_score(hm_engine* engine, const uint32_t* features,
                                 const double* weights, size_t nnz, double* scores,
                                 size_t num_scores);
/* Same sum computed by the column-gather reference. */
HM_API hm_status hm_oracle_score(const hm_matrix* matrix, const uint32_t* features,
                                 const double* weights, size_t nnz, double* scores,
                                 size_t num_scores);
/* Tower inner product with user[0..user_dim) plus the HitMatch term. */
HM_API hm_status hm_fused_score(hm_engine* engine, const hm_towers* towers, const double* user,
                                size_t user_dim, const uint32_t* features, const double* weights,
                                size_t nnz, double* scores, size_t num_scores);
/* k best scores, descending, ties by ascending ad id; 1 <= k <= num_scores. */
HM_API hm_status hm_top_k(const double* scores, size_t num_scores, size_t k, uint32_t* ads,
                          double* top_scores);

/* ---- ad tower tables (HMAT) --------------------------------------------- */

HM_API hm_status hm_towers_create(uint32_t num_ads, uint32_t dim, const float* values,
                                  hm_towers** out);
HM_API hm_status hm_towers_load(const char* path, hm_towers** out);
HM_API hm_status hm_towers_save(const hm_towers* towers, const char* path);
HM_API void hm_towers_free(hm_towers* towers);
HM_API uint32_t hm_towers_num_ads(const hm_towers* towers);
HM_API uint32_t hm_towers_dim(const hm_towers* towers);

/* ---- verification ------------------------------------------------------- */

typedef struct hm_verify_report {
  uint64_t queries;
  uint64_t mismatched_scores;
  double max_abs_err;
  double max_rel_err;
  int passed;
} hm_verify_report;

/* Compares engine scores with the reference on every query:
 * |actual - expected| <= max(rel_tol * |expected|, abs_tol). */
HM_API hm_status hm_verify(const hm_matrix* matrix, const hm_index* index,
                           const hm_queries* queries, const hm_query_options* options,
                           double rel_tol, double abs_tol, hm_verify_report* out);

/* ---- benchmark ---------------------------------------------------------- */

typedef enum hm_bench_method {
  HM_BENCH_INDEXED = 0,
  HM_BENCH_CSC = 1,
  HM_BENCH_DENSE = 2
} hm_bench_method;

typedef struct hm_bench_options {
  const hm_bench_method* methods;
  size_t method_count;
  unsigned iters;
  unsigned workers;
  uint32_t tile_ads;
} hm_bench_options;

typedef struct hm_bench_row {
  hm_bench_method method;
  double preprocess_ms;
  double qps;
  double cold_qps;
  double p50_us;
  double p99_us;
  double mean_us;
  uint64_t timed_queries;
} hm_bench_row;

typedef struct hm_bench_summary {
  uint32_t num_ads;
  uint32_t num_features;
  uint64_t nnz;
  uint64_t query_count;
  double mean_query_nnz;
  unsigned workers;
} hm_bench_summary;

HM_API const char* hm_bench_method_name(hm_bench_method method);
/* Fills rows[0..method_count); row_capacity must be >= method_count. */
HM_API hm_status hm_bench(const hm_matrix* matrix, const hm_queries* queries,
                          const hm_bench_options* options, hm_bench_row* rows,
                          size_t row_capacity, hm_bench_summary* summary);

/* ---- ranking loss ------------------------------------------------------- */

typedef enum hm_combine_op { HM_COMBINE_MULTIPLY = 0, HM_COMBINE_ADD = 1 } hm_combine_op;

typedef struct hm_loss_config {
  hm_combine_op combine;
  int use_value; /* zero: plain |dNDCG| pair weights */
} hm_loss_config;

HM_API hm_status hm_requests_load(const char* path, hm_requests** out);
HM_API hm_status hm_requests_save(const hm_requests* requests, const char* path);
HM_API void hm_requests_free(hm_requests* requests);
HM_API size_t hm_requests_count(const hm_requests* requests);
HM_API hm_status hm_requests_depth(const hm_requests* requests, size_t i, size_t* depth);

HM_API hm_status hm_ndcg(const hm_requests* requests, size_t i, double* out);
/* grad receives d loss / d score per item, in file order. */
HM_API hm_status hm_lambdarank_loss(const hm_requests* requests, size_t i,
                                    const hm_loss_config* config, double* loss, double* grad,
                                    size_t grad_capacity);
/* Analytic gradient against Richardson-extrapolated central differences
   with steps `step` and `step / 2`. */
HM_API hm_status hm_gradient_check(const hm_requests* requests, size_t i,
                                   const hm_loss_config* config, double step,
                                   double* max_abs_err, double* max_rel_err);

#ifdef __cplusplus
}
#endif

#endif /* HITMATCH_H_ */
