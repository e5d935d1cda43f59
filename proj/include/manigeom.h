#ifndef MANIGEOM_H
#define MANIGEOM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MG_API __declspec(dllexport)
#else
#define MG_API __attribute__((visibility("default")))
#endif

typedef enum mg_status {
    MG_OK = 0,
    MG_ERR_INVALID_ARGUMENT = 1,
    MG_ERR_FORMAT = 2,
    MG_ERR_CORRUPTION = 3,
    MG_ERR_UNSUPPORTED_FORMAT = 4,
    MG_ERR_UNKNOWN_TASK = 5,
    MG_ERR_INSUFFICIENT_CLASSES = 6,
    MG_ERR_DEGENERATE_CENTROID = 7,
    MG_ERR_DEGENERATE_MANIFOLD = 8,
    MG_ERR_NUMERICAL = 9,
    MG_ERR_IO = 10,
    MG_ERR_INTERNAL = 99
} mg_status;

/* Message of the last failed call on this thread; empty after success. */
MG_API const char* mg_last_error(void);
MG_API const char* mg_status_name(mg_status status);
MG_API const char* mg_version(void);

/* Strings returned through char** outputs are owned by the caller. */
MG_API void mg_string_free(char* s);

/* Feature container */

typedef struct mg_container mg_container;

MG_API mg_status mg_container_open(const char* dir, mg_container** out);
MG_API void mg_container_free(mg_container* c);
/* JSON with num_layers, num_tokens, ambient_dim and tasks. */
MG_API mg_status mg_container_info(const mg_container* c, char** json_out);

/* Manifold sets */

typedef struct mg_manifold_set mg_manifold_set;

typedef struct mg_sampling_config {
    size_t instances_per_tag;
    size_t repetition;
    uint64_t seed;
    const char* const* tags; /* NULL: every label of the task */
    size_t n_tags;
} mg_sampling_config;

MG_API void mg_sampling_config_init(mg_sampling_config* cfg);

MG_API mg_status mg_manifold_set_build(const mg_container* c, const char* task, size_t layer,
                                       const mg_sampling_config* cfg, mg_manifold_set** out);
/* points: row-major, sum(sizes) x dim, manifolds stored one after another. */
MG_API mg_status mg_manifold_set_from_points(const double* points, const size_t* sizes, size_t n_manifolds,
                                             size_t dim, mg_manifold_set** out);
MG_API mg_status mg_manifold_set_shuffle(const mg_manifold_set* ms, uint64_t seed, mg_manifold_set** out);
MG_API mg_status mg_manifold_set_info(const mg_manifold_set* ms, size_t* n_manifolds, size_t* ambient_dim,
                                      size_t* total_points);
MG_API void mg_manifold_set_free(mg_manifold_set* ms);

/* Simulation capacity */

typedef struct mg_sim_config {
    double epsilon;
    size_t max_iter;
    size_t n_dichotomies;
    size_t instances_per_manifold;
    uint64_t seed;
    int homogeneous;
    int center_global;
} mg_sim_config;

MG_API void mg_sim_config_init(mg_sim_config* cfg);
/* json_out may be NULL. */
MG_API mg_status mg_capacity_sim(const mg_manifold_set* ms, const mg_sim_config* cfg, double* alpha_out,
                                 char** json_out);
MG_API mg_status mg_separable_fraction(const mg_manifold_set* ms, size_t n_dims, const mg_sim_config* cfg,
                                       double* fraction_out);

/* Mean-field capacity and geometry */

typedef enum mg_correlation { MG_CORRELATION_COSINE = 0, MG_CORRELATION_PEARSON = 1 } mg_correlation;

typedef struct mg_mft_config {
    double kappa;
    size_t n_t;
    uint64_t seed;
    int center_global;
    mg_correlation correlation;
    int zero_count_dimension;
} mg_mft_config;

MG_API void mg_mft_config_init(mg_mft_config* cfg);
MG_API mg_status mg_capacity_mft(const mg_manifold_set* ms, const mg_mft_config* cfg, double* alpha_out,
                                 char** json_out);

/* SVM field distributions */

typedef struct mg_svm_config {
    double train_fraction;
    double test_fraction;
    double c;
    uint64_t seed;
    int train_centroids;
} mg_svm_config;

MG_API void mg_svm_config_init(mg_svm_config* cfg);
/* Parses "80/20" style presets into train/test fractions. */
MG_API mg_status mg_parse_split(const char* text, double* train_out, double* test_out);
/* hist_bins > 0 with hist_csv_out non-NULL also produces a histogram CSV. */
MG_API mg_status mg_svm_fields(const mg_manifold_set* ms, const mg_svm_config* cfg, double* tpr_out,
                               char** json_out, size_t hist_bins, char** hist_csv_out);

/* Shared-basis PCA over all layers. tokens == NULL selects every token (every
   labelled token when label_task is given). */
MG_API mg_status mg_pca_export(const mg_container* c, const size_t* tokens, size_t n_tokens, size_t k,
                               const char* label_task, char** csv_out, char** json_out);

/* Scalar helpers */

MG_API mg_status mg_linearly_separable(const double* points, const int* labels, size_t n, size_t dim, int bias,
                                       double margin, int* separable_out);
MG_API mg_status mg_lower_bound_capacity(const size_t* sizes, size_t n, double* alpha_out);
MG_API mg_status mg_capacity_aggregate(const double* alphas, size_t n, double* alpha_out);
MG_API mg_status mg_ratio_metric(double x_first, double x_last, double* out);
MG_API mg_status mg_correlate(const double* xs, const double* ys, size_t n, double* r_out);

/* Trajectories. Each (layers[i], values[i]) pair is one repetition of one
   layer. metric is one of capacity, radius, dimension, rho_center,
   alpha_sim, tpr. num_layers == 0 derives the layer count from the input. */
MG_API mg_status mg_layer_trajectory(const size_t* layers, const double* values, size_t n,
                                     size_t normalization_layer, const char* metric, size_t num_layers,
                                     char** json_out);

/* Full run from a JSON configuration file; summary_json_out may be NULL. */
MG_API mg_status mg_run_analysis(const char* config_path, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif
