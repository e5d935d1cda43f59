#include "manigeom.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <map>
#include <memory>
#include <new>
#include <numeric>
#include <string>

#include "manigeom/capacity_mft.hpp"
#include "manigeom/capacity_sim.hpp"
#include "manigeom/dataset.hpp"
#include "manigeom/errors.hpp"
#include "manigeom/geometry.hpp"
#include "manigeom/json_io.hpp"
#include "manigeom/report.hpp"
#include "manigeom/separability.hpp"
#include "manigeom/svm.hpp"

struct mg_container {
    mg::LayeredFeatureSet data;
};

struct mg_manifold_set {
    mg::ManifoldSet set;
};

namespace {

thread_local std::string last_error;

template <typename F>
mg_status guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return MG_OK;
    } catch (const mg::Error& e) {
        last_error = e.what();
        return static_cast<mg_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return MG_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return MG_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return MG_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_string(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

void need(const void* p, const char* what) {
    mg::require(p != nullptr, std::string(what) + " is null");
}

mg::SimConfig to_cpp(const mg_sim_config& c) {
    mg::SimConfig s;
    s.epsilon = c.epsilon;
    s.max_iter = c.max_iter;
    s.n_dichotomies = c.n_dichotomies;
    s.instances_per_manifold = c.instances_per_manifold;
    s.seed = c.seed;
    s.homogeneous = c.homogeneous != 0;
    s.center_global = c.center_global != 0;
    return s;
}

mg::MftConfig to_cpp(const mg_mft_config& c) {
    mg::MftConfig m;
    m.kappa = c.kappa;
    m.n_t = c.n_t;
    m.seed = c.seed;
    m.center_global = c.center_global != 0;
    m.correlation = c.correlation == MG_CORRELATION_PEARSON ? mg::CorrelationKind::Pearson
                                                            : mg::CorrelationKind::Cosine;
    m.zero_count_dimension = c.zero_count_dimension != 0;
    return m;
}

} // namespace

extern "C" {

const char* mg_last_error(void) { return last_error.c_str(); }

const char* mg_status_name(mg_status status) {
    if (status == MG_OK) return "Ok";
    if (status == MG_ERR_INTERNAL) return "Internal";
    if (status >= MG_ERR_INVALID_ARGUMENT && status <= MG_ERR_IO)
        return mg::error_code_name(static_cast<mg::ErrorCode>(static_cast<int>(status)));
    return "Unknown";
}

const char* mg_version(void) { return "1.0.0"; }

void mg_string_free(char* s) { std::free(s); }

mg_status mg_container_open(const char* dir, mg_container** out) {
    return guarded([&] {
        need(dir, "dir");
        need(out, "out");
        *out = nullptr;
        auto c = std::make_unique<mg_container>(mg_container{mg::load_feature_container(dir)});
        *out = c.release();
    });
}

void mg_container_free(mg_container* c) { delete c; }

mg_status mg_container_info(const mg_container* c, char** json_out) {
    return guarded([&] {
        need(c, "container");
        need(json_out, "json_out");
        std::vector<std::string> tasks;
        for (const auto& [name, _] : c->data.label_maps()) tasks.push_back(name);
        const nlohmann::json j = {
            {"schema_version", mg::kSchemaVersion},
            {"num_layers", c->data.layer_count()},
            {"num_tokens", c->data.num_tokens()},
            {"ambient_dim", c->data.ambient_dim()},
            {"tasks", tasks},
        };
        *json_out = dup_string(j.dump(2));
    });
}

void mg_sampling_config_init(mg_sampling_config* cfg) {
    if (!cfg) return;
    cfg->instances_per_tag = 50;
    cfg->repetition = 0;
    cfg->seed = 0;
    cfg->tags = nullptr;
    cfg->n_tags = 0;
}

mg_status mg_manifold_set_build(const mg_container* c, const char* task, size_t layer,
                                const mg_sampling_config* cfg, mg_manifold_set** out) {
    return guarded([&] {
        need(c, "container");
        need(task, "task");
        need(cfg, "config");
        need(out, "out");
        *out = nullptr;
        mg::SamplingPolicy policy;
        policy.instances_per_tag = cfg->instances_per_tag;
        policy.repetitions = cfg->repetition + 1;
        policy.seed = cfg->seed;
        if (cfg->n_tags > 0) {
            need(cfg->tags, "tags");
            for (size_t i = 0; i < cfg->n_tags; ++i) {
                need(cfg->tags[i], "tag");
                policy.tag_list.emplace_back(cfg->tags[i]);
            }
        } else {
            policy.tag_list = c->data.distinct_labels(task);
        }
        auto ms = std::make_unique<mg_manifold_set>(
            mg_manifold_set{mg::build_manifold_set(c->data, task, layer, policy, cfg->repetition)});
        *out = ms.release();
    });
}

mg_status mg_manifold_set_from_points(const double* points, const size_t* sizes, size_t n_manifolds, size_t dim,
                                      mg_manifold_set** out) {
    return guarded([&] {
        need(points, "points");
        need(sizes, "sizes");
        need(out, "out");
        *out = nullptr;
        mg::require(dim > 0, "dim must be positive");
        std::vector<Eigen::MatrixXd> blocks;
        size_t offset = 0;
        for (size_t m = 0; m < n_manifolds; ++m) {
            Eigen::MatrixXd b(static_cast<Eigen::Index>(sizes[m]), static_cast<Eigen::Index>(dim));
            for (size_t i = 0; i < sizes[m]; ++i)
                for (size_t d = 0; d < dim; ++d) b(i, d) = points[(offset + i) * dim + d];
            offset += sizes[m];
            blocks.push_back(std::move(b));
        }
        auto ms = std::make_unique<mg_manifold_set>(mg_manifold_set{mg::make_manifold_set(std::move(blocks))});
        ms->set.validate();
        *out = ms.release();
    });
}

mg_status mg_manifold_set_shuffle(const mg_manifold_set* ms, uint64_t seed, mg_manifold_set** out) {
    return guarded([&] {
        need(ms, "manifold set");
        need(out, "out");
        *out = nullptr;
        auto s = std::make_unique<mg_manifold_set>(mg_manifold_set{mg::shuffle_labels(ms->set, seed)});
        *out = s.release();
    });
}

mg_status mg_manifold_set_info(const mg_manifold_set* ms, size_t* n_manifolds, size_t* ambient_dim,
                               size_t* total_points) {
    return guarded([&] {
        need(ms, "manifold set");
        if (n_manifolds) *n_manifolds = ms->set.num_manifolds();
        if (ambient_dim) *ambient_dim = static_cast<size_t>(ms->set.ambient_dim());
        if (total_points) *total_points = static_cast<size_t>(ms->set.total_points());
    });
}

void mg_manifold_set_free(mg_manifold_set* ms) { delete ms; }

void mg_sim_config_init(mg_sim_config* cfg) {
    if (!cfg) return;
    const mg::SimConfig d;
    cfg->epsilon = d.epsilon;
    cfg->max_iter = d.max_iter;
    cfg->n_dichotomies = d.n_dichotomies;
    cfg->instances_per_manifold = d.instances_per_manifold;
    cfg->seed = d.seed;
    cfg->homogeneous = d.homogeneous ? 1 : 0;
    cfg->center_global = d.center_global ? 1 : 0;
}

mg_status mg_capacity_sim(const mg_manifold_set* ms, const mg_sim_config* cfg, double* alpha_out, char** json_out) {
    return guarded([&] {
        need(ms, "manifold set");
        need(cfg, "config");
        const mg::SimConfig sc = to_cpp(*cfg);
        const auto r = mg::simulation_capacity(ms->set, sc);
        if (alpha_out) *alpha_out = r.alpha_sim;
        if (json_out) {
            auto j = mg::to_json(r, sc);
            j["task"] = ms->set.task;
            j["layer"] = ms->set.layer;
            *json_out = dup_string(j.dump(2));
        }
    });
}

mg_status mg_separable_fraction(const mg_manifold_set* ms, size_t n_dims, const mg_sim_config* cfg,
                                double* fraction_out) {
    return guarded([&] {
        need(ms, "manifold set");
        need(cfg, "config");
        need(fraction_out, "fraction_out");
        *fraction_out = mg::separable_fraction(ms->set, n_dims, to_cpp(*cfg));
    });
}

void mg_mft_config_init(mg_mft_config* cfg) {
    if (!cfg) return;
    const mg::MftConfig d;
    cfg->kappa = d.kappa;
    cfg->n_t = d.n_t;
    cfg->seed = d.seed;
    cfg->center_global = d.center_global ? 1 : 0;
    cfg->correlation = MG_CORRELATION_COSINE;
    cfg->zero_count_dimension = d.zero_count_dimension ? 1 : 0;
}

mg_status mg_capacity_mft(const mg_manifold_set* ms, const mg_mft_config* cfg, double* alpha_out, char** json_out) {
    return guarded([&] {
        need(ms, "manifold set");
        need(cfg, "config");
        const auto r = mg::mftma(ms->set, to_cpp(*cfg));
        if (alpha_out) *alpha_out = r.alpha_m;
        set_string(json_out, mg::to_json(r).dump(2));
    });
}

void mg_svm_config_init(mg_svm_config* cfg) {
    if (!cfg) return;
    const mg::Split s;
    cfg->train_fraction = s.train_fraction;
    cfg->test_fraction = s.test_fraction;
    cfg->c = 1.0;
    cfg->seed = 0;
    cfg->train_centroids = 0;
}

mg_status mg_parse_split(const char* text, double* train_out, double* test_out) {
    return guarded([&] {
        need(text, "text");
        const auto s = mg::parse_split(text);
        if (train_out) *train_out = s.train_fraction;
        if (test_out) *test_out = s.test_fraction;
    });
}

mg_status mg_svm_fields(const mg_manifold_set* ms, const mg_svm_config* cfg, double* tpr_out, char** json_out,
                        size_t hist_bins, char** hist_csv_out) {
    return guarded([&] {
        need(ms, "manifold set");
        need(cfg, "config");
        mg::Split split;
        split.train_fraction = cfg->train_fraction;
        split.test_fraction = cfg->test_fraction;
        mg::FieldOptions fo;
        fo.c_param = cfg->c;
        fo.seed = cfg->seed;
        fo.train_centroids = cfg->train_centroids != 0;
        const auto fd = mg::fields_one_vs_rest(ms->set, split, fo);
        if (tpr_out) *tpr_out = fd.tpr;
        std::string hist;
        if (hist_csv_out && hist_bins > 0) hist = mg::field_histogram_csv(fd, hist_bins);
        if (json_out) {
            auto j = mg::to_json(fd);
            j["task"] = ms->set.task;
            j["layer"] = ms->set.layer;
            *json_out = dup_string(j.dump(2));
        }
        if (hist_csv_out && hist_bins > 0) *hist_csv_out = dup_string(hist);
    });
}

mg_status mg_pca_export(const mg_container* c, const size_t* tokens, size_t n_tokens, size_t k,
                        const char* label_task, char** csv_out, char** json_out) {
    return guarded([&] {
        need(c, "container");
        const std::string task = label_task ? label_task : "";
        std::vector<std::size_t> selected;
        if (tokens) {
            selected.assign(tokens, tokens + n_tokens);
        } else if (!task.empty()) {
            const auto& labels = c->data.labels(task);
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (labels[i]) selected.push_back(i);
        } else {
            selected.resize(c->data.num_tokens());
            std::iota(selected.begin(), selected.end(), std::size_t{0});
        }
        const auto rep = mg::global_pca(c->data, selected, k, task);
        std::string csv = csv_out ? mg::projection_csv(rep) : std::string();
        std::string js = json_out ? mg::to_json(rep).dump(2) : std::string();
        if (csv_out) *csv_out = dup_string(csv);
        if (json_out) *json_out = dup_string(js);
    });
}

mg_status mg_linearly_separable(const double* points, const int* labels, size_t n, size_t dim, int bias,
                                double margin, int* separable_out) {
    return guarded([&] {
        need(points, "points");
        need(labels, "labels");
        need(separable_out, "separable_out");
        Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
        Eigen::VectorXi y(static_cast<Eigen::Index>(n));
        for (size_t i = 0; i < n; ++i) {
            for (size_t d = 0; d < dim; ++d) x(i, d) = points[i * dim + d];
            y(i) = labels[i];
        }
        mg::SeparabilityOptions opts;
        opts.bias = bias != 0;
        opts.margin = margin;
        *separable_out = mg::is_separable(x, y, opts) ? 1 : 0;
    });
}

mg_status mg_lower_bound_capacity(const size_t* sizes, size_t n, double* alpha_out) {
    return guarded([&] {
        need(sizes, "sizes");
        need(alpha_out, "alpha_out");
        *alpha_out = mg::lower_bound_capacity(std::span<const std::size_t>(sizes, n));
    });
}

mg_status mg_capacity_aggregate(const double* alphas, size_t n, double* alpha_out) {
    return guarded([&] {
        need(alphas, "alphas");
        need(alpha_out, "alpha_out");
        *alpha_out = mg::capacity_contribution_aggregate(std::span<const double>(alphas, n));
    });
}

mg_status mg_ratio_metric(double x_first, double x_last, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = mg::ratio_metric(x_first, x_last);
    });
}

mg_status mg_correlate(const double* xs, const double* ys, size_t n, double* r_out) {
    return guarded([&] {
        need(xs, "xs");
        need(ys, "ys");
        need(r_out, "r_out");
        *r_out = mg::correlate(std::span<const double>(xs, n), std::span<const double>(ys, n));
    });
}

mg_status mg_layer_trajectory(const size_t* layers, const double* values, size_t n, size_t normalization_layer,
                              const char* metric, size_t num_layers, char** json_out) {
    return guarded([&] {
        need(layers, "layers");
        need(values, "values");
        need(json_out, "json_out");
        std::map<std::size_t, std::vector<double>> grouped;
        for (size_t i = 0; i < n; ++i) grouped[layers[i]].push_back(values[i]);
        std::vector<mg::LayerValues> lv;
        for (auto& [layer, vals] : grouped) lv.push_back({layer, std::move(vals)});
        const mg::Metric m = metric ? mg::parse_metric(metric) : mg::Metric::Capacity;
        const auto tr = mg::layer_trajectory(lv, normalization_layer, m, num_layers);
        *json_out = dup_string(mg::to_json(tr).dump(2));
    });
}

mg_status mg_run_analysis(const char* config_path, char** summary_json_out) {
    return guarded([&] {
        need(config_path, "config_path");
        const auto cfg = mg::load_run_config(config_path);
        const auto summary = mg::run(cfg);
        if (summary_json_out) {
            nlohmann::json files = nlohmann::json::array();
            for (const auto& f : summary.files) files.push_back(f.generic_string());
            const nlohmann::json j = {
                {"schema_version", mg::kSchemaVersion},
                {"output_dir", cfg.output_dir.string()},
                {"reports", summary.reports},
                {"trajectories", summary.trajectories},
                {"files", files},
                {"warnings", summary.warnings},
            };
            *summary_json_out = dup_string(j.dump(2));
        }
    });
}

} // extern "C"
