#include "json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "errors.hpp"

namespace mg {

using nlohmann::json;

namespace {

json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double number_or(const json& j, double fallback) {
    return j.is_null() ? fallback : j.get<double>();
}

const char* correlation_name(CorrelationKind k) {
    return k == CorrelationKind::Cosine ? "cosine" : "pearson";
}

} // namespace

json to_json(const SimCapacityResult& r, const SimConfig& cfg) {
    json trace = json::array();
    for (const auto& s : r.trace) trace.push_back({{"n_dims", s.n_dims}, {"separable_fraction", s.separable_fraction}});
    return {
        {"schema_version", kSchemaVersion},
        {"kind", "simulation_capacity"},
        {"alpha_sim", r.alpha_sim},
        {"n_critical", r.n_critical},
        {"converged", r.converged},
        {"iterations", r.iterations},
        {"num_manifolds", r.num_manifolds},
        {"trace", trace},
        {"config",
         {{"epsilon", cfg.epsilon},
          {"max_iter", cfg.max_iter},
          {"n_dichotomies", cfg.n_dichotomies},
          {"instances_per_manifold", cfg.instances_per_manifold},
          {"seed", cfg.seed},
          {"homogeneous", cfg.homogeneous},
          {"center_global", cfg.center_global}}},
        {"warnings", r.warnings},
    };
}

json to_json(const MftReport& r) {
    json per = json::array();
    for (const auto& m : r.per_manifold) {
        per.push_back({
            {"label", m.label},
            {"alpha_mu", finite_or_null(m.alpha_mu)},
            {"alpha_infinite", m.alpha_infinite},
            {"radius", m.radius},
            {"dimension", m.dimension},
            {"n_t_used", m.n_t_used},
            {"interior_samples", m.interior_samples},
            {"intrinsic_dim", m.intrinsic_dim},
            {"center_norm", m.center_norm},
            {"max_kkt_residual", m.max_kkt_residual},
        });
    }
    return {
        {"schema_version", kSchemaVersion},
        {"kind", "mft_capacity"},
        {"task", r.task},
        {"layer", r.layer},
        {"alpha_m", finite_or_null(r.alpha_m)},
        {"mean_radius", r.mean_radius},
        {"mean_dimension", r.mean_dimension},
        {"rho_center", r.rho_center},
        {"per_manifold", per},
        {"config",
         {{"kappa", r.config.kappa},
          {"n_t", r.config.n_t},
          {"seed", r.config.seed},
          {"center_global", r.config.center_global},
          {"correlation", correlation_name(r.config.correlation)},
          {"zero_count_dimension", r.config.zero_count_dimension}}},
        {"warnings", r.warnings},
    };
}

MftReport mft_report_from_json(const json& j) {
    if (j.value("schema_version", 0) != kSchemaVersion) fail(ErrorCode::UnsupportedFormat, "unsupported report schema");
    constexpr double inf = std::numeric_limits<double>::infinity();
    MftReport r;
    r.task = j.at("task").get<std::string>();
    r.layer = j.at("layer").get<std::size_t>();
    r.alpha_m = number_or(j.at("alpha_m"), inf);
    r.mean_radius = j.at("mean_radius").get<double>();
    r.mean_dimension = j.at("mean_dimension").get<double>();
    r.rho_center = j.at("rho_center").get<double>();
    for (const auto& m : j.at("per_manifold")) {
        ManifoldMetrics mm;
        mm.label = m.at("label").get<std::string>();
        mm.alpha_mu = number_or(m.at("alpha_mu"), inf);
        mm.alpha_infinite = m.at("alpha_infinite").get<bool>();
        mm.radius = m.at("radius").get<double>();
        mm.dimension = m.at("dimension").get<double>();
        mm.n_t_used = m.at("n_t_used").get<std::size_t>();
        mm.interior_samples = m.at("interior_samples").get<std::size_t>();
        mm.intrinsic_dim = m.at("intrinsic_dim").get<Eigen::Index>();
        mm.center_norm = m.at("center_norm").get<double>();
        mm.max_kkt_residual = m.at("max_kkt_residual").get<double>();
        r.per_manifold.push_back(std::move(mm));
    }
    const auto& c = j.at("config");
    r.config.kappa = c.at("kappa").get<double>();
    r.config.n_t = c.at("n_t").get<std::size_t>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    r.config.center_global = c.at("center_global").get<bool>();
    r.config.correlation = c.at("correlation").get<std::string>() == "pearson" ? CorrelationKind::Pearson
                                                                            : CorrelationKind::Cosine;
    r.config.zero_count_dimension = c.at("zero_count_dimension").get<bool>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

json to_json(const FieldDistribution& fd) {
    json normalized = json::array();
    for (double v : fd.normalized_fields) normalized.push_back(finite_or_null(v));
    json classes = json::array();
    for (const auto& c : fd.classes) {
        classes.push_back({
            {"label", c.label},
            {"train_count", c.train_count},
            {"test_count", c.test_count},
            {"denominator", c.denominator},
            {"excluded", c.excluded},
        });
    }
    return {
        {"schema_version", kSchemaVersion},
        {"kind", "svm_fields"},
        {"split", {{"train", fd.split.train_fraction}, {"test", fd.split.test_fraction}}},
        {"c", fd.c_param},
        {"tpr", fd.tpr},
        {"raw_fields", fd.raw_fields},
        {"normalized_fields", normalized},
        {"field_labels", fd.field_labels},
        {"field_tokens", fd.field_tokens},
        {"per_class_counts", fd.per_class_counts},
        {"classes", classes},
        {"excluded_classes", fd.excluded_classes},
        {"warnings", fd.warnings},
    };
}

json to_json(const TrajectoryReport& t) {
    json layers = json::array();
    for (const auto& p : t.per_layer) {
        layers.push_back({
            {"layer", p.layer},
            {"normalized_layer_index", p.normalized_layer_index},
            {"raw_value", p.raw_value},
            {"normalized_value", p.normalized_value},
            {"stderr", p.stderr_raw},
            {"normalized_stderr", p.stderr_normalized},
            {"repetitions", p.repetitions},
        });
    }
    return {
        {"schema_version", kSchemaVersion},
        {"kind", "trajectory"},
        {"task", t.task},
        {"metric", metric_name(t.metric)},
        {"subset", t.subset},
        {"repetitions", t.repetitions},
        {"normalization_layer", t.normalization_layer},
        {"per_layer", layers},
    };
}

TrajectoryReport trajectory_from_json(const json& j) {
    if (j.value("schema_version", 0) != kSchemaVersion) fail(ErrorCode::UnsupportedFormat, "unsupported report schema");
    TrajectoryReport t;
    t.task = j.at("task").get<std::string>();
    t.metric = parse_metric(j.at("metric").get<std::string>());
    t.subset = j.at("subset").get<std::string>();
    t.repetitions = j.at("repetitions").get<std::size_t>();
    t.normalization_layer = j.at("normalization_layer").get<std::size_t>();
    for (const auto& p : j.at("per_layer")) {
        TrajectoryPoint tp;
        tp.layer = p.at("layer").get<std::size_t>();
        tp.normalized_layer_index = p.at("normalized_layer_index").get<double>();
        tp.raw_value = p.at("raw_value").get<double>();
        tp.normalized_value = p.at("normalized_value").get<double>();
        tp.stderr_raw = p.at("stderr").get<double>();
        tp.stderr_normalized = p.at("normalized_stderr").get<double>();
        tp.repetitions = p.at("repetitions").get<std::size_t>();
        t.per_layer.push_back(tp);
    }
    return t;
}

json to_json(const ProjectionReport& p) {
    return {
        {"schema_version", kSchemaVersion},
        {"kind", "pca_projection"},
        {"k", p.k},
        {"explained_variance_ratio", p.explained_variance_ratio},
        {"num_tokens", p.token_indices.size()},
        {"num_layers", p.coords.size()},
        {"warnings", p.warnings},
    };
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
        out << text;
        if (!out) fail(ErrorCode::Io, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

} // namespace mg
