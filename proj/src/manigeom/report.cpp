#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "json_io.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace mg {

using nlohmann::json;
namespace fs = std::filesystem;

const char* metric_name(Metric m) {
    switch (m) {
    case Metric::Capacity: return "capacity";
    case Metric::Radius: return "radius";
    case Metric::Dimension: return "dimension";
    case Metric::RhoCenter: return "rho_center";
    case Metric::AlphaSim: return "alpha_sim";
    case Metric::Tpr: return "tpr";
    }
    return "unknown";
}

Metric parse_metric(const std::string& name) {
    for (Metric m : {Metric::Capacity, Metric::Radius, Metric::Dimension, Metric::RhoCenter, Metric::AlphaSim,
                     Metric::Tpr}) {
        if (name == metric_name(m)) return m;
    }
    fail(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double n = static_cast<double>(v.size());
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

} // namespace

TrajectoryReport layer_trajectory(std::span<const LayerValues> values, std::size_t normalization_layer, Metric metric,
                                  std::size_t num_layers) {
    require(!values.empty(), "layer_trajectory: no values");
    std::vector<LayerValues> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.layer < b.layer; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        require(!sorted[i].values.empty(), "layer_trajectory: layer without values");
        if (i > 0) require(sorted[i].layer != sorted[i - 1].layer, "layer_trajectory: duplicate layer");
        for (double v : sorted[i].values) require(std::isfinite(v), "layer_trajectory: non-finite value");
    }
    auto norm_it = std::find_if(sorted.begin(), sorted.end(),
                                [&](const auto& lv) { return lv.layer == normalization_layer; });
    require(norm_it != sorted.end(), "layer_trajectory: normalization layer has no values");
    const double norm = mean_of(norm_it->values);
    if (norm == 0.0) fail(ErrorCode::Numerical, "layer_trajectory: normalization value is zero");

    if (num_layers == 0) num_layers = sorted.back().layer + 1;
    require(sorted.back().layer < num_layers, "layer_trajectory: layer beyond num_layers");

    TrajectoryReport out;
    out.metric = metric;
    out.normalization_layer = normalization_layer;
    out.repetitions = 0;
    for (const auto& lv : sorted) {
        TrajectoryPoint p;
        p.layer = lv.layer;
        p.normalized_layer_index =
            num_layers > 1 ? static_cast<double>(lv.layer) / static_cast<double>(num_layers - 1) : 0.0;
        p.raw_value = mean_of(lv.values);
        p.normalized_value = lv.layer == normalization_layer ? 1.0 : p.raw_value / norm;
        p.stderr_raw = stderr_of(lv.values);
        p.stderr_normalized = p.stderr_raw / std::abs(norm);
        p.repetitions = lv.values.size();
        out.repetitions = std::max(out.repetitions, p.repetitions);
        out.per_layer.push_back(p);
    }
    return out;
}

double ratio_metric(double x_first, double x_last) {
    if (x_first == 0.0) fail(ErrorCode::Numerical, "ratio_metric: first value is zero");
    return (x_last - x_first) / x_first;
}

double correlate(std::span<const double> xs, std::span<const double> ys) {
    require(xs.size() == ys.size(), "correlate: length mismatch");
    require(xs.size() >= 2, "correlate: need at least two points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::Numerical, "correlate: zero variance, correlation undefined");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::string> read_label_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read label list " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

namespace {

Engine parse_engine(const std::string& s) {
    if (s == "mft") return Engine::Mft;
    if (s == "sim") return Engine::Sim;
    if (s == "svm") return Engine::Svm;
    fail(ErrorCode::InvalidArgument, "unknown engine '" + s + "'");
}

const char* engine_name(Engine e) {
    switch (e) {
    case Engine::Mft: return "mft";
    case Engine::Sim: return "sim";
    case Engine::Svm: return "svm";
    }
    return "unknown";
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

} // namespace

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("config: ") + e.what());
    }
    const fs::path base = path.parent_path();
    RunConfig cfg;
    try {
        cfg.container = resolve(base, j.at("container").get<std::string>());
        cfg.tasks = j.at("tasks").get<std::vector<std::string>>();
        if (j.contains("layers") && j["layers"].is_array()) cfg.layers = j["layers"].get<std::vector<std::size_t>>();
        for (const auto& e : j.value("engines", std::vector<std::string>{"mft"})) cfg.engines.push_back(parse_engine(e));
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.output_dir = resolve(base, j.value("output_dir", std::string("mg_out")));
        if (j.contains("sampling")) {
            const auto& s = j["sampling"];
            cfg.instances_per_tag = s.value("instances_per_tag", cfg.instances_per_tag);
            cfg.repetitions = s.value("repetitions", cfg.repetitions);
            if (s.contains("tags")) cfg.tags = s["tags"].get<std::map<std::string, std::vector<std::string>>>();
        }
        if (j.contains("mft")) {
            const auto& m = j["mft"];
            cfg.mft.kappa = m.value("kappa", cfg.mft.kappa);
            cfg.mft.n_t = m.value("n_t", cfg.mft.n_t);
            cfg.mft.center_global = m.value("center_global", cfg.mft.center_global);
            cfg.mft.zero_count_dimension = m.value("zero_count_dimension", cfg.mft.zero_count_dimension);
            const auto corr = m.value("correlation", std::string("cosine"));
            require(corr == "cosine" || corr == "pearson", "config: correlation must be cosine or pearson");
            cfg.mft.correlation = corr == "pearson" ? CorrelationKind::Pearson : CorrelationKind::Cosine;
        }
        if (j.contains("sim")) {
            const auto& s = j["sim"];
            cfg.sim.epsilon = s.value("epsilon", cfg.sim.epsilon);
            cfg.sim.max_iter = s.value("max_iter", cfg.sim.max_iter);
            cfg.sim.n_dichotomies = s.value("n_dichotomies", cfg.sim.n_dichotomies);
            cfg.sim.instances_per_manifold = s.value("instances_per_manifold", cfg.sim.instances_per_manifold);
            cfg.sim.homogeneous = s.value("homogeneous", cfg.sim.homogeneous);
            cfg.sim.center_global = s.value("center_global", cfg.sim.center_global);
        }
        if (j.contains("svm")) {
            const auto& s = j["svm"];
            if (s.contains("split")) cfg.svm_split = parse_split(s["split"].get<std::string>());
            cfg.svm_c = s.value("c", cfg.svm_c);
        }
        if (j.contains("normalization")) {
            const auto& n = j["normalization"];
            cfg.mft_normalization_layer = n.value("mft_layer", cfg.mft_normalization_layer);
            cfg.sim_normalization_layer = n.value("sim_layer", cfg.sim_normalization_layer);
            cfg.svm_normalization_layer = n.value("svm_layer", cfg.svm_normalization_layer);
        }
        if (j.contains("label_subsets")) {
            for (const auto& [name, v] : j["label_subsets"].items()) {
                if (v.is_string()) cfg.label_subsets[name] = read_label_list(resolve(base, v.get<std::string>()));
                else cfg.label_subsets[name] = v.get<std::vector<std::string>>();
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("config: ") + e.what());
    }
    require(!cfg.tasks.empty(), "config: no tasks");
    require(!cfg.engines.empty(), "config: no engines");
    require(cfg.repetitions >= 1, "config: repetitions must be >= 1");
    cfg.mft.validate();
    cfg.sim.validate();
    cfg.svm_split.validate();
    return cfg;
}

namespace {

struct Job {
    std::string task;
    std::size_t layer = 0;
    std::size_t rep = 0;
};

// Scalars produced by one job, keyed by trajectory name.
struct JobResult {
    std::map<std::string, double> scalars;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

std::string trajectory_key(Metric m, const std::string& subset) {
    return subset.empty() ? metric_name(m) : std::string(metric_name(m)) + "__" + subset;
}

std::string report_name(Engine e, std::size_t layer, std::size_t rep) {
    std::ostringstream os;
    os << engine_name(e) << "_layer" << layer << "_rep" << rep << ".json";
    return os.str();
}

JobResult run_job(const RunConfig& cfg, const LayeredFeatureSet& data, const Job& job,
                  const std::function<void(const std::string&)>& on_written) {
    JobResult res;
    SamplingPolicy policy;
    policy.instances_per_tag = cfg.instances_per_tag;
    policy.repetitions = cfg.repetitions;
    policy.seed = cfg.seed;
    if (auto it = cfg.tags.find(job.task); it != cfg.tags.end()) policy.tag_list = it->second;
    if (policy.tag_list.empty()) policy.tag_list = data.distinct_labels(job.task);
    const ManifoldSet ms = build_manifold_set(data, job.task, job.layer, policy, job.rep);
    res.warnings = ms.warnings;

    const std::uint64_t engine_seed = derive_seed(cfg.seed, 0x72756eULL, job.rep);
    const fs::path dir = cfg.output_dir / "reports" / job.task;

    for (Engine e : cfg.engines) {
        json out;
        if (e == Engine::Mft) {
            MftConfig mc = cfg.mft;
            mc.seed = engine_seed;
            const MftReport r = mftma(ms, mc);
            out = to_json(r);
            res.scalars[trajectory_key(Metric::Capacity, {})] = r.alpha_m;
            res.scalars[trajectory_key(Metric::Radius, {})] = r.mean_radius;
            res.scalars[trajectory_key(Metric::Dimension, {})] = r.mean_dimension;
            res.scalars[trajectory_key(Metric::RhoCenter, {})] = r.rho_center;
            for (const auto& [name, labels] : cfg.label_subsets) {
                std::set<std::string> wanted(labels.begin(), labels.end());
                std::vector<double> alphas;
                for (const auto& m : r.per_manifold)
                    if (wanted.count(m.label)) alphas.push_back(m.alpha_mu);
                if (alphas.empty()) {
                    res.warnings.push_back("subset '" + name + "' has no manifolds in task " + job.task);
                    continue;
                }
                res.scalars[trajectory_key(Metric::Capacity, name)] = capacity_contribution_aggregate(alphas);
            }
            res.warnings.insert(res.warnings.end(), r.warnings.begin(), r.warnings.end());
        } else if (e == Engine::Sim) {
            SimConfig sc = cfg.sim;
            sc.seed = engine_seed;
            const SimCapacityResult r = simulation_capacity(ms, sc);
            out = to_json(r, sc);
            res.scalars[trajectory_key(Metric::AlphaSim, {})] = r.alpha_sim;
            res.warnings.insert(res.warnings.end(), r.warnings.begin(), r.warnings.end());
        } else {
            FieldOptions fo;
            fo.c_param = cfg.svm_c;
            fo.seed = engine_seed;
            const FieldDistribution fd = fields_one_vs_rest(ms, cfg.svm_split, fo);
            out = to_json(fd);
            res.scalars[trajectory_key(Metric::Tpr, {})] = fd.tpr;
            res.warnings.insert(res.warnings.end(), fd.warnings.begin(), fd.warnings.end());
        }
        out["task"] = job.task;
        out["layer"] = job.layer;
        out["repetition"] = job.rep;
        const std::string name = report_name(e, job.layer, job.rep);
        write_text_atomic(dir / name, out.dump(2) + "\n");
        res.files.push_back((fs::path("reports") / job.task / name).generic_string());
        on_written(res.files.back());
    }
    return res;
}

std::size_t normalization_layer_for(const RunConfig& cfg, Metric m) {
    switch (m) {
    case Metric::AlphaSim: return cfg.sim_normalization_layer;
    case Metric::Tpr: return cfg.svm_normalization_layer;
    default: return cfg.mft_normalization_layer;
    }
}

void mark_partial(const fs::path& root, const std::vector<std::string>& written) {
    std::error_code ec;
    for (const auto& rel : written) {
        const fs::path p = root / rel;
        auto partial = p;
        partial += ".partial";
        fs::rename(p, partial, ec);
    }
}

} // namespace

RunSummary run(const RunConfig& cfg) {
    std::mutex written_mutex;
    std::vector<std::string> written;
    try {
        require(!cfg.tasks.empty(), "run: no tasks");
        require(!cfg.engines.empty(), "run: no engines");
        require(cfg.repetitions >= 1, "run: repetitions must be >= 1");
        const LayeredFeatureSet data = load_feature_container(cfg.container);
        for (const auto& t : cfg.tasks)
            if (!data.has_task(t)) fail(ErrorCode::UnknownTask, "task '" + t + "' not in container");
        std::vector<std::size_t> layers = cfg.layers;
        if (layers.empty()) {
            layers.resize(data.layer_count());
            std::iota(layers.begin(), layers.end(), std::size_t{0});
        }
        for (std::size_t l : layers)
            require(l < data.layer_count(), "run: layer " + std::to_string(l) + " not in container");
        std::sort(layers.begin(), layers.end());
        layers.erase(std::unique(layers.begin(), layers.end()), layers.end());

        std::error_code ec;
        fs::create_directories(cfg.output_dir, ec);
        if (ec) fail(ErrorCode::Io, "cannot create " + cfg.output_dir.string());

        std::vector<Job> jobs;
        for (const auto& t : cfg.tasks)
            for (std::size_t l : layers)
                for (std::size_t r = 0; r < cfg.repetitions; ++r) jobs.push_back({t, l, r});

        std::vector<JobResult> results(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t i) {
            results[i] = run_job(cfg, data, jobs[i], [&](const std::string& f) {
                std::lock_guard lock(written_mutex);
                written.push_back(f);
            });
        });

        RunSummary summary;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            for (const auto& f : results[i].files) summary.files.emplace_back(f);
            summary.reports += results[i].files.size();
            for (const auto& w : results[i].warnings) {
                std::ostringstream os;
                os << jobs[i].task << " layer " << jobs[i].layer << " rep " << jobs[i].rep << ": " << w;
                summary.warnings.push_back(os.str());
            }
        }

        std::ostringstream csv;
        csv.precision(17);
        csv << "task,metric,subset,layer,normalized_layer_index,raw_value,normalized_value,stderr,"
               "normalized_stderr,repetitions,normalization_layer\n";
        for (const auto& task : cfg.tasks) {
            // key -> layer -> per-repetition values
            std::map<std::string, std::map<std::size_t, std::vector<double>>> collected;
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                if (jobs[i].task != task) continue;
                for (const auto& [key, v] : results[i].scalars) collected[key][jobs[i].layer].push_back(v);
            }
            for (const auto& [key, per_layer] : collected) {
                const auto sep = key.find("__");
                const Metric metric = parse_metric(key.substr(0, sep));
                const std::string subset = sep == std::string::npos ? std::string() : key.substr(sep + 2);
                std::size_t norm_layer = normalization_layer_for(cfg, metric);
                if (!per_layer.count(norm_layer)) {
                    const std::size_t fallback = per_layer.begin()->first;
                    summary.warnings.push_back(task + " " + key + ": normalization layer " +
                                               std::to_string(norm_layer) + " not analysed, using layer " +
                                               std::to_string(fallback));
                    norm_layer = fallback;
                }
                std::vector<LayerValues> lv;
                for (const auto& [layer, vals] : per_layer) lv.push_back({layer, vals});
                TrajectoryReport tr = layer_trajectory(lv, norm_layer, metric, data.layer_count());
                tr.task = task;
                tr.subset = subset;
                const std::string name = task + "__" + key + ".json";
                write_text_atomic(cfg.output_dir / "trajectories" / name, to_json(tr).dump(2) + "\n");
                {
                    std::lock_guard lock(written_mutex);
                    written.push_back((fs::path("trajectories") / name).generic_string());
                }
                summary.files.push_back(fs::path("trajectories") / name);
                ++summary.trajectories;
                for (const auto& p : tr.per_layer) {
                    csv << task << ',' << metric_name(metric) << ',' << subset << ',' << p.layer << ','
                        << p.normalized_layer_index << ',' << p.raw_value << ',' << p.normalized_value << ','
                        << p.stderr_raw << ',' << p.stderr_normalized << ',' << p.repetitions << ','
                        << tr.normalization_layer << '\n';
                }
            }
        }
        write_text_atomic(cfg.output_dir / "trajectories.csv", csv.str());
        written.push_back("trajectories.csv");
        summary.files.emplace_back("trajectories.csv");

        json engines = json::array();
        for (Engine e : cfg.engines) engines.push_back(engine_name(e));
        json files = json::array();
        for (const auto& f : summary.files) files.push_back(f.generic_string());
        const json sj = {
            {"schema_version", kSchemaVersion},
            {"kind", "run_summary"},
            {"tasks", cfg.tasks},
            {"layers", layers},
            {"engines", engines},
            {"seed", cfg.seed},
            {"repetitions", cfg.repetitions},
            {"instances_per_tag", cfg.instances_per_tag},
            {"normalization_layers",
             {{"mft", cfg.mft_normalization_layer},
              {"sim", cfg.sim_normalization_layer},
              {"svm", cfg.svm_normalization_layer}}},
            {"reports", summary.reports},
            {"trajectories", summary.trajectories},
            {"files", files},
            {"warnings", summary.warnings},
        };
        write_text_atomic(cfg.output_dir / "summary.json", sj.dump(2) + "\n");
        return summary;
    } catch (const std::exception& ex) {
        std::error_code ec;
        fs::create_directories(cfg.output_dir, ec);
        mark_partial(cfg.output_dir, written);
        const auto* err = dynamic_cast<const Error*>(&ex);
        const json ej = {
            {"schema_version", kSchemaVersion},
            {"kind", "error"},
            {"code", err ? error_code_name(err->code()) : "Internal"},
            {"message", ex.what()},
            {"partial_files", written.size()},
        };
        try {
            write_text_atomic(cfg.output_dir / "error.json", ej.dump(2) + "\n");
        } catch (...) {
        }
        throw;
    }
}

} // namespace mg
