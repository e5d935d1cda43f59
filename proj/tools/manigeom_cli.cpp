#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "manigeom.h"

namespace {

using nlohmann::json;

struct CliFailure {
    mg_status status;
    std::string message;
};

void check(mg_status st) {
    if (st != MG_OK) throw CliFailure{st, mg_last_error()};
}

std::string take(char* s) {
    std::string out = s ? s : "";
    mg_string_free(s);
    return out;
}

int report_error(mg_status st, const std::string& message) {
    const json j = {
        {"schema_version", 1},
        {"kind", "error"},
        {"code", mg_status_name(st)},
        {"message", message},
    };
    std::cerr << j.dump(2) << "\n";
    return 1;
}

struct ContainerHandle {
    mg_container* c = nullptr;
    explicit ContainerHandle(const std::string& dir) { check(mg_container_open(dir.c_str(), &c)); }
    ~ContainerHandle() { mg_container_free(c); }
    ContainerHandle(const ContainerHandle&) = delete;
    ContainerHandle& operator=(const ContainerHandle&) = delete;
};

struct SetHandle {
    mg_manifold_set* ms = nullptr;
    SetHandle() = default;
    ~SetHandle() { mg_manifold_set_free(ms); }
    SetHandle(const SetHandle&) = delete;
    SetHandle& operator=(const SetHandle&) = delete;
};

struct SamplingArgs {
    std::string container;
    std::string task;
    std::size_t layer = 0;
    std::size_t per_tag = 50;
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> tags;
    bool shuffle = false;
};

void add_sampling_options(CLI::App* cmd, SamplingArgs& a, bool layer_required = true) {
    cmd->add_option("--container", a.container, "Feature container directory")->required();
    cmd->add_option("--task", a.task, "Label task (pos, sem, ner, depdepth, word)")->required();
    auto* layer = cmd->add_option("--layer", a.layer, "Layer index");
    if (layer_required) layer->required();
    cmd->add_option("--per-tag", a.per_tag, "Instances sampled per tag")->capture_default_str();
    cmd->add_option("--repetition", a.repetition, "Sampling repetition index")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->add_option("--tags", a.tags, "Restrict to these tags")->delimiter(',');
    cmd->add_flag("--shuffle", a.shuffle, "Shuffle labels before analysis");
}

void build_set(const ContainerHandle& c, const SamplingArgs& a, std::size_t layer, SetHandle& out) {
    mg_sampling_config sc;
    mg_sampling_config_init(&sc);
    sc.instances_per_tag = a.per_tag;
    sc.repetition = a.repetition;
    sc.seed = a.seed;
    std::vector<const char*> tags;
    for (const auto& t : a.tags) tags.push_back(t.c_str());
    sc.tags = tags.empty() ? nullptr : tags.data();
    sc.n_tags = tags.size();
    check(mg_manifold_set_build(c.c, a.task.c_str(), layer, &sc, &out.ms));
    if (a.shuffle) {
        mg_manifold_set* shuffled = nullptr;
        check(mg_manifold_set_shuffle(out.ms, a.seed, &shuffled));
        mg_manifold_set_free(out.ms);
        out.ms = shuffled;
    }
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliFailure{MG_ERR_IO, "cannot read " + path};
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliFailure{MG_ERR_IO, "cannot write " + path};
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Manifold capacity and geometry analysis of layered feature containers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mg_version()));

    std::string config_path;
    auto* analyze = app.add_subcommand("analyze", "Full run from a JSON config");
    analyze->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

    auto* capacity = app.add_subcommand("capacity", "Manifold capacity of one task/layer");
    capacity->require_subcommand(1);

    SamplingArgs sim_args;
    mg_sim_config sim_cfg;
    mg_sim_config_init(&sim_cfg);
    bool sim_homogeneous = false, sim_no_center = false;
    auto* sim = capacity->add_subcommand("sim", "Simulation capacity by bisection on projected dimension");
    add_sampling_options(sim, sim_args);
    sim->add_option("--epsilon", sim_cfg.epsilon, "Half-width of the band around 1/2")->capture_default_str();
    sim->add_option("--dichotomies", sim_cfg.n_dichotomies, "Random dichotomies per dimension (odd)")
        ->capture_default_str();
    sim->add_option("--instances", sim_cfg.instances_per_manifold, "Points kept per manifold")->capture_default_str();
    sim->add_option("--max-iter", sim_cfg.max_iter, "Bisection iteration cap")->capture_default_str();
    sim->add_flag("--homogeneous", sim_homogeneous, "Separators through the origin");
    sim->add_flag("--no-center", sim_no_center, "Do not subtract the pooled mean");

    SamplingArgs mft_args;
    mg_mft_config mft_cfg;
    mg_mft_config_init(&mft_cfg);
    bool all_layers = false, pearson = false, mft_no_center = false;
    auto* mft = capacity->add_subcommand("mft", "Mean-field capacity, radius, dimension and center correlation");
    add_sampling_options(mft, mft_args, false);
    mft->add_option("--kappa", mft_cfg.kappa, "Margin")->capture_default_str();
    mft->add_option("--nt", mft_cfg.n_t, "Gaussian samples per manifold")->capture_default_str();
    mft->add_flag("--all-layers", all_layers, "One report per layer");
    mft->add_flag("--pearson", pearson, "Pearson instead of cosine center correlation");
    mft->add_flag("--no-center", mft_no_center, "Do not subtract the pooled mean");

    SamplingArgs svm_args;
    std::string split_text = "80/20";
    double svm_c = 1.0;
    std::size_t hist_bins = 0;
    std::string hist_out = "fields_hist.csv";
    bool train_centroids = false;
    auto* svm = app.add_subcommand("svm-fields", "One-vs-rest SVM field distributions");
    add_sampling_options(svm, svm_args);
    svm->add_option("--split", split_text, "Train/test split, e.g. 80/20")->capture_default_str();
    svm->add_option("--c", svm_c, "Soft-margin parameter")->capture_default_str();
    svm->add_option("--hist", hist_bins, "Also write a histogram CSV with this many bins");
    svm->add_option("--hist-out", hist_out, "Histogram CSV path")->capture_default_str();
    svm->add_flag("--train-centroids", train_centroids, "Normalise with train-split centroids");

    std::string pca_container, pca_task, pca_out, pca_tokens;
    std::size_t pca_k = 2;
    auto* pca = app.add_subcommand("pca-export", "Shared PCA projection of every layer as CSV");
    pca->add_option("--container", pca_container, "Feature container directory")->required();
    pca->add_option("--k", pca_k, "Number of components")->capture_default_str();
    pca->add_option("--task", pca_task, "Label task used to select and annotate tokens");
    pca->add_option("--tokens-file", pca_tokens, "Token indices, one per line");
    pca->add_option("--out", pca_out, "CSV output path (default stdout)");

    std::string traj_input, traj_metric = "capacity";
    std::size_t traj_norm = 0, traj_layers = 0;
    bool traj_csv = false;
    auto* traj = app.add_subcommand("trajectory", "Normalised layer trajectory from per-layer values");
    traj->add_option("--input", traj_input, "CSV with columns layer,value; one row per repetition")
        ->required()
        ->check(CLI::ExistingFile);
    traj->add_option("--normalization-layer", traj_norm, "Layer whose mean is 1")->capture_default_str();
    traj->add_option("--metric", traj_metric, "Metric name")->capture_default_str();
    traj->add_option("--num-layers", traj_layers, "Total layer count for the x axis");
    traj->add_flag("--csv", traj_csv, "Emit tidy CSV instead of JSON");

    std::vector<double> corr_x, corr_y;
    std::string corr_input;
    auto* corr = app.add_subcommand("correlate", "Pearson correlation of two series");
    corr->add_option("--x", corr_x, "First series")->delimiter(',');
    corr->add_option("--y", corr_y, "Second series")->delimiter(',');
    corr->add_option("--input", corr_input, "CSV with two numeric columns")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            char* out = nullptr;
            check(mg_run_analysis(config_path.c_str(), &out));
            std::cout << take(out) << "\n";
        } else if (sim->parsed()) {
            sim_cfg.seed = sim_args.seed;
            sim_cfg.homogeneous = sim_homogeneous ? 1 : 0;
            sim_cfg.center_global = sim_no_center ? 0 : 1;
            ContainerHandle c(sim_args.container);
            SetHandle s;
            build_set(c, sim_args, sim_args.layer, s);
            char* out = nullptr;
            check(mg_capacity_sim(s.ms, &sim_cfg, nullptr, &out));
            std::cout << take(out) << "\n";
        } else if (mft->parsed()) {
            mft_cfg.seed = mft_args.seed;
            mft_cfg.correlation = pearson ? MG_CORRELATION_PEARSON : MG_CORRELATION_COSINE;
            mft_cfg.center_global = mft_no_center ? 0 : 1;
            ContainerHandle c(mft_args.container);
            std::vector<std::size_t> layers;
            if (all_layers) {
                char* info = nullptr;
                check(mg_container_info(c.c, &info));
                const auto n = json::parse(take(info)).at("num_layers").get<std::size_t>();
                for (std::size_t l = 0; l < n; ++l) layers.push_back(l);
            } else {
                if (mft->count("--layer") == 0) throw std::runtime_error("--layer or --all-layers is required");
                layers.push_back(mft_args.layer);
            }
            json reports = json::array();
            for (std::size_t l : layers) {
                SetHandle s;
                build_set(c, mft_args, l, s);
                char* out = nullptr;
                check(mg_capacity_mft(s.ms, &mft_cfg, nullptr, &out));
                reports.push_back(json::parse(take(out)));
            }
            std::cout << (all_layers ? reports.dump(2) : reports.front().dump(2)) << "\n";
        } else if (svm->parsed()) {
            mg_svm_config cfg;
            mg_svm_config_init(&cfg);
            check(mg_parse_split(split_text.c_str(), &cfg.train_fraction, &cfg.test_fraction));
            cfg.c = svm_c;
            cfg.seed = svm_args.seed;
            cfg.train_centroids = train_centroids ? 1 : 0;
            ContainerHandle c(svm_args.container);
            SetHandle s;
            build_set(c, svm_args, svm_args.layer, s);
            char* out = nullptr;
            char* hist = nullptr;
            check(mg_svm_fields(s.ms, &cfg, nullptr, &out, hist_bins, hist_bins > 0 ? &hist : nullptr));
            if (hist_bins > 0) write_file(hist_out, take(hist));
            std::cout << take(out) << "\n";
        } else if (pca->parsed()) {
            ContainerHandle c(pca_container);
            std::vector<std::size_t> tokens;
            if (!pca_tokens.empty()) {
                std::ifstream in(pca_tokens);
                if (!in) throw CliFailure{MG_ERR_IO, "cannot read " + pca_tokens};
                std::size_t t;
                while (in >> t) tokens.push_back(t);
            }
            char* csv = nullptr;
            char* js = nullptr;
            check(mg_pca_export(c.c, pca_tokens.empty() ? nullptr : tokens.data(), tokens.size(), pca_k,
                                pca_task.empty() ? nullptr : pca_task.c_str(), &csv, &js));
            const std::string meta = take(js);
            if (pca_out.empty()) {
                std::cout << take(csv);
            } else {
                write_file(pca_out, take(csv));
                std::cout << meta << "\n";
            }
        } else if (traj->parsed()) {
            std::vector<std::size_t> layers;
            std::vector<double> values;
            for (const auto& row : read_csv_rows(traj_input)) {
                if (row.size() < 2) throw std::runtime_error("trajectory input needs layer,value columns");
                if (!is_number(row[0]) || !is_number(row[1])) continue; // header
                layers.push_back(std::stoull(row[0]));
                values.push_back(std::stod(row[1]));
            }
            char* out = nullptr;
            check(mg_layer_trajectory(layers.data(), values.data(), layers.size(), traj_norm, traj_metric.c_str(),
                                      traj_layers, &out));
            const std::string text = take(out);
            if (traj_csv) {
                const auto j = json::parse(text);
                std::cout << "metric,layer,normalized_layer_index,raw_value,normalized_value,stderr,"
                             "normalized_stderr,repetitions\n";
                std::cout.precision(17);
                for (const auto& p : j.at("per_layer")) {
                    std::cout << j.at("metric").get<std::string>() << ',' << p.at("layer").get<std::size_t>() << ','
                              << p.at("normalized_layer_index").get<double>() << ','
                              << p.at("raw_value").get<double>() << ',' << p.at("normalized_value").get<double>()
                              << ',' << p.at("stderr").get<double>() << ','
                              << p.at("normalized_stderr").get<double>() << ','
                              << p.at("repetitions").get<std::size_t>() << '\n';
                }
            } else {
                std::cout << text << "\n";
            }
        } else if (corr->parsed()) {
            if (!corr_input.empty()) {
                corr_x.clear();
                corr_y.clear();
                for (const auto& row : read_csv_rows(corr_input)) {
                    if (row.size() < 2 || !is_number(row[0]) || !is_number(row[1])) continue;
                    corr_x.push_back(std::stod(row[0]));
                    corr_y.push_back(std::stod(row[1]));
                }
            }
            if (corr_x.size() != corr_y.size()) throw std::runtime_error("series lengths differ");
            double r = 0.0;
            check(mg_correlate(corr_x.data(), corr_y.data(), corr_x.size(), &r));
            const json j = {{"schema_version", 1}, {"kind", "correlation"}, {"pearson", r}, {"n", corr_x.size()}};
            std::cout << j.dump(2) << "\n";
        }
    } catch (const CliFailure& f) {
        return report_error(f.status, f.message);
    } catch (const std::exception& e) {
        return report_error(MG_ERR_INVALID_ARGUMENT, e.what());
    }
    return 0;
}
