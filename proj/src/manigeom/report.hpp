#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capacity_mft.hpp"
#include "capacity_sim.hpp"
#include "svm.hpp"

namespace mg {

enum class Metric { Capacity, Radius, Dimension, RhoCenter, AlphaSim, Tpr };

const char* metric_name(Metric m);
Metric parse_metric(const std::string& name);

// Raw values of one layer, one per repetition.
struct LayerValues {
    std::size_t layer = 0;
    std::vector<double> values;
};

struct TrajectoryPoint {
    std::size_t layer = 0;
    double normalized_layer_index = 0.0; // layer / (num_layers - 1)
    double raw_value = 0.0;              // mean over repetitions
    double normalized_value = 0.0;
    double stderr_raw = 0.0;
    double stderr_normalized = 0.0;
    std::size_t repetitions = 0;
};

struct TrajectoryReport {
    std::string task;
    Metric metric = Metric::Capacity;
    std::string subset; // label subset for capacity contributions; empty for all
    std::vector<TrajectoryPoint> per_layer;
    std::size_t repetitions = 0;
    std::size_t normalization_layer = 0;
};

// normalized(l) = mean(l) / mean(normalization_layer); stderr is the standard
// error of the mean over repetitions. `num_layers` sets the x-axis scaling;
// 0 means "one past the largest layer given".
TrajectoryReport layer_trajectory(std::span<const LayerValues> values, std::size_t normalization_layer,
                                  Metric metric = Metric::Capacity, std::size_t num_layers = 0);

// (last - first) / first
double ratio_metric(double x_first, double x_last);

// Pearson product-moment correlation.
double correlate(std::span<const double> xs, std::span<const double> ys);

enum class Engine { Mft, Sim, Svm };

struct RunConfig {
    std::filesystem::path container;
    std::vector<std::string> tasks;
    std::vector<std::size_t> layers; // empty: all layers
    std::vector<Engine> engines;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "mg_out";

    std::size_t instances_per_tag = 50;
    std::size_t repetitions = 5;
    std::map<std::string, std::vector<std::string>> tags; // per task; empty: every label of the task

    MftConfig mft;
    SimConfig sim;
    Split svm_split;
    double svm_c = 1.0;

    std::size_t mft_normalization_layer = 0;
    std::size_t sim_normalization_layer = 1;
    std::size_t svm_normalization_layer = 0;

    // subset name -> labels, aggregated as capacity contributions
    std::map<std::string, std::vector<std::string>> label_subsets;
};

// Reads a JSON run configuration. Relative paths resolve against the
// config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

// Plain text, one entry per line; blank lines and '#' comments ignored.
std::vector<std::string> read_label_list(const std::filesystem::path& path);

struct RunSummary {
    std::vector<std::filesystem::path> files; // relative to output_dir
    std::size_t reports = 0;
    std::size_t trajectories = 0;
    std::vector<std::string> warnings;
};

// Runs every engine per task/layer/repetition, writes one JSON report per run,
// one TrajectoryReport per metric, a tidy trajectories.csv and summary.json.
// On failure writes error.json, renames finished outputs to *.partial and
// rethrows.
RunSummary run(const RunConfig& cfg);

} // namespace mg
