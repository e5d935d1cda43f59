#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mg {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TokenRecord {
    std::string text;
    std::size_t sentence = 0;
    std::size_t position = 0;
};

using LabelMap = std::vector<std::optional<std::string>>;

// Per-layer representation vectors for one corpus plus token-level labels.
class LayeredFeatureSet {
public:
    LayeredFeatureSet(std::vector<TokenRecord> tokens, std::vector<FeatureMatrix> layers,
                      std::map<std::string, LabelMap> label_maps);

    std::size_t layer_count() const { return layers_.size(); }
    std::size_t num_tokens() const { return tokens_.size(); }
    std::size_t ambient_dim() const { return static_cast<std::size_t>(layers_.front().cols()); }

    const std::vector<TokenRecord>& tokens() const { return tokens_; }
    const FeatureMatrix& layer(std::size_t k) const;
    const std::map<std::string, LabelMap>& label_maps() const { return label_maps_; }
    const LabelMap& labels(const std::string& task) const;
    bool has_task(const std::string& task) const { return label_maps_.count(task) != 0; }

    // Distinct labels of a task, sorted.
    std::vector<std::string> distinct_labels(const std::string& task) const;

private:
    std::vector<TokenRecord> tokens_;
    std::vector<FeatureMatrix> layers_;
    std::map<std::string, LabelMap> label_maps_;
};

enum class ContainerDtype { F32Le, Csv };

LayeredFeatureSet load_feature_container(const std::filesystem::path& dir);

// Writes manifest.json plus one file per layer. Used by fixtures and tests;
// the extractor produces the same layout.
void write_feature_container(const LayeredFeatureSet& fs, const std::filesystem::path& dir,
                             ContainerDtype dtype = ContainerDtype::F32Le);

struct Manifold {
    std::string label;
    Eigen::MatrixXd points; // one row per point
    std::vector<std::size_t> token_indices;

    Eigen::Index size() const { return points.rows(); }
};

// P labelled manifolds in a common ambient space (one task, one layer).
struct ManifoldSet {
    std::string task;
    std::size_t layer = 0;
    std::uint64_t seed = 0;
    std::vector<Manifold> manifolds;
    std::vector<std::string> warnings;

    std::size_t num_manifolds() const { return manifolds.size(); }
    Eigen::Index ambient_dim() const { return manifolds.empty() ? 0 : manifolds.front().points.cols(); }
    Eigen::Index total_points() const;
    std::vector<std::size_t> sizes() const;

    // Throws InvalidArgument when an invariant is violated.
    void validate() const;
};

// Builds a ManifoldSet from raw point blocks; token indices are assigned
// sequentially. Convenience for synthetic data.
ManifoldSet make_manifold_set(std::vector<Eigen::MatrixXd> blocks,
                              std::vector<std::string> labels = {}, std::string task = "synthetic");

struct SamplingPolicy {
    std::size_t instances_per_tag = 50;
    std::size_t repetitions = 5;
    std::vector<std::string> tag_list;
    std::uint64_t seed = 0;

    void validate() const;
};

// Token indices chosen for each tag of a task, independent of the layer.
struct TokenSelection {
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> indices;
    std::vector<std::string> warnings;
};

TokenSelection select_tokens(const LayeredFeatureSet& fs, const std::string& task,
                             const SamplingPolicy& policy, std::size_t repetition);

ManifoldSet build_manifold_set(const LayeredFeatureSet& fs, const std::string& task, std::size_t layer,
                               const SamplingPolicy& policy, std::size_t repetition);

// Pools all points and repartitions them into manifolds of the original sizes.
ManifoldSet shuffle_labels(const ManifoldSet& ms, std::uint64_t seed);

// Keeps at most `count` points per manifold, chosen without replacement.
ManifoldSet subsample(const ManifoldSet& ms, std::size_t count, std::uint64_t seed);

// Row-stacked points of every manifold, in manifold order.
Eigen::MatrixXd pooled_points(const ManifoldSet& ms);

} // namespace mg
