#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"

namespace mg {

// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

struct CentroidMatrix {
    Eigen::MatrixXd centroids; // one row per manifold
    std::vector<std::string> labels;
};

CentroidMatrix centroids(const ManifoldSet& ms);

enum class CorrelationKind {
    Cosine,  // angle between raw centroid vectors
    Pearson, // centroids mean-subtracted across dimensions first
};

// Mean |corr| over all unordered centroid pairs; always in [0, 1].
double center_correlations(const CentroidMatrix& cm, CorrelationKind kind = CorrelationKind::Cosine);

// A manifold in the coordinates used by the mean-field computation: the
// centred points in an orthonormal basis of their span, divided by the centre
// norm, plus a final centre coordinate fixed at 1.
struct ProjectedManifold {
    double center_norm = 0.0;
    Eigen::Index intrinsic_dim = 0;
    Eigen::MatrixXd coords; // M x (D+1)
    Eigen::VectorXd center;
    Eigen::MatrixXd basis; // ambient x D, orthonormal columns

    Eigen::MatrixXd reconstruct() const;
};

ProjectedManifold manifold_subspace(const Eigen::MatrixXd& points, const Eigen::VectorXd& center);

struct ProjectionReport {
    std::size_t k = 0;
    std::vector<double> explained_variance_ratio;
    std::vector<std::size_t> token_indices;
    std::vector<std::string> labels; // empty string when unlabelled
    std::vector<Eigen::MatrixXd> coords; // per layer, tokens x k
    Eigen::MatrixXd components;         // ambient x k
    Eigen::VectorXd mean;
    std::vector<std::string> warnings;
};

// One PCA basis fitted on the selected tokens of every layer at once; each
// layer is then projected into that shared basis. `label_task` (optional)
// only annotates the output rows.
ProjectionReport global_pca(const LayeredFeatureSet& fs, std::span<const std::size_t> tokens, std::size_t k,
                            const std::string& label_task = {});

// Columns: layer, token_index, label, pc_1..pc_k.
std::string projection_csv(const ProjectionReport& report);

} // namespace mg
