#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace mg {

CentroidMatrix centroids(const ManifoldSet& ms) {
    ms.validate();
    CentroidMatrix cm;
    cm.centroids.resize(static_cast<Eigen::Index>(ms.num_manifolds()), ms.ambient_dim());
    for (std::size_t i = 0; i < ms.num_manifolds(); ++i) {
        cm.centroids.row(static_cast<Eigen::Index>(i)) = ms.manifolds[i].points.colwise().mean();
        cm.labels.push_back(ms.manifolds[i].label);
    }
    return cm;
}

double center_correlations(const CentroidMatrix& cm, CorrelationKind kind) {
    const Eigen::Index p = cm.centroids.rows();
    require(p >= 2, "center correlations need at least 2 centroids");
    require(cm.centroids.allFinite(), "centroids must be finite");

    Eigen::MatrixXd c = cm.centroids;
    if (kind == CorrelationKind::Pearson) c.colwise() -= c.rowwise().mean();

    Eigen::VectorXd norms = c.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!(norms(i) > 0.0)) {
            const std::string label = static_cast<std::size_t>(i) < cm.labels.size() ? cm.labels[i] : std::to_string(i);
            fail(ErrorCode::DegenerateCentroid, "centroid of manifold '" + label + "' has zero norm");
        }
    }
    const Eigen::MatrixXd unit = norms.cwiseInverse().asDiagonal() * c;
    const Eigen::MatrixXd gram = unit * unit.transpose();

    double total = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) total += std::min(1.0, std::abs(gram(i, j)));
    return total / (0.5 * static_cast<double>(p) * static_cast<double>(p - 1));
}

Eigen::MatrixXd ProjectedManifold::reconstruct() const {
    const Eigen::Index m = coords.rows();
    Eigen::MatrixXd out = center.transpose().replicate(m, 1);
    if (intrinsic_dim > 0)
        out += center_norm * coords.leftCols(intrinsic_dim) * basis.transpose();
    return out;
}

ProjectedManifold manifold_subspace(const Eigen::MatrixXd& points, const Eigen::VectorXd& center) {
    const Eigen::Index m = points.rows();
    require(m >= 1, "manifold_subspace needs at least one point");
    require(center.size() == points.cols(), "center dimension does not match points");
    require(points.allFinite() && center.allFinite(), "manifold points must be finite");

    ProjectedManifold pm;
    pm.center = center;
    pm.center_norm = center.norm();

    const Eigen::MatrixXd centered = points.rowwise() - center.transpose();
    const double scale = std::max(points.rowwise().norm().maxCoeff(), centered.rowwise().norm().maxCoeff());
    if (!(pm.center_norm > 1e-12 * scale) || pm.center_norm == 0.0)
        fail(ErrorCode::DegenerateManifold, "manifold centre has zero norm; centre normalisation is undefined");

    Eigen::Index rank = 0;
    Eigen::MatrixXd intrinsic(m, 0);
    if (m > 1 && centered.norm() > 0.0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& sv = svd.singularValues();
        const double cutoff = kRankTolerance * sv(0);
        while (rank < sv.size() && sv(rank) > cutoff) ++rank;
        intrinsic = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal();
        pm.basis = svd.matrixV().leftCols(rank);
        // canonical sign: the largest-magnitude coordinate of each axis is positive
        for (Eigen::Index j = 0; j < rank; ++j) {
            Eigen::Index arg = 0;
            intrinsic.col(j).cwiseAbs().maxCoeff(&arg);
            if (intrinsic(arg, j) < 0) {
                intrinsic.col(j) = -intrinsic.col(j);
                pm.basis.col(j) = -pm.basis.col(j);
            }
        }
    } else {
        pm.basis.resize(points.cols(), 0);
    }

    pm.intrinsic_dim = rank;
    pm.coords.resize(m, rank + 1);
    pm.coords.leftCols(rank) = intrinsic / pm.center_norm;
    pm.coords.col(rank).setOnes();
    return pm;
}

ProjectionReport global_pca(const LayeredFeatureSet& fs, std::span<const std::size_t> tokens, std::size_t k,
                            const std::string& label_task) {
    require(!tokens.empty(), "PCA token subset is empty");
    require(k >= 1 && k <= fs.ambient_dim(), "k must be in [1, ambient_dim]");
    for (auto t : tokens) require(t < fs.num_tokens(), "token index out of range");

    const auto n = static_cast<Eigen::Index>(tokens.size());
    const auto layers = static_cast<Eigen::Index>(fs.layer_count());
    const auto dim = static_cast<Eigen::Index>(fs.ambient_dim());

    Eigen::MatrixXd stacked(n * layers, dim);
    for (Eigen::Index l = 0; l < layers; ++l) {
        const FeatureMatrix& f = fs.layer(static_cast<std::size_t>(l));
        for (Eigen::Index i = 0; i < n; ++i)
            stacked.row(l * n + i) = f.row(static_cast<Eigen::Index>(tokens[static_cast<std::size_t>(i)])).cast<double>();
    }

    ProjectionReport rep;
    rep.mean = stacked.colwise().mean();
    const Eigen::MatrixXd centered = stacked.rowwise() - rep.mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();

    Eigen::Index rank = 0;
    if (sv.size() > 0 && sv(0) > 0.0)
        while (rank < sv.size() && sv(rank) > kRankTolerance * sv(0)) ++rank;
    require(rank > 0, "selected tokens have zero variance across layers");

    auto use = static_cast<Eigen::Index>(k);
    if (use > rank) {
        rep.warnings.push_back("k=" + std::to_string(k) + " exceeds data rank " + std::to_string(rank) +
                               "; reduced to " + std::to_string(rank));
        use = rank;
    }
    rep.k = static_cast<std::size_t>(use);
    rep.components = svd.matrixV().leftCols(use);
    for (Eigen::Index j = 0; j < use; ++j) {
        Eigen::Index arg = 0;
        rep.components.col(j).cwiseAbs().maxCoeff(&arg);
        if (rep.components(arg, j) < 0) rep.components.col(j) = -rep.components.col(j);
    }

    const double total = sv.squaredNorm();
    for (Eigen::Index j = 0; j < use; ++j) rep.explained_variance_ratio.push_back(sv(j) * sv(j) / total);

    rep.token_indices.assign(tokens.begin(), tokens.end());
    const LabelMap* labels = label_task.empty() ? nullptr : &fs.labels(label_task);
    for (auto t : tokens) rep.labels.push_back(labels && (*labels)[t] ? *(*labels)[t] : std::string());

    for (Eigen::Index l = 0; l < layers; ++l)
        rep.coords.push_back(centered.middleRows(l * n, n) * rep.components);
    return rep;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

} // namespace

std::string projection_csv(const ProjectionReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "layer,token_index,label";
    for (std::size_t j = 0; j < report.k; ++j) out << ",pc_" << j + 1;
    out << '\n';
    for (std::size_t l = 0; l < report.coords.size(); ++l) {
        const Eigen::MatrixXd& c = report.coords[l];
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            out << l << ',' << report.token_indices[static_cast<std::size_t>(i)] << ','
                << csv_field(report.labels[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < c.cols(); ++j) out << ',' << c(i, j);
            out << '\n';
        }
    }
    return out.str();
}

} // namespace mg
