#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"

namespace mg {

struct Hyperplane {
    Eigen::VectorXd weights;
    double bias = 0.0;
    std::string class_label;
    double c_param = 1.0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    std::size_t iterations = 0;

    double field(const Eigen::VectorXd& x) const { return (weights.dot(x) + bias) / weights.norm(); }
};

struct SvmSolverOptions {
    double tolerance = 1e-9; // maximal KKT violation at exit
    std::size_t max_iter = 10'000'000;
};

// Soft-margin linear SVM, 1/2|w|^2 + C sum hinge(y (w.x + b)), with an
// unregularised bias. SMO with second-order working-set selection.
Hyperplane train_linear_svm(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, double c_param,
                            const SvmSolverOptions& opts = {});

double svm_primal_objective(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const Eigen::VectorXd& w, double b,
                            double c_param);

struct Split {
    double train_fraction = 0.8;
    double test_fraction = 0.2;

    void validate() const;
};

// Parses "80/20" style presets (percentages).
Split parse_split(const std::string& text);

struct FieldOptions {
    double c_param = 1.0;
    std::uint64_t seed = 0;
    bool train_centroids = false; // normalise with train-split class centroids
};

struct ClassFieldSummary {
    std::string label;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    double denominator = 0.0; // f(c+) - f(c-)
    bool excluded = false;
};

// Signed distances of ground-truth-positive test points to each class's
// one-vs-rest hyperplane, pooled over classes in (label, token) order.
struct FieldDistribution {
    std::vector<double> raw_fields;
    std::vector<double> normalized_fields; // NaN for classes excluded from normalisation
    std::vector<std::string> field_labels;
    std::vector<std::size_t> field_tokens;
    std::map<std::string, std::size_t> per_class_counts;
    std::vector<ClassFieldSummary> classes;
    std::vector<std::string> excluded_classes;
    Split split;
    double c_param = 1.0;
    double tpr = 0.0;
    std::vector<std::string> warnings;
};

FieldDistribution fields_one_vs_rest(const ManifoldSet& ms, const Split& split, const FieldOptions& opts = {});

// Fraction of raw fields strictly above zero.
double tpr(std::span<const double> raw_fields);
inline double tpr(const FieldDistribution& fd) { return tpr(fd.raw_fields); }

// Columns: kind,bin_lower,bin_upper,count,density for raw and normalised fields.
std::string field_histogram_csv(const FieldDistribution& fd, std::size_t bins);

} // namespace mg
