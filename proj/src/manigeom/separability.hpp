#pragma once

#include <Eigen/Dense>

namespace mg {

struct SeparabilityOptions {
    double margin = 0.0; // required y_i (w . x_i) / |w|
    bool bias = true;    // append a constant 1 coordinate (affine separator)
};

// Minimum-norm point of conv{rows of z}. Its norm equals the best achievable
// worst-case margin max_{|w|=1} min_i z_i . w whenever that margin is positive.
struct MinNormPoint {
    Eigen::VectorXd point;
    double distance = 0.0;
    int iterations = 0;
};

// Wolfe's algorithm; finite, with the affine sub-problems solved through an
// updated triangular factor of [1; Z_S]^T [1; Z_S].
MinNormPoint min_norm_point(const Eigen::MatrixXd& z);

// True iff some w achieves y_i (w . x_i) >= margin |w| for all i, with the
// margin-0 case requiring an optimal margin above 1e-9 times the largest
// |y_i x_i|. Rows of `points` are the x_i; labels are +1/-1.
bool is_separable(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels,
                  const SeparabilityOptions& opts = {});

} // namespace mg
