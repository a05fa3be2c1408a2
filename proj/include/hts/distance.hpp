#pragma once

#include <Eigen/Dense>

#include <span>

namespace hts {

/// d(i, j) = ||x_i - x_j|| over the rows of x.
Eigen::MatrixXd euclidean_matrix(const Eigen::MatrixXd& x);

/// Unconstrained dynamic time warping with cost |x_i - y_j| and steps
/// (1,0), (0,1), (1,1).
double dtw_distance(std::span<const double> x, std::span<const double> y);

/// Pairwise DTW between the rows of x.
Eigen::MatrixXd dtw_matrix(const Eigen::MatrixXd& x, int threads = 1);

} // namespace hts
