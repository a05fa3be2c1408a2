#pragma once

#include <Eigen/Dense>

#include <vector>

namespace hts {

/// Rows 0 (top) and the last m rows (bottom) of an n x h reconciled forecast.
Eigen::MatrixXd top_and_bottom(const Eigen::MatrixXd& ytilde, int m);

/// Equal-weight mean of (m+1) x h top+bottom forecasts. Each input must be
/// coherent: |top - sum(bottom)| <= tol * max(1, |top|). Bottom rows are
/// averaged with an order-independent sum and the top row is set to the sum
/// of the averaged bottoms.
Eigen::MatrixXd combine(const std::vector<Eigen::MatrixXd>& forecasts, double tol = 1e-6);

} // namespace hts
