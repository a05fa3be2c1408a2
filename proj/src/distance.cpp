#include "hts/distance.hpp"

#include "hts/errors.hpp"
#include "hts/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace hts {

Eigen::MatrixXd euclidean_matrix(const Eigen::MatrixXd& x) {
    const auto m = x.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
        }
    }
    return d;
}

double dtw_distance(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) {
        throw ArgumentError("dtw_distance needs non-empty series");
    }
    const size_t n = x.size();
    const size_t m = y.size();
    // Two rolling rows of the cumulative-cost lattice.
    std::vector<double> prev(m);
    std::vector<double> cur(m);
    prev[0] = std::fabs(x[0] - y[0]);
    for (size_t j = 1; j < m; ++j) {
        prev[j] = prev[j - 1] + std::fabs(x[0] - y[j]);
    }
    for (size_t i = 1; i < n; ++i) {
        cur[0] = prev[0] + std::fabs(x[i] - y[0]);
        for (size_t j = 1; j < m; ++j) {
            cur[j] = std::fabs(x[i] - y[j]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

Eigen::MatrixXd dtw_matrix(const Eigen::MatrixXd& x, int threads) {
    const auto m = static_cast<int>(x.rows());
    // Row-major copies so each series is contiguous.
    std::vector<std::vector<double>> rows(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        rows[static_cast<size_t>(i)].resize(static_cast<size_t>(x.cols()));
        Eigen::Map<Eigen::RowVectorXd>(rows[static_cast<size_t>(i)].data(), x.cols()) = x.row(i);
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
    parallel_for(m, threads, [&](int i) {
        for (int j = i + 1; j < m; ++j) {
            d(i, j) = dtw_distance(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(j)]);
        }
    });
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            d(j, i) = d(i, j);
        }
    }
    return d;
}

} // namespace hts
