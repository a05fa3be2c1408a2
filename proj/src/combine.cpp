#include "hts/combine.hpp"

#include "hts/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hts {

Eigen::MatrixXd top_and_bottom(const Eigen::MatrixXd& ytilde, int m) {
    if (m < 1 || ytilde.rows() < m + 1) {
        throw ArgumentError("forecast matrix has fewer than m + 1 rows");
    }
    Eigen::MatrixXd out(m + 1, ytilde.cols());
    out.row(0) = ytilde.row(0);
    out.bottomRows(m) = ytilde.bottomRows(m);
    return out;
}

Eigen::MatrixXd combine(const std::vector<Eigen::MatrixXd>& forecasts, double tol) {
    if (forecasts.empty()) {
        throw ArgumentError("combine needs at least one forecast matrix");
    }
    const auto rows = forecasts.front().rows();
    const auto cols = forecasts.front().cols();
    if (rows < 2 || cols < 1) {
        throw ArgumentError("combine inputs must be (m+1) x h with m >= 1, h >= 1");
    }
    for (size_t i = 0; i < forecasts.size(); ++i) {
        const auto& f = forecasts[i];
        if (f.rows() != rows || f.cols() != cols) {
            throw ArgumentError("combine input " + std::to_string(i) + " has a different shape");
        }
        for (Eigen::Index h = 0; h < cols; ++h) {
            const double top = f(0, h);
            const double sum = f.col(h).tail(rows - 1).sum();
            if (!(std::fabs(top - sum) <= tol * std::max(1.0, std::fabs(top)))) {
                std::ostringstream msg;
                msg << "combine input " << i << " is not coherent at horizon " << h + 1 << " (top " << top
                    << ", bottom sum " << sum << ")";
                throw CoherenceError(msg.str());
            }
        }
    }
    const auto l = static_cast<double>(forecasts.size());
    Eigen::MatrixXd out(rows, cols);
    std::vector<double> values(forecasts.size());
    for (Eigen::Index r = 1; r < rows; ++r) {
        for (Eigen::Index h = 0; h < cols; ++h) {
            for (size_t i = 0; i < forecasts.size(); ++i) {
                values[i] = forecasts[i](r, h);
            }
            std::sort(values.begin(), values.end());
            double sum = 0.0;
            for (double v : values) {
                sum += v;
            }
            out(r, h) = sum / l;
        }
    }
    for (Eigen::Index h = 0; h < cols; ++h) {
        out(0, h) = out.col(h).tail(rows - 1).sum();
    }
    return out;
}

} // namespace hts
