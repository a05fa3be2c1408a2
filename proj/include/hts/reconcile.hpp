#pragma once

#include <Eigen/Dense>

#include <string>

namespace hts {

enum class CovMethod { identity, diagonal, shrinkage };

/// "ols" -> identity, "wls" -> diagonal, "mint" -> shrinkage.
CovMethod parse_cov_method(const std::string& name);
std::string cov_method_name(CovMethod m);

struct CovEstimate {
    Eigen::MatrixXd w;
    double lambda = 0.0;
    CovMethod method = CovMethod::shrinkage;
    // Set when the estimate was not numerically positive definite and a
    // diagonal jitter of 1e-10 * trace(W) / n was added.
    bool jittered = false;
};

/// Shrinkage intensity toward the diagonal target, computed on the sample
/// correlations of the column-centred residuals:
///   lambda = clamp(sum_{i != j} Var(r_ij) / sum_{i != j} r_ij^2, 0, 1).
double shrinkage_intensity(const Eigen::MatrixXd& residuals);

/// Error covariance estimate from T x n in-sample residuals.
CovEstimate estimate_w(const Eigen::MatrixXd& residuals, CovMethod method);

struct Reconciled {
    Eigen::MatrixXd ytilde; // n x h
    Eigen::MatrixXd btilde; // m x h
};

/// Projects base forecasts (one column per horizon) onto the coherent
/// subspace: btilde = (S' W^-1 S)^-1 S' W^-1 yhat, ytilde = S btilde.
Reconciled reconcile(const Eigen::MatrixXd& s, const CovEstimate& w, const Eigen::MatrixXd& yhat);

} // namespace hts
