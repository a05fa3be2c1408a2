#include "hts/reconcile.hpp"

#include "hts/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hts {

CovMethod parse_cov_method(const std::string& name) {
    if (name == "mint" || name == "shrinkage") {
        return CovMethod::shrinkage;
    }
    if (name == "wls" || name == "diagonal") {
        return CovMethod::diagonal;
    }
    if (name == "ols" || name == "identity") {
        return CovMethod::identity;
    }
    throw ConfigError("unknown reconciliation method '" + name + "' (expected mint, wls or ols)");
}

std::string cov_method_name(CovMethod m) {
    switch (m) {
    case CovMethod::identity:
        return "ols";
    case CovMethod::diagonal:
        return "wls";
    case CovMethod::shrinkage:
        return "mint";
    }
    return "mint";
}

namespace {

Eigen::MatrixXd centred(const Eigen::MatrixXd& r) {
    return r.rowwise() - r.colwise().mean();
}

void check_residuals(const Eigen::MatrixXd& r) {
    if (r.rows() < 4) {
        throw ArgumentError("covariance estimation needs at least 4 residual rows");
    }
    if (!r.allFinite()) {
        throw ArgumentError("residuals contain non-finite values");
    }
}

Eigen::VectorXd column_sd(const Eigen::MatrixXd& x) {
    const double denom = static_cast<double>(x.rows()) - 1.0;
    Eigen::VectorXd sd = (x.colwise().squaredNorm() / denom).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < sd.size(); ++j) {
        if (!(sd(j) > 0.0)) {
            throw DegenerateSeriesError("residual column " + std::to_string(j) + " has zero variance");
        }
    }
    return sd;
}

} // namespace

double shrinkage_intensity(const Eigen::MatrixXd& residuals) {
    check_residuals(residuals);
    const Eigen::MatrixXd x0 = centred(residuals);
    const Eigen::VectorXd sd = column_sd(x0);
    const Eigen::MatrixXd x = x0 * sd.cwiseInverse().asDiagonal();
    const double t = static_cast<double>(x.rows());

    // w_tij = x_ti x_tj; mean_t w_tij and sum_t w_tij^2 in matrix form.
    const Eigen::MatrixXd wbar = (x.transpose() * x) / t;
    const Eigen::MatrixXd x2 = x.cwiseAbs2();
    const Eigen::MatrixXd w2 = x2.transpose() * x2;
    const Eigen::MatrixXd corr = wbar * (t / (t - 1.0));
    const Eigen::MatrixXd var_corr = (w2 - t * wbar.cwiseAbs2()) * (t / std::pow(t - 1.0, 3));

    const double num = var_corr.sum() - var_corr.diagonal().sum();
    const double den = corr.cwiseAbs2().sum() - corr.diagonal().cwiseAbs2().sum();
    if (!(den > 0.0)) {
        return 1.0;
    }
    return std::clamp(num / den, 0.0, 1.0);
}

CovEstimate estimate_w(const Eigen::MatrixXd& residuals, CovMethod method) {
    CovEstimate out;
    out.method = method;
    const auto n = residuals.cols();
    if (method == CovMethod::identity) {
        out.w = Eigen::MatrixXd::Identity(n, n);
        out.lambda = 1.0;
        return out;
    }
    check_residuals(residuals);
    const Eigen::MatrixXd x = centred(residuals);
    const Eigen::VectorXd sd = column_sd(x);
    const double denom = static_cast<double>(x.rows()) - 1.0;
    if (method == CovMethod::diagonal) {
        out.w = sd.cwiseAbs2().asDiagonal();
        out.lambda = 1.0;
        return out;
    }

    out.lambda = shrinkage_intensity(residuals);
    Eigen::MatrixXd sigma = (x.transpose() * x) / denom;
    sigma = 0.5 * (sigma + sigma.transpose());
    out.w = (1.0 - out.lambda) * sigma;
    out.w.diagonal() = sigma.diagonal();

    Eigen::LLT<Eigen::MatrixXd> llt(out.w);
    if (llt.info() != Eigen::Success) {
        out.w.diagonal().array() += 1e-10 * out.w.trace() / static_cast<double>(n);
        out.jittered = true;
    }
    return out;
}

Reconciled reconcile(const Eigen::MatrixXd& s, const CovEstimate& w, const Eigen::MatrixXd& yhat) {
    const auto n = s.rows();
    const auto m = s.cols();
    if (w.w.rows() != n || w.w.cols() != n || yhat.rows() != n) {
        throw ArgumentError("reconcile: dimensions of S, W and yhat do not agree");
    }
    if (m < 1 || n < m) {
        throw ArgumentError("reconcile: summing matrix must have at least as many rows as columns");
    }

    Eigen::MatrixXd a;   // W^{-1/2} S
    Eigen::MatrixXd rhs; // W^{-1/2} yhat
    const Eigen::MatrixXd off = w.w - Eigen::MatrixXd(w.w.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() == 0.0) {
        if (!(w.w.diagonal().minCoeff() > 0.0)) {
            throw NumericalError("reconcile: W has a non-positive diagonal entry");
        }
        const Eigen::VectorXd inv_sd = w.w.diagonal().cwiseSqrt().cwiseInverse();
        a = inv_sd.asDiagonal() * s;
        rhs = inv_sd.asDiagonal() * yhat;
    } else {
        Eigen::LLT<Eigen::MatrixXd> chol(w.w);
        if (chol.info() != Eigen::Success) {
            throw NumericalError("reconcile: W is not positive definite");
        }
        a = chol.matrixL().solve(s);
        rhs = chol.matrixL().solve(yhat);
    }

    const Eigen::MatrixXd normal = a.transpose() * a;
    Eigen::LLT<Eigen::MatrixXd> nchol(normal);
    if (nchol.info() != Eigen::Success || !(nchol.rcond() > 1e-15)) {
        std::ostringstream msg;
        msg << "reconcile: normal matrix S'W^-1S is singular (reciprocal condition estimate " << nchol.rcond()
            << ")";
        throw NumericalError(msg.str());
    }
    Reconciled out;
    out.btilde = nchol.solve(a.transpose() * rhs);
    out.ytilde = s * out.btilde;
    return out;
}

} // namespace hts
