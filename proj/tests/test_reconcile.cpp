#include "hts/errors.hpp"
#include "hts/panel.hpp"
#include "hts/reconcile.hpp"
#include "hts/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace hts;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd x(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            x(i, j) = rng.normal();
        }
    }
    return x;
}

// Direct evaluation of the intensity formula with explicit loops.
double lambda_oracle(const Eigen::MatrixXd& r) {
    const int T = static_cast<int>(r.rows());
    const int n = static_cast<int>(r.cols());
    std::vector<std::vector<double>> x(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(T)));
    for (int j = 0; j < n; ++j) {
        double mean = 0.0;
        for (int t = 0; t < T; ++t) {
            mean += r(t, j);
        }
        mean /= T;
        double ss = 0.0;
        for (int t = 0; t < T; ++t) {
            ss += (r(t, j) - mean) * (r(t, j) - mean);
        }
        const double sd = std::sqrt(ss / (T - 1));
        for (int t = 0; t < T; ++t) {
            x[static_cast<size_t>(j)][static_cast<size_t>(t)] = (r(t, j) - mean) / sd;
        }
    }
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            double wbar = 0.0;
            for (int t = 0; t < T; ++t) {
                wbar += x[static_cast<size_t>(i)][static_cast<size_t>(t)] * x[static_cast<size_t>(j)][static_cast<size_t>(t)];
            }
            wbar /= T;
            double v = 0.0;
            for (int t = 0; t < T; ++t) {
                const double w = x[static_cast<size_t>(i)][static_cast<size_t>(t)] * x[static_cast<size_t>(j)][static_cast<size_t>(t)];
                v += (w - wbar) * (w - wbar);
            }
            num += v * T / std::pow(T - 1.0, 3);
            const double rij = wbar * T / (T - 1.0);
            den += rij * rij;
        }
    }
    return std::clamp(num / den, 0.0, 1.0);
}

CovEstimate dense(const Eigen::MatrixXd& w) {
    CovEstimate c;
    c.w = w;
    c.method = CovMethod::shrinkage;
    return c;
}

Eigen::MatrixXd two_series_s() {
    Eigen::MatrixXd s(3, 2);
    s << 1, 1, 1, 0, 0, 1;
    return s;
}

} // namespace

TEST_CASE("hand least-squares examples") {
    const Eigen::MatrixXd s = two_series_s();
    Eigen::VectorXd yhat(3);
    yhat << 10, 4, 5;

    auto ols = reconcile(s, estimate_w(Eigen::MatrixXd::Zero(5, 3), CovMethod::identity), yhat);
    CHECK(ols.ytilde(0) == doctest::Approx(29.0 / 3.0).epsilon(1e-12));
    CHECK(ols.ytilde(1) == doctest::Approx(13.0 / 3.0).epsilon(1e-12));
    CHECK(ols.ytilde(2) == doctest::Approx(16.0 / 3.0).epsilon(1e-12));

    Eigen::MatrixXd w = Eigen::Vector3d(2, 1, 1).asDiagonal();
    auto wls = reconcile(s, dense(w), yhat);
    CHECK(wls.ytilde(0) == doctest::Approx(9.5).epsilon(1e-12));
    CHECK(wls.ytilde(1) == doctest::Approx(4.25).epsilon(1e-12));
    CHECK(wls.ytilde(2) == doctest::Approx(5.25).epsilon(1e-12));
}

TEST_CASE("coherent base forecasts are fixed points for any W") {
    Rng rng(5);
    Eigen::MatrixXd c(2, 4);
    c << 1, 1, 0, 0, 0, 1, 1, 1;
    const Eigen::MatrixXd s = summing_matrix(Grouping(c));
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a = random_matrix(rng, 7, 7);
        Eigen::MatrixXd w = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(7, 7);
        Eigen::VectorXd b = random_matrix(rng, 4, 1);
        Eigen::VectorXd yhat = s * b;
        auto r = reconcile(s, dense(w), yhat);
        CHECK((r.ytilde - yhat).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("estimate_w methods") {
    Rng rng(9);
    Eigen::MatrixXd res = random_matrix(rng, 50, 3);
    res.col(1) += 0.8 * res.col(0);

    auto id = estimate_w(res, CovMethod::identity);
    CHECK(id.w == Eigen::MatrixXd::Identity(3, 3));

    auto diag = estimate_w(res, CovMethod::diagonal);
    Eigen::MatrixXd centred = res.rowwise() - res.colwise().mean();
    Eigen::MatrixXd sample = centred.transpose() * centred / 49.0;
    for (int i = 0; i < 3; ++i) {
        CHECK(diag.w(i, i) == doctest::Approx(sample(i, i)).epsilon(1e-12));
    }
    CHECK(diag.w(0, 1) == 0.0);

    auto shr = estimate_w(res, CovMethod::shrinkage);
    const double lambda = lambda_oracle(res);
    CHECK(shr.lambda == doctest::Approx(lambda).epsilon(1e-10));
    CHECK(shr.lambda > 0.0);
    CHECK(shr.lambda < 1.0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double expected = i == j ? sample(i, i) : (1.0 - lambda) * sample(i, j);
            CHECK(shr.w(i, j) == doctest::Approx(expected).epsilon(1e-10));
        }
    }
    CHECK((shr.w - shr.w.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(shr.w);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("lambda matches the brute-force formula on random residuals") {
    Rng rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        const int T = 8 + static_cast<int>(rng.below(60));
        const int n = 2 + static_cast<int>(rng.below(8));
        Eigen::MatrixXd res = random_matrix(rng, T, n);
        res.col(0) += 0.5 * res.col(n - 1);
        CHECK(shrinkage_intensity(res) == doctest::Approx(lambda_oracle(res)).epsilon(1e-10));
    }
}

TEST_CASE("uncorrelated columns shrink fully to the diagonal") {
    // Columns of a 4x4 Hadamard matrix without the constant column are
    // centred and mutually orthogonal.
    Eigen::MatrixXd res(8, 3);
    res << 1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1, 1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1;
    auto w = estimate_w(res, CovMethod::shrinkage);
    CHECK(w.lambda == 1.0);
    CHECK(w.w(0, 1) == 0.0);
    CHECK(w.w(1, 2) == 0.0);
}

TEST_CASE("estimate_w error paths") {
    Eigen::MatrixXd res(10, 2);
    res.col(0).setLinSpaced(10, 0.0, 1.0);
    res.col(1).setConstant(3.0);
    CHECK_THROWS_AS(estimate_w(res, CovMethod::shrinkage), DegenerateSeriesError);
    CHECK_THROWS_AS(estimate_w(res, CovMethod::diagonal), DegenerateSeriesError);
    CHECK_THROWS_AS(estimate_w(Eigen::MatrixXd::Ones(3, 2), CovMethod::shrinkage), ArgumentError);
}

TEST_CASE("collinear residuals get a diagonal jitter") {
    Rng rng(4);
    Eigen::MatrixXd res(30, 3);
    res.col(0) = random_matrix(rng, 30, 1);
    res.col(1) = random_matrix(rng, 30, 1);
    res.col(2) = res.col(0) + res.col(1);
    // Sample covariance is singular; the returned W must still factor.
    auto w = estimate_w(res, CovMethod::shrinkage);
    Eigen::LLT<Eigen::MatrixXd> llt(w.w);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("reconcile properties on random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 2 + static_cast<int>(rng.below(10));
        std::vector<Eigen::RowVectorXd> rows;
        std::set<std::string> seen;
        for (int r = 0; r < 5; ++r) {
            Eigen::RowVectorXd row(m);
            std::string key;
            for (int j = 0; j < m; ++j) {
                row(j) = static_cast<double>(rng.below(2));
                key += row(j) > 0 ? '1' : '0';
            }
            if (row.sum() > 0 && seen.insert(key).second) {
                rows.push_back(row);
            }
        }
        Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), m);
        for (size_t i = 0; i < rows.size(); ++i) {
            c.row(static_cast<Eigen::Index>(i)) = rows[i];
        }
        const Eigen::MatrixXd s = summing_matrix(rows.empty() ? Grouping(m) : Grouping(c));
        const auto n = static_cast<int>(s.rows());
        Eigen::MatrixXd a = random_matrix(rng, n, n);
        const Eigen::MatrixXd w = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd yhat = random_matrix(rng, n, 3) * 10.0;

        auto r = reconcile(s, dense(w), yhat);
        // coherence
        for (int h = 0; h < 3; ++h) {
            const double top = r.ytilde(0, h);
            const double bottoms = r.ytilde.col(h).tail(m).sum();
            CHECK(std::fabs(top - bottoms) <= 1e-8 * std::max(1.0, std::fabs(top)));
        }
        // idempotence
        auto twice = reconcile(s, dense(w), r.ytilde);
        CHECK((twice.ytilde - r.ytilde).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, r.ytilde.cwiseAbs().maxCoeff()));
        // scale invariance of W
        auto scaled = reconcile(s, dense(7.5 * w), yhat);
        CHECK((scaled.ytilde - r.ytilde).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, r.ytilde.cwiseAbs().maxCoeff()));
        // W = I against a QR least-squares solve
        auto ols = reconcile(s, dense(Eigen::MatrixXd::Identity(n, n)), yhat);
        const Eigen::MatrixXd b_qr = s.householderQr().solve(yhat);
        CHECK((ols.btilde - b_qr).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, b_qr.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("reconcile dimension errors") {
    const Eigen::MatrixXd s = two_series_s();
    CHECK_THROWS_AS(reconcile(s, dense(Eigen::MatrixXd::Identity(2, 2)), Eigen::VectorXd::Ones(3)), ArgumentError);
    CHECK_THROWS_AS(reconcile(s, dense(Eigen::MatrixXd::Identity(3, 3)), Eigen::VectorXd::Ones(4)), ArgumentError);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(0, 1) = bad(1, 0) = 5.0;
    CHECK_THROWS_AS(reconcile(s, dense(bad), Eigen::VectorXd::Ones(3)), NumericalError);
}

TEST_CASE("parse_cov_method") {
    CHECK(parse_cov_method("mint") == CovMethod::shrinkage);
    CHECK(parse_cov_method("wls") == CovMethod::diagonal);
    CHECK(parse_cov_method("ols") == CovMethod::identity);
    CHECK_THROWS_AS(parse_cov_method("bu"), ConfigError);
}
