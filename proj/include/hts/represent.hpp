#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace hts {

enum class RepKind { raw, residual, raw_features, residual_features };

/// "TS", "ER", "TSF", "ERF".
std::string rep_kind_code(RepKind kind);
bool is_feature_kind(RepKind kind);

struct Representation {
    RepKind kind = RepKind::raw;
    Eigen::MatrixXd data; // m x d, one row per bottom series
    std::vector<std::string> feature_names;
};

/// (x - mean) / sd with the unbiased standard deviation.
Eigen::VectorXd standardize(const Eigen::VectorXd& x);

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

/// The 24 feature names in output order.
const std::vector<std::string>& feature_names();

/// Requires T >= max(3s, 10); the smoothing-parameter features need ten
/// observations for a non-seasonal fit.
FeatureVector compute_features(std::span<const double> y, int s);

struct Decomposition {
    // Trimmed to the span where the centred moving average exists.
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> remainder;
    int offset = 0; // index in y of trend[0]
};

/// Classical additive decomposition: centred moving average of order s
/// (2 x s for even s, 3 when s = 1), seasonal = centred phase means of the
/// detrended series.
Decomposition decompose(std::span<const double> y, int s);

/// Autocorrelation at lags 1..max_lag; zero when the series has no variance.
std::vector<double> acf(std::span<const double> x, int max_lag);

struct Pca {
    Eigen::MatrixXd scores;          // m x p
    Eigen::VectorXd explained_ratio; // all components, descending
    Eigen::MatrixXd loadings;        // d x p
    int components = 0;
};

/// Principal components of the column-centred matrix, keeping the smallest p
/// whose cumulative explained variance reaches `threshold`. Each loading
/// vector is signed so that its largest-magnitude entry is positive.
Pca pca(const Eigen::MatrixXd& x, double threshold = 0.8);
Eigen::MatrixXd pca_reduce(const Eigen::MatrixXd& x, double threshold = 0.8);

/// Drops columns that are constant across rows and z-scores the rest.
Eigen::MatrixXd scale_feature_columns(const Eigen::MatrixXd& x, std::vector<std::string>* names = nullptr);

/// Builds the clustering input for the bottom series. `series` is T x m (one
/// column per bottom series, raw observations or in-sample residuals
/// depending on `kind`).
Representation build_representation(RepKind kind, const Eigen::MatrixXd& series, int s, int threads = 1);

/// m x 24 feature matrix, one row per column of `series`.
Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& series, int s, int threads = 1);

} // namespace hts
