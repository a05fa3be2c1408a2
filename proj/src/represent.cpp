#include "hts/represent.hpp"

#include "hts/baseforecast.hpp"
#include "hts/errors.hpp"
#include "hts/parallel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace hts {

std::string rep_kind_code(RepKind kind) {
    switch (kind) {
    case RepKind::raw:
        return "TS";
    case RepKind::residual:
        return "ER";
    case RepKind::raw_features:
        return "TSF";
    case RepKind::residual_features:
        return "ERF";
    }
    return "TS";
}

bool is_feature_kind(RepKind kind) {
    return kind == RepKind::raw_features || kind == RepKind::residual_features;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x) {
    if (x.size() < 2) {
        throw DegenerateSeriesError("cannot standardize fewer than two values");
    }
    const double mean = x.mean();
    const Eigen::VectorXd c = x.array() - mean;
    const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(x.size() - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        throw DegenerateSeriesError("series has zero variance");
    }
    return c / sd;
}

namespace {

double mean_of(std::span<const double> x) {
    return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(std::span<const double> x) {
    if (x.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(x.size() - 1);
}

// 1 - var(rem) / var(rem + component), floored at zero. A component whose
// variance is rounding noise relative to the series counts as absent.
double strength(const std::vector<double>& rem, const std::vector<double>& component, double scale) {
    std::vector<double> sum(rem.size());
    for (size_t i = 0; i < rem.size(); ++i) {
        sum[i] = rem[i] + component[i];
    }
    const double den = var_of(sum);
    if (!(den > 1e-12 * scale)) {
        return 0.0;
    }
    return std::max(0.0, 1.0 - var_of(rem) / den);
}

double spikiness(const std::vector<double>& rem) {
    const auto n = static_cast<double>(rem.size());
    if (rem.size() < 4) {
        return 0.0;
    }
    const double m = mean_of(rem);
    double s1 = 0.0;
    double s2 = 0.0;
    for (double r : rem) {
        s1 += r - m;
        s2 += (r - m) * (r - m);
    }
    std::vector<double> loo(rem.size());
    for (size_t i = 0; i < rem.size(); ++i) {
        const double c = rem[i] - m;
        const double a = s1 - c;
        const double b = s2 - c * c;
        loo[i] = (b - a * a / (n - 1.0)) / (n - 2.0);
    }
    return var_of(loo);
}

// Coefficients of the trend on orthonormal degree-1 and degree-2 polynomials.
std::pair<double, double> linearity_curvature(const std::vector<double>& trend) {
    const auto n = static_cast<Eigen::Index>(trend.size());
    if (n < 3) {
        return {0.0, 0.0};
    }
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
    t.array() -= t.mean();
    Eigen::VectorXd p1 = t.normalized();
    Eigen::VectorXd p2 = t.cwiseAbs2();
    p2.array() -= p2.mean();
    p2 -= p2.dot(p1) * p1;
    p2.normalize();
    const Eigen::Map<const Eigen::VectorXd> y(trend.data(), n);
    return {y.dot(p1), y.dot(p2)};
}

double spectral_entropy(const std::vector<double>& x) {
    const size_t n = x.size();
    const double m = mean_of(x);
    std::vector<double> c(n);
    for (size_t i = 0; i < n; ++i) {
        c[i] = x[i] - m;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, c);
    const size_t k = n / 2;
    if (k < 2) {
        return 0.0;
    }
    std::vector<double> p(k);
    double total = 0.0;
    for (size_t j = 1; j <= k; ++j) {
        p[j - 1] = std::norm(spec[j]);
        total += p[j - 1];
    }
    if (!(total > 0.0)) {
        return 0.0;
    }
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) {
            const double q = v / total;
            h -= q * std::log(q);
        }
    }
    return h / std::log(static_cast<double>(k));
}

std::pair<double, double> lumpiness_stability(const std::vector<double>& z, int width) {
    const size_t blocks = z.size() / static_cast<size_t>(width);
    if (blocks < 2) {
        return {0.0, 0.0};
    }
    std::vector<double> vars(blocks);
    std::vector<double> means(blocks);
    for (size_t b = 0; b < blocks; ++b) {
        std::span<const double> block(z.data() + b * static_cast<size_t>(width), static_cast<size_t>(width));
        vars[b] = var_of(block);
        means[b] = mean_of(block);
    }
    return {var_of(vars), var_of(means)};
}

double crossing_points(const std::vector<double>& x) {
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    int count = 0;
    for (size_t t = 1; t < n; ++t) {
        if ((x[t - 1] <= median) != (x[t] <= median)) {
            ++count;
        }
    }
    return count;
}

// Longest run of consecutive values falling into the same one of ten
// equal-width bins over the observed range.
double flat_spots(const std::vector<double>& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double width = (*hi - *lo) / 10.0;
    auto bin = [&](double v) { return width > 0.0 ? std::min(9, static_cast<int>((v - *lo) / width)) : 0; };
    int best = 0;
    int run = 0;
    int prev = -1;
    for (double v : x) {
        const int b = bin(v);
        run = b == prev ? run + 1 : 1;
        prev = b;
        best = std::max(best, run);
    }
    return best;
}

void push_acf_stats(std::vector<double>& out, std::span<const double> x, int s) {
    const int max_lag = std::max({2, s, 10});
    const auto r = acf(x, max_lag);
    out.push_back(r[0]);
    out.push_back(r[1]);
    out.push_back(r[static_cast<size_t>(s - 1)]);
    double sum = 0.0;
    for (size_t k = 0; k < 10; ++k) {
        sum += r[k] * r[k];
    }
    out.push_back(sum);
}

} // namespace

std::vector<double> acf(std::span<const double> x, int max_lag) {
    std::vector<double> out(static_cast<size_t>(std::max(0, max_lag)), 0.0);
    const double m = mean_of(x);
    double den = 0.0;
    for (double v : x) {
        den += (v - m) * (v - m);
    }
    if (!(den > 0.0)) {
        return out;
    }
    const size_t n = x.size();
    for (size_t k = 1; k <= out.size() && k < n; ++k) {
        double num = 0.0;
        for (size_t t = 0; t + k < n; ++t) {
            num += (x[t] - m) * (x[t + k] - m);
        }
        out[k - 1] = num / den;
    }
    return out;
}

Decomposition decompose(std::span<const double> y, int s) {
    const int n = static_cast<int>(y.size());
    const int order = s == 1 ? 3 : s;
    const int half = order / 2;
    if (n < order + 1 + (order % 2 == 0 ? 1 : 0)) {
        throw FeatureError("series too short for a moving-average decomposition");
    }
    Decomposition d;
    d.offset = half;
    const int len = n - 2 * half;
    d.trend.resize(static_cast<size_t>(len));
    for (int t = half; t < n - half; ++t) {
        double sum = 0.0;
        if (order % 2 == 0) {
            sum += 0.5 * (y[static_cast<size_t>(t - half)] + y[static_cast<size_t>(t + half)]);
            for (int j = -half + 1; j < half; ++j) {
                sum += y[static_cast<size_t>(t + j)];
            }
        } else {
            for (int j = -half; j <= half; ++j) {
                sum += y[static_cast<size_t>(t + j)];
            }
        }
        d.trend[static_cast<size_t>(t - half)] = sum / order;
    }

    d.seasonal.assign(static_cast<size_t>(len), 0.0);
    if (s > 1) {
        std::vector<double> phase_sum(static_cast<size_t>(s), 0.0);
        std::vector<int> phase_n(static_cast<size_t>(s), 0);
        for (int i = 0; i < len; ++i) {
            const int t = i + half;
            phase_sum[static_cast<size_t>(t % s)] += y[static_cast<size_t>(t)] - d.trend[static_cast<size_t>(i)];
            ++phase_n[static_cast<size_t>(t % s)];
        }
        std::vector<double> phase(static_cast<size_t>(s));
        for (int p = 0; p < s; ++p) {
            phase[static_cast<size_t>(p)] = phase_sum[static_cast<size_t>(p)] / phase_n[static_cast<size_t>(p)];
        }
        const double centre = mean_of(phase);
        for (int i = 0; i < len; ++i) {
            d.seasonal[static_cast<size_t>(i)] = phase[static_cast<size_t>((i + half) % s)] - centre;
        }
    }

    d.remainder.resize(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) {
        d.remainder[static_cast<size_t>(i)] =
            y[static_cast<size_t>(i + half)] - d.trend[static_cast<size_t>(i)] - d.seasonal[static_cast<size_t>(i)];
    }
    return d;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names{
        "mean",          "variance",          "acf1",         "acf2",          "acf_s",
        "acf10",         "diff_acf1",         "diff_acf2",    "diff_acf_s",    "diff_acf10",
        "trend",         "seasonal_strength", "spikiness",    "linearity",     "curvature",
        "e_acf1",        "entropy",           "lumpiness",    "stability",     "crossing_points",
        "flat_spots",    "ann_alpha",         "aan_alpha",    "aan_beta"};
    return names;
}

FeatureVector compute_features(std::span<const double> y, int s) {
    if (s < 1) {
        throw FeatureError("seasonal period must be positive");
    }
    const int n = static_cast<int>(y.size());
    if (n < std::max(3 * s, 10)) {
        throw FeatureError("series of length " + std::to_string(n) + " is too short for features with period " +
                           std::to_string(s));
    }
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw FeatureError("series contains non-finite values");
        }
    }

    std::vector<double> x(y.begin(), y.end());
    const double mean = mean_of(x);
    const double variance = var_of(x);
    std::vector<double> z(x.size());
    const double sd = std::sqrt(variance);
    for (size_t i = 0; i < x.size(); ++i) {
        z[i] = sd > 0.0 ? (x[i] - mean) / sd : 0.0;
    }
    std::vector<double> diff(x.size() - 1);
    for (size_t i = 1; i < x.size(); ++i) {
        diff[i - 1] = x[i] - x[i - 1];
    }

    FeatureVector f;
    f.names = feature_names();
    auto& v = f.values;
    v.reserve(f.names.size());
    v.push_back(mean);
    v.push_back(variance);
    push_acf_stats(v, x, s);
    push_acf_stats(v, diff, s);

    const auto d = decompose(x, s);
    v.push_back(strength(d.remainder, d.trend, variance));
    v.push_back(strength(d.remainder, d.seasonal, variance));
    v.push_back(spikiness(d.remainder));
    const auto [lin, curv] = linearity_curvature(d.trend);
    v.push_back(lin);
    v.push_back(curv);
    v.push_back(acf(d.remainder, 1)[0]);
    v.push_back(spectral_entropy(x));
    const auto [lump, stab] = lumpiness_stability(z, s > 1 ? s : 10);
    v.push_back(lump);
    v.push_back(stab);
    v.push_back(crossing_points(x));
    v.push_back(flat_spots(x));

    try {
        const auto ann = fit_ets_model(x, 1, {TrendKind::none, SeasonKind::none});
        const auto aan = fit_ets_model(x, 1, {TrendKind::additive, SeasonKind::none});
        v.push_back(ann.alpha);
        v.push_back(aan.alpha);
        v.push_back(aan.beta);
    } catch (const FitError& e) {
        throw FeatureError(std::string("smoothing-parameter features: ") + e.what());
    }

    for (size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw FeatureError("feature '" + f.names[i] + "' is not finite");
        }
    }
    return f;
}

Pca pca(const Eigen::MatrixXd& x, double threshold) {
    if (x.rows() < 1 || x.cols() < 1) {
        throw DegenerateInputError("PCA input is empty");
    }
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ArgumentError("PCA threshold must lie in (0, 1]");
    }
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd var = svd.singularValues().cwiseAbs2();
    const double total = var.sum();
    if (!(total > 0.0) || !(svd.singularValues()(0) > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()))) {
        throw DegenerateInputError("PCA input has rank zero");
    }
    Pca out;
    out.explained_ratio = var / total;
    double cum = 0.0;
    int p = 0;
    while (p < out.explained_ratio.size()) {
        cum += out.explained_ratio(p);
        ++p;
        if (cum >= threshold - 1e-12) {
            break;
        }
    }
    out.components = p;
    out.loadings = svd.matrixV().leftCols(p);
    for (int j = 0; j < p; ++j) {
        Eigen::Index arg = 0;
        out.loadings.col(j).cwiseAbs().maxCoeff(&arg);
        if (out.loadings(arg, j) < 0.0) {
            out.loadings.col(j) *= -1.0;
        }
    }
    out.scores = c * out.loadings;
    return out;
}

Eigen::MatrixXd pca_reduce(const Eigen::MatrixXd& x, double threshold) {
    return pca(x, threshold).scores;
}

Eigen::MatrixXd scale_feature_columns(const Eigen::MatrixXd& x, std::vector<std::string>* names) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double lo = x.col(j).minCoeff();
        const double hi = x.col(j).maxCoeff();
        if (hi - lo > 1e-12 * std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)))) {
            keep.push_back(j);
        }
    }
    if (keep.empty()) {
        throw DegenerateInputError("every feature is constant across series");
    }
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(keep.size()));
    std::vector<std::string> kept_names;
    for (size_t i = 0; i < keep.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = standardize(x.col(keep[i]));
        if (names) {
            kept_names.push_back((*names)[static_cast<size_t>(keep[i])]);
        }
    }
    if (names) {
        *names = std::move(kept_names);
    }
    return out;
}

Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& series, int s, int threads) {
    const auto m = static_cast<int>(series.cols());
    Eigen::MatrixXd out(m, static_cast<Eigen::Index>(feature_names().size()));
    parallel_for(m, threads, [&](int j) {
        const Eigen::VectorXd col = series.col(j);
        try {
            const auto f = compute_features(std::span<const double>(col.data(), static_cast<size_t>(col.size())), s);
            out.row(j) = Eigen::Map<const Eigen::RowVectorXd>(f.values.data(), static_cast<Eigen::Index>(f.values.size()));
        } catch (const FeatureError& e) {
            throw FeatureError("series " + std::to_string(j) + ": " + e.what());
        }
    });
    return out;
}

Representation build_representation(RepKind kind, const Eigen::MatrixXd& series, int s, int threads) {
    Representation rep;
    rep.kind = kind;
    if (is_feature_kind(kind)) {
        rep.feature_names = feature_names();
        rep.data = scale_feature_columns(feature_matrix(series, s, threads), &rep.feature_names);
        return rep;
    }
    rep.data.resize(series.cols(), series.rows());
    for (Eigen::Index j = 0; j < series.cols(); ++j) {
        try {
            rep.data.row(j) = standardize(series.col(j)).transpose();
        } catch (const DegenerateSeriesError&) {
            throw DegenerateSeriesError("bottom series " + std::to_string(j) + " has zero variance");
        }
    }
    return rep;
}

} // namespace hts
