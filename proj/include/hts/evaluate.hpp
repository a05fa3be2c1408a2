#pragma once

#include "hts/cluster.hpp"
#include "hts/panel.hpp"
#include "hts/reconcile.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hts {

struct WindowPlan {
    int initial_length = 96;
    int step = 1;
    int horizon = 12;
    int total_length = 0;

    /// (T - initial - h) / step + 1; ArgumentError if no window fits.
    int windows() const;
    /// Training length of window w (0-based).
    int train_length(int w) const;
    void validate() const;
};

WindowPlan make_plan(int total_length, int initial_length = 96, int horizon = 12, int step = 1);

/// sqrt(mean((actual - forecast)^2) / mean((y_t - y_{t-s})^2, t = s+1..T)).
double rmsse(std::span<const double> train, std::span<const double> actual, std::span<const double> forecast, int s);

/// One evaluated approach. Hierarchy kinds produce a grouping per window
/// which is reconciled; `base` scores the unreconciled base forecasts;
/// `combination` averages the top and bottom reconciled forecasts of its
/// parts. A permutation, when set, is applied to every grouping the approach
/// (or its parts) produces.
struct ApproachSpec {
    enum class Kind { base, two_level, fixed, cluster, grouped, combination };

    std::string label;
    Kind kind = Kind::base;
    std::optional<Grouping> grouping; // fixed
    std::string cluster;              // cluster: one of the twelve approach names
    std::vector<ApproachSpec> parts;  // grouped, combination
    std::optional<std::vector<int>> permutation;

    static ApproachSpec base();
    static ApproachSpec two_level();
    static ApproachSpec fixed(std::string label, Grouping g);
    static ApproachSpec clustered(const std::string& name);
    /// Union of the rows of the parts' groupings (default: all twelve
    /// clustering approaches).
    static ApproachSpec grouped(std::vector<ApproachSpec> parts = {});
    static ApproachSpec combination(std::string label, std::vector<ApproachSpec> parts);
    /// Copy of `source` with its groupings permuted.
    static ApproachSpec twin(const ApproachSpec& source, std::vector<int> perm, std::string label);
};

struct BacktestOptions {
    CovMethod method = CovMethod::shrinkage;
    ClusterOptions cluster;
    int threads = 1; // windows in flight
    bool keep_forecasts = false;
};

struct EvalReport {
    std::vector<std::string> labels;
    std::vector<std::string> series_ids; // top then bottom
    std::vector<int> train_lengths;      // per window
    Eigen::MatrixXd rmsse;               // N x J, mean over top + bottom
    std::vector<Eigen::MatrixXd> series_rmsse; // per window, J x (m + 1)
    Eigen::MatrixXi middle_rows;         // N x J, middle series per hierarchy (0 for base/combination)
    // forecasts[w][j]: (m + 1) x h top+bottom forecasts, when kept.
    std::vector<std::vector<Eigen::MatrixXd>> forecasts;
};

/// Expanding-window evaluation. Every window re-clusters on its training
/// slice, fits base forecasts (shared across hierarchies through a per-window
/// cache keyed by member set), estimates W from that window's residuals and
/// reconciles.
EvalReport run_backtest(const SeriesPanel& panel, const std::vector<ApproachSpec>& approaches, const WindowPlan& plan,
                        const BacktestOptions& opt = {});

/// Per-row ranks (1 = smallest), ties sharing their average rank.
Eigen::MatrixXd rank_rows(const Eigen::MatrixXd& scores);

/// Upper-alpha quantile of the studentized range of k means with infinite
/// degrees of freedom.
double studentized_range_quantile(double alpha, int k);
/// P(range of k iid standard normals <= q).
double studentized_range_cdf(double q, int k);

struct McbResult {
    std::vector<double> mean_ranks;
    double q = 0.0;
    double half_width = 0.0;
    double alpha = 0.05;
    int windows = 0;
    int best = 0;
    // Interval overlaps the best approach's interval.
    std::vector<bool> indistinguishable;
};

/// Multiple comparisons with the best on average ranks:
/// mean rank +- q * sqrt(J (J + 1) / (6 N)) / 2.
McbResult mcb(const Eigen::MatrixXd& scores, double alpha = 0.05);

/// Rank-interval plot (one row per approach, sorted by mean rank).
std::string mcb_svg(const McbResult& result, const std::vector<std::string>& labels, const std::string& title = "");

} // namespace hts
