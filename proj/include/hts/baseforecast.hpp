#pragma once

#include "hts/panel.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace hts {

enum class TrendKind { none, additive, damped };
enum class SeasonKind { none, additive };

struct EtsSpec {
    TrendKind trend = TrendKind::none;
    SeasonKind season = SeasonKind::none;

    // "ANN", "AAN", "AAdN", "ANA", "AAA", "AAdA".
    std::string name() const;
    friend bool operator==(const EtsSpec&, const EtsSpec&) = default;
};

/// Additive-error exponential smoothing model with its fitted parameters.
///
/// `level`, `slope` and `season` hold the states after the last training
/// observation; `season[t % period]` is the seasonal component used at time t
/// (0-based, counting from the first training observation).
struct EtsModel {
    EtsSpec spec;
    int period = 1;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double phi = 1.0;

    double initial_level = 0.0;
    double initial_slope = 0.0;
    std::vector<double> initial_season;

    int n_obs = 0;
    double level = 0.0;
    double slope = 0.0;
    std::vector<double> season;

    double sse = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    int n_params = 0;
    std::vector<double> residuals; // in-sample one-step errors, one per observation

    bool admissible() const;
};

/// Runs the state recursion over `y` from the model's initial states and
/// returns the one-step prediction errors.
std::vector<double> ets_one_step_errors(const EtsModel& model, std::span<const double> y);

/// Fits one fixed specification by maximum likelihood.
EtsModel fit_ets_model(std::span<const double> y, int period, const EtsSpec& spec);

/// Automatic selection by AICc over ANN, AAN, AAdN and, when the period
/// allows, ANA, AAA, AAdA. Requires T >= max(2s + 4, 10).
EtsModel fit_ets(std::span<const double> y, int period);

std::vector<double> forecast_ets(const EtsModel& model, int h);

/// forecast_k = y[T + k - s * ceil(k / s)] (1-based).
std::vector<double> seasonal_naive(std::span<const double> y, int period, int h);

/// Base forecasts for every series of a hierarchy.
///
/// Rows of `forecasts` (n x h) and columns of `residuals` (T x n) are ordered
/// top, middle (grouping rows), bottom.
struct ForecastBundle {
    Eigen::MatrixXd forecasts;
    Eigen::MatrixXd residuals;
    std::vector<EtsModel> models;
    std::vector<std::string> ids;
};

struct SeriesForecast {
    Eigen::VectorXd forecast;
    Eigen::VectorXd residuals;
    EtsModel model;
};

SeriesForecast forecast_series(std::span<const double> y, int period, int h);

ForecastBundle forecast_panel(const SeriesPanel& panel, const Grouping& grouping, int h, int threads = 1);

/// Training series of every hierarchy node, T x n in (top, middle, bottom) order.
Eigen::MatrixXd hierarchy_series(const Eigen::MatrixXd& bottom, const Grouping& grouping);

} // namespace hts
