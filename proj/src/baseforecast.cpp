#include "hts/baseforecast.hpp"

#include "hts/errors.hpp"
#include "hts/parallel.hpp"
#include "nelder_mead.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace hts {

namespace {

constexpr double kAlphaLo = 1e-4;
constexpr double kAlphaHi = 0.9999;
constexpr double kPhiLo = 0.8;
constexpr double kPhiHi = 0.98;
constexpr double kMargin = 1e-10;
constexpr double kFtol = 1e-8;
constexpr int kMaxEvals = 2000;

struct Start {
    double alpha, beta_frac, gamma, phi;
};

// beta is given as a fraction of alpha so every start is admissible.
constexpr std::array<Start, 5> kStarts{{
    {0.1, 0.1, 0.01, 0.97},
    {0.3, 0.1, 0.05, 0.90},
    {0.5, 0.2, 0.10, 0.85},
    {0.7, 0.05, 0.10, 0.95},
    {0.02, 0.1, 0.30, 0.98},
}};

bool has_trend(const EtsSpec& s) { return s.trend != TrendKind::none; }
bool has_season(const EtsSpec& s) { return s.season == SeasonKind::additive; }

struct Layout {
    int beta = -1, gamma = -1, phi = -1, level = -1, slope = -1, season = -1;
    int size = 0;
    int smoothing = 0;
};

Layout make_layout(const EtsSpec& spec, int period) {
    Layout l;
    int i = 1; // alpha
    if (has_trend(spec)) {
        l.beta = i++;
    }
    if (has_season(spec)) {
        l.gamma = i++;
    }
    if (spec.trend == TrendKind::damped) {
        l.phi = i++;
    }
    l.smoothing = i;
    l.level = i++;
    if (has_trend(spec)) {
        l.slope = i++;
    }
    if (has_season(spec)) {
        l.season = i;
        i += period - 1;
    }
    l.size = i;
    return l;
}

// Projects an optimizer point onto the admissible box and writes it into `m`.
void decode(const std::vector<double>& x, const Layout& l, EtsModel& m) {
    m.alpha = std::clamp(x[0], kAlphaLo, kAlphaHi);
    m.beta = l.beta >= 0 ? std::clamp(x[static_cast<size_t>(l.beta)], 0.0, m.alpha - kMargin) : 0.0;
    m.gamma = l.gamma >= 0 ? std::clamp(x[static_cast<size_t>(l.gamma)], 0.0, 1.0 - m.alpha - kMargin) : 0.0;
    if (m.spec.trend == TrendKind::damped) {
        m.phi = std::clamp(x[static_cast<size_t>(l.phi)], kPhiLo, kPhiHi);
    } else {
        m.phi = 1.0;
    }
    m.initial_level = x[static_cast<size_t>(l.level)];
    m.initial_slope = l.slope >= 0 ? x[static_cast<size_t>(l.slope)] : 0.0;
    if (l.season >= 0) {
        const auto p = static_cast<size_t>(m.period);
        m.initial_season.resize(p);
        double sum = 0.0;
        for (size_t j = 0; j + 1 < p; ++j) {
            m.initial_season[j] = x[static_cast<size_t>(l.season) + j];
            sum += m.initial_season[j];
        }
        m.initial_season[p - 1] = -sum;
    } else {
        m.initial_season.clear();
    }
}

// State recursion. Returns the SSE and leaves the final states in `m`.
// `errors`, when non-null, receives the one-step errors.
double recurse(EtsModel& m, std::span<const double> y, std::vector<double>& season, double* errors) {
    const bool trend = has_trend(m.spec);
    const bool seasonal = has_season(m.spec);
    const auto p = static_cast<size_t>(m.period);
    double level = m.initial_level;
    double slope = trend ? m.initial_slope : 0.0;
    const double phi = m.spec.trend == TrendKind::damped ? m.phi : 1.0;
    if (seasonal) {
        season.assign(m.initial_season.begin(), m.initial_season.end());
    }
    double sse = 0.0;
    size_t phase = 0;
    for (size_t t = 0; t < y.size(); ++t) {
        const double damped = phi * slope;
        const double s = seasonal ? season[phase] : 0.0;
        const double e = y[t] - (level + damped + s);
        sse += e * e;
        if (errors != nullptr) {
            errors[t] = e;
        }
        level = level + damped + m.alpha * e;
        if (trend) {
            slope = damped + m.beta * e;
        }
        if (seasonal) {
            season[phase] = s + m.gamma * e;
            if (++phase == p) {
                phase = 0;
            }
        }
    }
    m.level = level;
    m.slope = slope;
    if (seasonal) {
        m.season = season;
    } else {
        m.season.clear();
    }
    return sse;
}

double sse_floor(std::span<const double> y) {
    double ms = 0.0;
    for (double v : y) {
        ms += v * v;
    }
    ms /= static_cast<double>(y.size());
    return 1e-20 * (1.0 + ms);
}

void check_input(std::span<const double> y, int period) {
    if (period < 1) {
        throw FitError("seasonal period must be positive");
    }
    const auto need = static_cast<size_t>(std::max(2 * period + 4, 10));
    if (y.size() < need) {
        throw FitError("series too short for ETS: need " + std::to_string(need) + " observations, got " +
                       std::to_string(y.size()));
    }
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw FitError("series contains non-finite values");
        }
    }
}

} // namespace

std::string EtsSpec::name() const {
    std::string out = "A";
    switch (trend) {
    case TrendKind::none:
        out += "N";
        break;
    case TrendKind::additive:
        out += "A";
        break;
    case TrendKind::damped:
        out += "Ad";
        break;
    }
    out += season == SeasonKind::additive ? "A" : "N";
    return out;
}

bool EtsModel::admissible() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        return false;
    }
    if (!(beta >= 0.0 && (spec.trend == TrendKind::none ? beta == 0.0 : beta < alpha))) {
        return false;
    }
    if (!(gamma >= 0.0 && (spec.season == SeasonKind::none ? gamma == 0.0 : gamma < 1.0 - alpha))) {
        return false;
    }
    if (spec.trend == TrendKind::damped && !(phi >= kPhiLo && phi <= kPhiHi)) {
        return false;
    }
    return true;
}

std::vector<double> ets_one_step_errors(const EtsModel& model, std::span<const double> y) {
    EtsModel copy = model;
    std::vector<double> season;
    std::vector<double> errors(y.size());
    recurse(copy, y, season, errors.data());
    return errors;
}

EtsModel fit_ets_model(std::span<const double> y, int period, const EtsSpec& spec) {
    check_input(y, period);
    if (has_season(spec) && period < 2) {
        throw FitError("seasonal ETS needs a seasonal period of at least 2");
    }
    const int p = has_season(spec) ? period : 1;
    const Layout layout = make_layout(spec, p);
    const auto n = static_cast<double>(y.size());

    // Heuristic initial states.
    const size_t w = std::min(y.size(), static_cast<size_t>(std::max(2 * period, 4)));
    const double head_mean = std::accumulate(y.begin(), y.begin() + static_cast<long>(w), 0.0) / static_cast<double>(w);
    const double slope0 = has_trend(spec) ? (y[w - 1] - y[0]) / static_cast<double>(w - 1) : 0.0;
    const double level0 = head_mean - slope0 * (static_cast<double>(w) + 1.0) / 2.0;
    std::vector<double> season0;
    if (has_season(spec)) {
        season0.assign(static_cast<size_t>(p), 0.0);
        std::vector<int> counts(static_cast<size_t>(p), 0);
        for (size_t t = 0; t < w; ++t) {
            season0[t % static_cast<size_t>(p)] += y[t] - (level0 + slope0 * static_cast<double>(t + 1));
            ++counts[t % static_cast<size_t>(p)];
        }
        double mean = 0.0;
        for (size_t j = 0; j < season0.size(); ++j) {
            season0[j] /= counts[j];
            mean += season0[j];
        }
        mean /= p;
        for (double& v : season0) {
            v -= mean;
        }
    }

    double sd = 0.0;
    {
        const double mu = std::accumulate(y.begin(), y.end(), 0.0) / n;
        for (double v : y) {
            sd += (v - mu) * (v - mu);
        }
        sd = std::sqrt(sd / std::max(1.0, n - 1.0));
    }
    const double state_step = std::max(0.1 * sd, 1e-3 * (std::fabs(head_mean) + 1.0));
    const double floor = sse_floor(y);

    EtsModel work;
    work.spec = spec;
    work.period = p;
    std::vector<double> season_buf;
    auto objective = [&](const std::vector<double>& x) {
        decode(x, layout, work);
        const double sse = recurse(work, y, season_buf, nullptr);
        return n * std::log(std::max(sse / n, floor));
    };

    detail::NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& st : kStarts) {
        std::vector<double> x0(static_cast<size_t>(layout.size), 0.0);
        std::vector<double> step(x0.size(), 0.0);
        x0[0] = st.alpha;
        step[0] = st.alpha < 0.5 ? 0.1 : -0.1;
        if (layout.beta >= 0) {
            x0[static_cast<size_t>(layout.beta)] = st.beta_frac * st.alpha;
            step[static_cast<size_t>(layout.beta)] = 0.25 * st.alpha;
        }
        if (layout.gamma >= 0) {
            const double g = std::min(st.gamma, 0.5 * (1.0 - st.alpha));
            x0[static_cast<size_t>(layout.gamma)] = g;
            step[static_cast<size_t>(layout.gamma)] = g < 0.5 * (1.0 - st.alpha) ? 0.05 : -0.05;
        }
        if (layout.phi >= 0) {
            x0[static_cast<size_t>(layout.phi)] = st.phi;
            step[static_cast<size_t>(layout.phi)] = st.phi < 0.89 ? 0.04 : -0.04;
        }
        x0[static_cast<size_t>(layout.level)] = level0;
        step[static_cast<size_t>(layout.level)] = state_step;
        if (layout.slope >= 0) {
            x0[static_cast<size_t>(layout.slope)] = slope0;
            step[static_cast<size_t>(layout.slope)] = 0.1 * state_step;
        }
        if (layout.season >= 0) {
            for (int j = 0; j + 1 < p; ++j) {
                x0[static_cast<size_t>(layout.season + j)] = season0[static_cast<size_t>(j)];
                step[static_cast<size_t>(layout.season + j)] = state_step;
            }
        }
        auto res = detail::nelder_mead(objective, std::move(x0), step, kFtol, kMaxEvals);
        if (res.value < best.value) {
            best = std::move(res);
        }
    }

    EtsModel model;
    model.spec = spec;
    model.period = p;
    model.n_obs = static_cast<int>(y.size());
    decode(best.x, layout, model);
    model.residuals.resize(y.size());
    model.sse = recurse(model, y, season_buf, model.residuals.data());

    const double sigma2 = std::max(model.sse / n, floor);
    model.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
    model.n_params = layout.size + 1;
    const double k = model.n_params;
    if (n - k - 1.0 > 0.0) {
        model.aicc = -2.0 * model.loglik + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
    } else {
        model.aicc = std::numeric_limits<double>::infinity();
    }
    return model;
}

EtsModel fit_ets(std::span<const double> y, int period) {
    check_input(y, period);
    std::vector<EtsSpec> candidates{
        {TrendKind::none, SeasonKind::none},
        {TrendKind::additive, SeasonKind::none},
        {TrendKind::damped, SeasonKind::none},
    };
    if (period > 1 && y.size() >= static_cast<size_t>(2 * period)) {
        candidates.push_back({TrendKind::none, SeasonKind::additive});
        candidates.push_back({TrendKind::additive, SeasonKind::additive});
        candidates.push_back({TrendKind::damped, SeasonKind::additive});
    }
    EtsModel best;
    bool have = false;
    for (const auto& spec : candidates) {
        EtsModel m = fit_ets_model(y, period, spec);
        if (!have || m.aicc < best.aicc) {
            best = std::move(m);
            have = true;
        }
    }
    return best;
}

std::vector<double> forecast_ets(const EtsModel& model, int h) {
    if (h <= 0) {
        throw ArgumentError("forecast horizon must be positive");
    }
    std::vector<double> out(static_cast<size_t>(h));
    const bool seasonal = has_season(model.spec);
    double damp_sum = 0.0;
    double phi_pow = 1.0;
    for (int k = 1; k <= h; ++k) {
        double trend = 0.0;
        switch (model.spec.trend) {
        case TrendKind::none:
            break;
        case TrendKind::additive:
            trend = k * model.slope;
            break;
        case TrendKind::damped:
            phi_pow *= model.phi;
            damp_sum += phi_pow;
            trend = damp_sum * model.slope;
            break;
        }
        double s = 0.0;
        if (seasonal) {
            s = model.season[static_cast<size_t>((model.n_obs + k - 1) % model.period)];
        }
        out[static_cast<size_t>(k - 1)] = model.level + trend + s;
    }
    return out;
}

std::vector<double> seasonal_naive(std::span<const double> y, int period, int h) {
    if (period < 1) {
        throw ArgumentError("seasonal period must be positive");
    }
    if (y.size() < static_cast<size_t>(period)) {
        throw ArgumentError("seasonal naive needs at least one full season");
    }
    if (h <= 0) {
        throw ArgumentError("forecast horizon must be positive");
    }
    const auto T = static_cast<long>(y.size());
    std::vector<double> out(static_cast<size_t>(h));
    for (long k = 1; k <= h; ++k) {
        const long cycles = (k + period - 1) / period;
        out[static_cast<size_t>(k - 1)] = y[static_cast<size_t>(T + k - period * cycles - 1)];
    }
    return out;
}

SeriesForecast forecast_series(std::span<const double> y, int period, int h) {
    SeriesForecast out;
    out.model = fit_ets(y, period);
    auto f = forecast_ets(out.model, h);
    out.forecast = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    out.residuals = Eigen::Map<const Eigen::VectorXd>(out.model.residuals.data(),
                                                      static_cast<Eigen::Index>(out.model.residuals.size()));
    return out;
}

Eigen::MatrixXd hierarchy_series(const Eigen::MatrixXd& bottom, const Grouping& grouping) {
    if (bottom.cols() != grouping.m()) {
        throw ArgumentError("grouping width does not match the number of bottom series");
    }
    const Eigen::MatrixXd s = summing_matrix(grouping);
    return bottom * s.transpose();
}

ForecastBundle forecast_panel(const SeriesPanel& panel, const Grouping& grouping, int h, int threads) {
    const Eigen::MatrixXd series = hierarchy_series(panel.bottom(), grouping);
    const auto n = static_cast<int>(series.cols());
    std::vector<std::string> ids;
    ids.reserve(static_cast<size_t>(n));
    const auto top = panel.ids()[static_cast<size_t>(panel.top_column())];
    ids.push_back(top);
    for (const auto& mid : grouping.middle_ids()) {
        ids.push_back(mid);
    }
    for (const auto& b : panel.bottom_ids()) {
        ids.push_back(b);
    }

    std::vector<SeriesForecast> fits(static_cast<size_t>(n));
    parallel_for(n, threads, [&](int j) {
        const Eigen::VectorXd col = series.col(j);
        try {
            fits[static_cast<size_t>(j)] =
                forecast_series(std::span<const double>(col.data(), static_cast<size_t>(col.size())),
                                panel.seasonal_period(), h);
        } catch (const FitError& e) {
            throw FitError("series '" + ids[static_cast<size_t>(j)] + "': " + e.what());
        }
    });

    ForecastBundle out;
    out.forecasts.resize(n, h);
    out.residuals.resize(series.rows(), n);
    for (int j = 0; j < n; ++j) {
        auto& f = fits[static_cast<size_t>(j)];
        out.forecasts.row(j) = f.forecast.transpose();
        out.residuals.col(j) = f.residuals;
        out.models.push_back(std::move(f.model));
    }
    out.ids = std::move(ids);
    return out;
}

} // namespace hts
