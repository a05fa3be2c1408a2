#include "hts/evaluate.hpp"

#include "hts/baseforecast.hpp"
#include "hts/combine.hpp"
#include "hts/errors.hpp"
#include "hts/parallel.hpp"
#include "hts/permute.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace hts {

int WindowPlan::windows() const {
    validate();
    return (total_length - initial_length - horizon) / step + 1;
}

int WindowPlan::train_length(int w) const {
    return initial_length + w * step;
}

void WindowPlan::validate() const {
    if (initial_length < 1 || horizon < 1 || step < 1) {
        throw ArgumentError("window plan needs positive initial length, horizon and step");
    }
    if (total_length - initial_length - horizon < 0) {
        throw ArgumentError("window plan: " + std::to_string(total_length) + " observations cannot hold " +
                            std::to_string(initial_length) + " training and " + std::to_string(horizon) +
                            " test observations");
    }
}

WindowPlan make_plan(int total_length, int initial_length, int horizon, int step) {
    WindowPlan p;
    p.total_length = total_length;
    p.initial_length = initial_length;
    p.horizon = horizon;
    p.step = step;
    p.validate();
    return p;
}

double rmsse(std::span<const double> train, std::span<const double> actual, std::span<const double> forecast, int s) {
    if (s < 1 || static_cast<int>(train.size()) <= s) {
        throw ArgumentError("rmsse needs more than s training observations");
    }
    if (actual.empty() || actual.size() != forecast.size()) {
        throw ArgumentError("rmsse: actual and forecast lengths differ or are empty");
    }
    double num = 0.0;
    for (size_t i = 0; i < actual.size(); ++i) {
        num += (actual[i] - forecast[i]) * (actual[i] - forecast[i]);
    }
    num /= static_cast<double>(actual.size());
    double den = 0.0;
    const auto us = static_cast<size_t>(s);
    for (size_t t = us; t < train.size(); ++t) {
        den += (train[t] - train[t - us]) * (train[t] - train[t - us]);
    }
    den /= static_cast<double>(train.size() - us);
    if (!(den > 0.0)) {
        throw ScaleError("rmsse: seasonal-naive in-sample errors are all zero");
    }
    return std::sqrt(num / den);
}

ApproachSpec ApproachSpec::base() {
    ApproachSpec a;
    a.label = "Base";
    a.kind = Kind::base;
    return a;
}

ApproachSpec ApproachSpec::two_level() {
    ApproachSpec a;
    a.label = "Two-level";
    a.kind = Kind::two_level;
    return a;
}

ApproachSpec ApproachSpec::fixed(std::string label, Grouping g) {
    ApproachSpec a;
    a.label = std::move(label);
    a.kind = Kind::fixed;
    a.grouping = std::move(g);
    return a;
}

ApproachSpec ApproachSpec::clustered(const std::string& name) {
    find_cluster_approach(name);
    ApproachSpec a;
    a.label = name;
    a.kind = Kind::cluster;
    a.cluster = name;
    return a;
}

ApproachSpec ApproachSpec::grouped(std::vector<ApproachSpec> parts) {
    if (parts.empty()) {
        for (const auto& c : cluster_approaches()) {
            parts.push_back(clustered(c.name));
        }
    }
    ApproachSpec a;
    a.label = "Grouped";
    a.kind = Kind::grouped;
    a.parts = std::move(parts);
    return a;
}

ApproachSpec ApproachSpec::combination(std::string label, std::vector<ApproachSpec> parts) {
    if (parts.empty()) {
        throw ConfigError("combination needs at least one hierarchy");
    }
    for (const auto& p : parts) {
        if (p.kind == Kind::base || p.kind == Kind::combination) {
            throw ConfigError("combination parts must be hierarchies, got '" + p.label + "'");
        }
    }
    ApproachSpec a;
    a.label = std::move(label);
    a.kind = Kind::combination;
    a.parts = std::move(parts);
    return a;
}

ApproachSpec ApproachSpec::twin(const ApproachSpec& source, std::vector<int> perm, std::string label) {
    if (source.kind == Kind::base) {
        throw ConfigError("base forecasts have no hierarchy to permute");
    }
    ApproachSpec a = source;
    a.label = std::move(label);
    a.permutation = std::move(perm);
    return a;
}

namespace {

using Kind = ApproachSpec::Kind;

std::string one_hot(int m, int j) {
    std::string key(static_cast<size_t>(m), '0');
    key[static_cast<size_t>(j)] = '1';
    return key;
}

void collect_clusters(const ApproachSpec& a, std::set<std::string>& out) {
    if (a.kind == Kind::cluster) {
        out.insert(a.cluster);
    }
    for (const auto& p : a.parts) {
        collect_clusters(p, out);
    }
}

struct WindowResult {
    Eigen::VectorXd scores;        // J
    Eigen::MatrixXd series_scores; // J x (m + 1)
    Eigen::VectorXi middle;        // J
    std::vector<Eigen::MatrixXd> forecasts;
};

class Window {
public:
    Window(const Eigen::MatrixXd& bottom, int s, int h, const BacktestOptions& opt, int threads)
        : bottom_(bottom), m_(static_cast<int>(bottom.cols())), s_(s), h_(h), opt_(opt), threads_(threads) {}

    // Fits every key not yet cached, in parallel.
    void ensure(const std::vector<std::string>& keys) {
        std::vector<std::string> todo;
        std::set<std::string> seen;
        for (const auto& k : keys) {
            if (!cache_.count(k) && seen.insert(k).second) {
                todo.push_back(k);
            }
        }
        std::vector<SeriesForecast> fits(todo.size());
        parallel_for(static_cast<int>(todo.size()), threads_, [&](int i) {
            const Eigen::VectorXd y = series(todo[static_cast<size_t>(i)]);
            try {
                fits[static_cast<size_t>(i)] =
                    forecast_series(std::span<const double>(y.data(), static_cast<size_t>(y.size())), s_, h_);
            } catch (const Error& e) {
                rethrow_with_context(e, "series " + describe(todo[static_cast<size_t>(i)]) + ": ");
            }
        });
        for (size_t i = 0; i < todo.size(); ++i) {
            cache_.emplace(todo[i], std::move(fits[i]));
        }
    }

    const SeriesForecast& fit(const std::string& key) { return cache_.at(key); }

    Eigen::VectorXd series(const std::string& key) const {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(bottom_.rows());
        for (int j = 0; j < m_; ++j) {
            if (key[static_cast<size_t>(j)] == '1') {
                y += bottom_.col(j);
            }
        }
        return y;
    }

    std::string top_key() const { return std::string(static_cast<size_t>(m_), '1'); }

    void prepare_clusters(const std::set<std::string>& names) {
        if (names.empty()) {
            return;
        }
        std::vector<std::string> keys;
        for (int j = 0; j < m_; ++j) {
            keys.push_back(one_hot(m_, j));
        }
        ensure(keys);
        Eigen::MatrixXd residuals(bottom_.rows(), m_);
        for (int j = 0; j < m_; ++j) {
            residuals.col(j) = fit(keys[static_cast<size_t>(j)]).residuals;
        }
        ClusterOptions co = opt_.cluster;
        co.threads = threads_;
        clusters_ = cluster_groupings(std::vector<std::string>(names.begin(), names.end()), bottom_, residuals, s_, co);
    }

    Grouping resolve(const ApproachSpec& a, const std::vector<int>* outer) const {
        Grouping g(m_);
        switch (a.kind) {
        case Kind::two_level:
            break;
        case Kind::fixed:
            if (!a.grouping || a.grouping->m() != m_) {
                throw ArgumentError("approach '" + a.label + "': grouping does not cover the bottom series");
            }
            g = *a.grouping;
            break;
        case Kind::cluster:
            g = clusters_.at(a.cluster);
            break;
        case Kind::grouped: {
            std::vector<Grouping> parts;
            for (const auto& p : a.parts) {
                parts.push_back(resolve(p, nullptr));
            }
            g = grouped_hierarchy(parts);
            break;
        }
        case Kind::base:
        case Kind::combination:
            throw ArgumentError("approach '" + a.label + "' has no single grouping");
        }
        if (a.permutation) {
            g = hts::twin(g, *a.permutation);
        }
        if (outer) {
            g = hts::twin(g, *outer);
        }
        return g;
    }

    // Top and bottom rows of the reconciled forecasts for a grouping.
    const Eigen::MatrixXd& reconciled(const Grouping& g) {
        std::string sig;
        for (int r = 0; r < g.rows(); ++r) {
            sig += g.row_key(r);
            sig += '|';
        }
        auto it = reconciled_.find(sig);
        if (it != reconciled_.end()) {
            return it->second;
        }
        std::vector<std::string> keys{top_key()};
        for (int r = 0; r < g.rows(); ++r) {
            keys.push_back(g.row_key(r));
        }
        for (int j = 0; j < m_; ++j) {
            keys.push_back(one_hot(m_, j));
        }
        ensure(keys);
        const auto n = static_cast<Eigen::Index>(keys.size());
        Eigen::MatrixXd yhat(n, h_);
        Eigen::MatrixXd res(bottom_.rows(), n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& f = fit(keys[static_cast<size_t>(i)]);
            yhat.row(i) = f.forecast.transpose();
            res.col(i) = f.residuals;
        }
        const auto w = estimate_w(res, opt_.method);
        const auto r = reconcile(summing_matrix(g), w, yhat);
        return reconciled_.emplace(sig, top_and_bottom(r.ytilde, m_)).first->second;
    }

    Eigen::MatrixXd base_top_bottom() {
        std::vector<std::string> keys{top_key()};
        for (int j = 0; j < m_; ++j) {
            keys.push_back(one_hot(m_, j));
        }
        ensure(keys);
        Eigen::MatrixXd out(m_ + 1, h_);
        for (int i = 0; i <= m_; ++i) {
            out.row(i) = fit(keys[static_cast<size_t>(i)]).forecast.transpose();
        }
        return out;
    }

    // Forecasts and middle-row count for one approach.
    std::pair<Eigen::MatrixXd, int> evaluate(const ApproachSpec& a) {
        if (a.kind == Kind::base) {
            return {base_top_bottom(), 0};
        }
        if (a.kind == Kind::combination) {
            std::vector<Eigen::MatrixXd> parts;
            for (const auto& p : a.parts) {
                parts.push_back(reconciled(resolve(p, a.permutation ? &*a.permutation : nullptr)));
            }
            return {combine(parts), 0};
        }
        const Grouping g = resolve(a, nullptr);
        return {reconciled(g), g.rows()};
    }

private:
    std::string describe(const std::string& key) const {
        const auto ones = std::count(key.begin(), key.end(), '1');
        if (ones == m_) {
            return "top";
        }
        if (ones == 1) {
            return "bottom " + std::to_string(key.find('1'));
        }
        return "middle " + key;
    }

    const Eigen::MatrixXd& bottom_;
    int m_;
    int s_;
    int h_;
    const BacktestOptions& opt_;
    int threads_;
    std::map<std::string, SeriesForecast> cache_;
    std::map<std::string, Grouping> clusters_;
    std::map<std::string, Eigen::MatrixXd> reconciled_;
};

} // namespace

EvalReport run_backtest(const SeriesPanel& panel, const std::vector<ApproachSpec>& approaches, const WindowPlan& plan,
                        const BacktestOptions& opt) {
    if (approaches.empty()) {
        throw ArgumentError("run_backtest needs at least one approach");
    }
    if (plan.total_length != panel.length()) {
        throw ArgumentError("window plan length " + std::to_string(plan.total_length) + " does not match panel length " +
                            std::to_string(panel.length()));
    }
    const int windows = plan.windows();
    const int m = panel.bottom_count();
    const int s = panel.seasonal_period();
    const int h = plan.horizon;
    const auto J = static_cast<int>(approaches.size());
    {
        std::set<std::string> labels;
        for (const auto& a : approaches) {
            if (!labels.insert(a.label).second) {
                throw ConfigError("duplicate approach label '" + a.label + "'");
            }
        }
    }
    std::set<std::string> cluster_names;
    for (const auto& a : approaches) {
        collect_clusters(a, cluster_names);
    }

    const Eigen::MatrixXd bottom = panel.bottom();
    const Eigen::VectorXd top = bottom.rowwise().sum();
    const int outer = std::min(std::max(1, opt.threads), windows);
    const int inner = outer == 1 ? std::max(1, opt.threads) : 1;

    std::vector<WindowResult> results(static_cast<size_t>(windows));
    parallel_for(windows, outer, [&](int w) {
        const int T = plan.train_length(w);
        try {
            const Eigen::MatrixXd train = bottom.topRows(T);
            Window win(train, s, h, opt, inner);
            win.prepare_clusters(cluster_names);
            WindowResult r;
            r.scores.resize(J);
            r.series_scores.resize(J, m + 1);
            r.middle.resize(J);
            for (int j = 0; j < J; ++j) {
                auto [f, middle] = win.evaluate(approaches[static_cast<size_t>(j)]);
                r.middle(j) = middle;
                for (int i = 0; i <= m; ++i) {
                    const Eigen::VectorXd y = i == 0 ? Eigen::VectorXd(top) : Eigen::VectorXd(bottom.col(i - 1));
                    const Eigen::VectorXd fr = f.row(i).transpose();
                    r.series_scores(j, i) = rmsse(std::span<const double>(y.data(), static_cast<size_t>(T)),
                                                  std::span<const double>(y.data() + T, static_cast<size_t>(h)),
                                                  std::span<const double>(fr.data(), static_cast<size_t>(h)), s);
                }
                r.scores(j) = r.series_scores.row(j).mean();
                if (opt.keep_forecasts) {
                    r.forecasts.push_back(std::move(f));
                }
            }
            results[static_cast<size_t>(w)] = std::move(r);
        } catch (const Error& e) {
            rethrow_with_context(e, "window " + std::to_string(w + 1) + " (training length " + std::to_string(T) +
                                        "): ");
        }
    });

    EvalReport rep;
    for (const auto& a : approaches) {
        rep.labels.push_back(a.label);
    }
    rep.series_ids.push_back(panel.ids()[static_cast<size_t>(panel.top_column())]);
    for (const auto& id : panel.bottom_ids()) {
        rep.series_ids.push_back(id);
    }
    rep.rmsse.resize(windows, J);
    rep.middle_rows.resize(windows, J);
    for (int w = 0; w < windows; ++w) {
        auto& r = results[static_cast<size_t>(w)];
        rep.train_lengths.push_back(plan.train_length(w));
        rep.rmsse.row(w) = r.scores.transpose();
        rep.middle_rows.row(w) = r.middle.transpose();
        rep.series_rmsse.push_back(std::move(r.series_scores));
        if (opt.keep_forecasts) {
            rep.forecasts.push_back(std::move(r.forecasts));
        }
    }
    return rep;
}

Eigen::MatrixXd rank_rows(const Eigen::MatrixXd& scores) {
    Eigen::MatrixXd ranks(scores.rows(), scores.cols());
    std::vector<Eigen::Index> idx(static_cast<size_t>(scores.cols()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return scores(r, a) < scores(r, b); });
        size_t i = 0;
        while (i < idx.size()) {
            size_t j = i + 1;
            while (j < idx.size() && scores(r, idx[j]) == scores(r, idx[i])) {
                ++j;
            }
            const double avg = 0.5 * static_cast<double>(i + 1 + j); // mean of ranks i+1..j
            for (size_t t = i; t < j; ++t) {
                ranks(r, idx[t]) = avg;
            }
            i = j;
        }
    }
    return ranks;
}

double studentized_range_cdf(double q, int k) {
    if (k < 2) {
        throw ArgumentError("studentized range needs k >= 2");
    }
    if (q <= 0.0) {
        return 0.0;
    }
    auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    auto f = [&](double z) {
        const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        const double d = Phi(z) - Phi(z - q);
        return phi * std::pow(std::max(d, 0.0), k - 1);
    };
    using boost::math::quadrature::gauss_kronrod;
    const double inf = std::numeric_limits<double>::infinity();
    const double integral = gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-13);
    return std::min(1.0, k * integral);
}

double studentized_range_quantile(double alpha, int k) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ArgumentError("alpha must lie in (0, 1)");
    }
    const double target = 1.0 - alpha;
    auto g = [&](double q) { return studentized_range_cdf(q, k) - target; };
    double hi = 4.0;
    while (g(hi) < 0.0) {
        hi *= 2.0;
    }
    std::uintmax_t iters = 200;
    const auto [lo_q, hi_q] =
        boost::math::tools::toms748_solve(g, 1e-8, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (lo_q + hi_q);
}

McbResult mcb(const Eigen::MatrixXd& scores, double alpha) {
    const auto N = static_cast<int>(scores.rows());
    const auto J = static_cast<int>(scores.cols());
    if (N < 2 || J < 2) {
        throw ArgumentError("MCB needs at least two windows and two approaches");
    }
    if (!scores.allFinite()) {
        throw ArgumentError("MCB scores contain non-finite values");
    }
    const Eigen::MatrixXd ranks = rank_rows(scores);
    McbResult r;
    r.alpha = alpha;
    r.windows = N;
    const Eigen::VectorXd mean = ranks.colwise().mean().transpose();
    r.mean_ranks.assign(mean.data(), mean.data() + J);
    r.q = studentized_range_quantile(alpha, J);
    r.half_width = 0.5 * r.q * std::sqrt(J * (J + 1.0) / (6.0 * N));
    r.best = static_cast<int>(std::min_element(r.mean_ranks.begin(), r.mean_ranks.end()) - r.mean_ranks.begin());
    for (int j = 0; j < J; ++j) {
        r.indistinguishable.push_back(std::fabs(r.mean_ranks[static_cast<size_t>(j)] -
                                                r.mean_ranks[static_cast<size_t>(r.best)]) <= 2.0 * r.half_width);
    }
    return r;
}

std::string mcb_svg(const McbResult& result, const std::vector<std::string>& labels, const std::string& title) {
    const auto J = static_cast<int>(result.mean_ranks.size());
    if (static_cast<int>(labels.size()) != J) {
        throw ArgumentError("mcb_svg: label count does not match");
    }
    std::vector<int> order(static_cast<size_t>(J));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return result.mean_ranks[static_cast<size_t>(a)] < result.mean_ranks[static_cast<size_t>(b)];
    });
    const double left = 200.0;
    const double right = 40.0;
    const double plot_w = 480.0;
    const double row_h = 22.0;
    const double top = title.empty() ? 20.0 : 44.0;
    const double height = top + row_h * J + 40.0;
    double lo = 1e300;
    double hi = -1e300;
    for (double r : result.mean_ranks) {
        lo = std::min(lo, r - result.half_width);
        hi = std::max(hi, r + result.half_width);
    }
    const double pad = 0.05 * std::max(hi - lo, 1e-9);
    lo -= pad;
    hi += pad;
    auto x = [&](double r) { return left + (r - lo) / (hi - lo) * plot_w; };

    std::ostringstream svg;
    svg << std::fixed << std::setprecision(2);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + right << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) {
        svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title
            << "</text>\n";
    }
    const double best = result.mean_ranks[static_cast<size_t>(result.best)];
    svg << "<rect x=\"" << x(best - result.half_width) << "\" y=\"" << top << "\" width=\""
        << x(best + result.half_width) - x(best - result.half_width) << "\" height=\"" << row_h * J
        << "\" fill=\"#dde8f5\"/>\n";
    for (int i = 0; i < J; ++i) {
        const int j = order[static_cast<size_t>(i)];
        const double r = result.mean_ranks[static_cast<size_t>(j)];
        const double y = top + row_h * (i + 0.5);
        const char* colour = j == result.best ? "#1f5fa8" : (result.indistinguishable[static_cast<size_t>(j)] ? "#555555" : "#b03a2e");
        std::string label = labels[static_cast<size_t>(j)];
        for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>>{{"&", "&amp;"}, {"<", "&lt;"}, {">", "&gt;"}}) {
            for (size_t p = label.find(from); p != std::string::npos; p = label.find(from, p + to.size())) {
                label.replace(p, from.size(), to);
            }
        }
        svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << label << " - "
            << r << "</text>\n";
        svg << "<line x1=\"" << x(r - result.half_width) << "\" y1=\"" << y << "\" x2=\"" << x(r + result.half_width)
            << "\" y2=\"" << y << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        svg << "<circle cx=\"" << x(r) << "\" cy=\"" << y << "\" r=\"4\" fill=\"" << colour << "\"/>\n";
    }
    const double axis_y = top + row_h * J + 6;
    svg << "<line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\"" << left + plot_w << "\" y2=\"" << axis_y
        << "\" stroke=\"black\"/>\n";
    const int tick_step = std::max(1, static_cast<int>(std::round((hi - lo) / 10.0)));
    for (int tick = static_cast<int>(std::ceil(lo)); tick <= static_cast<int>(std::floor(hi)); tick += tick_step) {
        svg << "<text x=\"" << x(tick) << "\" y=\"" << axis_y + 16 << "\" text-anchor=\"middle\">" << tick
            << "</text>\n";
    }
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 4 << "\" text-anchor=\"middle\">Mean rank</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace hts
