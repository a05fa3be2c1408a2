#include "hts/simulate.hpp"

#include "hts/errors.hpp"
#include "hts/rng.hpp"

#include <cmath>
#include <cstdio>

namespace hts {

void DgpConfig::validate() const {
    if (m < 6 || m % 6 != 0) {
        throw ConfigError("m must be a positive multiple of 6");
    }
    if (length < 2 || length % 2 != 0) {
        throw ConfigError("series length must be even");
    }
    if (var_xi < 0.0 || var_eps_up < 0.0 || var_eps_down < 0.0) {
        throw ConfigError("noise variances must be non-negative");
    }
    if (beta_range[0] > beta_range[1] || gamma_range[0] > gamma_range[1]) {
        throw ConfigError("uniform ranges must satisfy lo <= hi");
    }
}

double cluster_alpha(const DgpConfig& cfg, int label) {
    switch (label) {
    case 1:
    case 2:
        return cfg.alphas[0];
    case 3:
    case 4:
        return cfg.alphas[2];
    case 5:
    case 6:
        return cfg.alphas[1];
    default:
        throw ArgumentError("cluster label must be in 1..6");
    }
}

int cluster_delta(int label) {
    if (label < 1 || label > 6) {
        throw ArgumentError("cluster label must be in 1..6");
    }
    return label % 2 == 1 ? 1 : 0;
}

SimulatedPanel simulate_panel(const DgpConfig& cfg) {
    cfg.validate();
    const int per_cluster = cfg.m / 6;
    Rng rng(cfg.seed);

    Eigen::MatrixXd bottom(cfg.length, cfg.m);
    std::vector<int> labels(static_cast<size_t>(cfg.m));
    std::vector<std::string> ids;
    ids.reserve(static_cast<size_t>(cfg.m));

    const double sd_xi = std::sqrt(cfg.var_xi);
    for (int i = 0; i < cfg.m; ++i) {
        const int label = i / per_cluster + 1;
        labels[static_cast<size_t>(i)] = label;
        char id[32];
        std::snprintf(id, sizeof id, "s%03d", i + 1);
        ids.emplace_back(id);

        const double alpha = cluster_alpha(cfg, label);
        const int delta = cluster_delta(label);
        double sd_eps = 0.0;
        if (alpha > 0.0) {
            sd_eps = std::sqrt(cfg.var_eps_up);
        } else if (alpha < 0.0) {
            sd_eps = std::sqrt(cfg.var_eps_down);
        }
        const double beta = rng.uniform(cfg.beta_range[0], cfg.beta_range[1]);
        const double gamma = rng.uniform(cfg.gamma_range[0], cfg.gamma_range[1]);

        for (int t = 1; t <= cfg.length; ++t) {
            const double eps = sd_eps > 0.0 ? sd_eps * rng.normal() : 0.0;
            const double xi = sd_xi > 0.0 ? sd_xi * rng.normal() : 0.0;
            const double season = (t - delta) % 2 == 0 ? beta : gamma;
            bottom(t - 1, i) = alpha * t + eps + season + xi;
        }
    }
    return SimulatedPanel{panel_from_bottom(bottom, std::move(ids), 2000 * 12, 2), std::move(labels)};
}

Grouping true_grouping(const std::vector<int>& labels, const std::string& scheme) {
    std::vector<std::vector<int>> groups; // clusters per row
    std::vector<std::string> names;
    if (scheme == "trend-season") {
        groups = {{1}, {2}, {3}, {4}, {5}, {6}};
        names = {"increase-odd", "increase-even", "none-odd", "none-even", "decrease-odd", "decrease-even"};
    } else if (scheme == "trend1") {
        groups = {{1, 2}, {3, 4}, {5, 6}};
        names = {"increase", "none", "decrease"};
    } else if (scheme == "trend2") {
        groups = {{1, 2, 5, 6}, {3, 4}};
        names = {"trend", "no-trend"};
    } else if (scheme == "season") {
        groups = {{1, 3, 5}, {2, 4, 6}};
        names = {"odd", "even"};
    } else {
        throw ConfigError("unknown true-grouping scheme '" + scheme + "'");
    }
    const auto m = static_cast<Eigen::Index>(labels.size());
    for (int l : labels) {
        if (l < 1 || l > 6) {
            throw ArgumentError("cluster label must be in 1..6");
        }
    }
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<std::string> kept;
    for (size_t g = 0; g < groups.size(); ++g) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            for (int c : groups[g]) {
                if (labels[static_cast<size_t>(j)] == c) {
                    row(j) = 1.0;
                }
            }
        }
        if (row.sum() > 0.0) {
            rows.push_back(row);
            kept.push_back(names[g]);
        }
    }
    Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), m);
    for (size_t r = 0; r < rows.size(); ++r) {
        c.row(static_cast<Eigen::Index>(r)) = rows[r];
    }
    return Grouping(std::move(c), std::move(kept));
}

} // namespace hts
