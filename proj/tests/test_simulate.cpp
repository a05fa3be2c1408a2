#include "hts/errors.hpp"
#include "hts/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace hts;

TEST_CASE("default DGP: 120 series, 20 per cluster, 144 observations") {
    DgpConfig cfg;
    auto sim = simulate_panel(cfg);
    CHECK(sim.panel.length() == 144);
    CHECK(sim.panel.bottom_count() == 120);
    CHECK(sim.panel.seasonal_period() == 2);
    std::map<int, int> counts;
    for (int l : sim.labels) {
        ++counts[l];
    }
    CHECK(counts.size() == 6);
    for (auto [label, c] : counts) {
        CHECK(c == 20);
    }
    CHECK((sim.panel.top() - sim.panel.bottom().rowwise().sum()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise-free DGP with beta = gamma is a pure line plus constant") {
    DgpConfig cfg;
    cfg.var_xi = 0.0;
    cfg.var_eps_up = 0.0;
    cfg.var_eps_down = 0.0;
    cfg.beta_range = {1.5, 1.5};
    cfg.gamma_range = {1.5, 1.5};
    auto sim = simulate_panel(cfg);
    auto b = sim.panel.bottom();
    for (int i = 0; i < cfg.m; ++i) {
        const double alpha = cluster_alpha(cfg, sim.labels[static_cast<size_t>(i)]);
        for (int t = 1; t <= cfg.length; ++t) {
            CHECK(b(t - 1, i) == doctest::Approx(alpha * t + 1.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("odd clusters peak at odd t, even clusters at even t") {
    DgpConfig cfg;
    cfg.var_xi = 0.0;
    cfg.var_eps_up = 0.0;
    cfg.var_eps_down = 0.0;
    cfg.alphas = {0.0, 0.0, 0.0};
    cfg.beta_range = {3.0, 3.0};
    cfg.gamma_range = {0.0, 0.0};
    auto sim = simulate_panel(cfg);
    auto b = sim.panel.bottom();
    for (int i = 0; i < cfg.m; ++i) {
        const bool odd = cluster_delta(sim.labels[static_cast<size_t>(i)]) == 1;
        CHECK(b(0, i) == (odd ? 3.0 : 0.0)); // t = 1
        CHECK(b(1, i) == (odd ? 0.0 : 3.0)); // t = 2
    }
}

TEST_CASE("seasonal peaks average E[beta] = 2.5 per even cluster") {
    // Mean over even t of (Y_t - alpha t) for delta = 0 series estimates the
    // average drawn beta; for 20 draws of U[2,3] the sd is 0.065.
    DgpConfig cfg;
    cfg.seed = 2024;
    auto sim = simulate_panel(cfg);
    auto b = sim.panel.bottom();
    for (int cluster : {2, 4, 6}) {
        double sum = 0.0;
        int n = 0;
        for (int i = 0; i < cfg.m; ++i) {
            if (sim.labels[static_cast<size_t>(i)] != cluster) {
                continue;
            }
            for (int t = 2; t <= cfg.length; t += 2) {
                sum += b(t - 1, i) - cluster_alpha(cfg, cluster) * t;
                ++n;
            }
        }
        CHECK(sum / n == doctest::Approx(2.5).epsilon(0.04));
    }
}

TEST_CASE("same seed gives a bit-identical panel, different seeds differ") {
    DgpConfig cfg;
    cfg.seed = 99;
    auto a = simulate_panel(cfg);
    auto b = simulate_panel(cfg);
    CHECK(a.panel.values() == b.panel.values());
    cfg.seed = 100;
    auto c = simulate_panel(cfg);
    CHECK(a.panel.values() != c.panel.values());
}

TEST_CASE("xi variance recovered from degenerate runs") {
    DgpConfig cfg;
    cfg.alphas = {0.0, 0.0, 0.0};
    cfg.beta_range = {1.0, 1.0};
    cfg.gamma_range = {1.0, 1.0};
    cfg.seed = 5;
    auto sim = simulate_panel(cfg);
    Eigen::MatrixXd x = sim.panel.bottom().array() - 1.0;
    const double n = static_cast<double>(x.size());
    CHECK(n == 17280.0);
    const double mean = x.sum() / n;
    const double var = (x.array() - mean).square().sum() / (n - 1.0);
    CHECK(var == doctest::Approx(0.25).epsilon(0.10));
}

TEST_CASE("true_grouping schemes") {
    auto labels = simulate_panel(DgpConfig{}).labels;
    auto sizes = [](const Grouping& g) {
        std::vector<int> out;
        for (int r = 0; r < g.rows(); ++r) {
            out.push_back(g.row_sum(r));
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(sizes(true_grouping(labels, "trend-season")) == std::vector<int>(6, 20));
    CHECK(sizes(true_grouping(labels, "trend1")) == std::vector<int>{40, 40, 40});
    CHECK(sizes(true_grouping(labels, "trend2")) == std::vector<int>{40, 80});
    CHECK(sizes(true_grouping(labels, "season")) == std::vector<int>{60, 60});
    CHECK_THROWS_AS(true_grouping(labels, "random"), ConfigError);

    // Partition property: every series belongs to exactly one row.
    for (const char* scheme : {"trend-season", "trend1", "trend2", "season"}) {
        auto g = true_grouping(labels, scheme);
        Eigen::RowVectorXd cover = g.matrix().colwise().sum();
        CHECK(cover == Eigen::RowVectorXd::Ones(120));
    }

    // trend2 puts clusters 3 and 4 in the no-trend row.
    auto g = true_grouping(labels, "trend2");
    for (int j = 0; j < 120; ++j) {
        const int l = labels[static_cast<size_t>(j)];
        CHECK(g.matrix()(1, j) == ((l == 3 || l == 4) ? 1.0 : 0.0));
    }
}

TEST_CASE("invalid DGP configs") {
    DgpConfig cfg;
    cfg.m = 100;
    CHECK_THROWS_AS(simulate_panel(cfg), ConfigError);
    cfg = DgpConfig{};
    cfg.length = 143;
    CHECK_THROWS_AS(simulate_panel(cfg), ConfigError);
    cfg = DgpConfig{};
    cfg.var_xi = -1.0;
    CHECK_THROWS_AS(simulate_panel(cfg), ConfigError);
}
