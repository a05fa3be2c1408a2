#pragma once

#include "hts/panel.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hts {

/// Additive trend + period-2 seasonality DGP with six trend x seasonality
/// clusters:
///
///   Y_t = alpha*t + eps_t + S_t + xi_t,  S_t = beta if (t - delta) even, else gamma
///
/// Clusters 1..6 are (increase, odd), (increase, even), (none, odd),
/// (none, even), (decrease, odd), (decrease, even); odd seasonality uses
/// delta = 1 and even seasonality delta = 0.
struct DgpConfig {
    int m = 120;
    int length = 144;
    std::array<double, 3> alphas{0.001, -0.002, 0.0}; // increase, decrease, none
    std::array<double, 2> beta_range{2.0, 3.0};
    std::array<double, 2> gamma_range{0.0, 1.0};
    double var_xi = 0.25;
    double var_eps_up = 2.5e-5;
    double var_eps_down = 4.9e-5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimulatedPanel {
    SeriesPanel panel;
    std::vector<int> labels; // true cluster per bottom series, 1..6
};

SimulatedPanel simulate_panel(const DgpConfig& cfg);

/// Trend slope of a cluster label under `cfg`.
double cluster_alpha(const DgpConfig& cfg, int label);
/// Seasonal offset delta of a cluster label (1 = odd, 0 = even).
int cluster_delta(int label);

/// Known-cluster groupings. `scheme` is one of "trend-season", "trend1",
/// "trend2" or "season"; anything else raises ConfigError.
Grouping true_grouping(const std::vector<int>& labels, const std::string& scheme);

} // namespace hts
