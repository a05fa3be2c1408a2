#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace hts::detail {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

// Plain Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
// Stops when the spread of objective values across the simplex falls below
// `ftol * (1 + |f_best|)` or after `max_evals` evaluations.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const std::vector<double>& step, double ftol,
                                    int max_evals) {
    const size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };
    for (size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += step[i];
    }
    for (size_t i = 0; i <= n; ++i) {
        vals[i] = eval(pts[i]);
    }

    std::vector<size_t> order(n + 1);
    std::vector<double> centroid(n);
    std::vector<double> trial(n);
    std::vector<double> trial2(n);
    while (true) {
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
        const size_t best = order.front();
        const size_t worst = order.back();
        const size_t second = n > 0 ? order[n - 1] : best;
        if (vals[worst] - vals[best] <= ftol * (1.0 + std::fabs(vals[best])) || evals >= max_evals || n == 0) {
            return {pts[best], vals[best], evals};
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (size_t d = 0; d < n; ++d) {
                centroid[d] += pts[i][d];
            }
        }
        for (double& c : centroid) {
            c /= static_cast<double>(n);
        }

        for (size_t d = 0; d < n; ++d) {
            trial[d] = centroid[d] + (centroid[d] - pts[worst][d]);
        }
        const double fr = eval(trial);
        if (fr < vals[best]) {
            for (size_t d = 0; d < n; ++d) {
                trial2[d] = centroid[d] + 2.0 * (centroid[d] - pts[worst][d]);
            }
            const double fe = eval(trial2);
            if (fe < fr) {
                pts[worst] = trial2;
                vals[worst] = fe;
            } else {
                pts[worst] = trial;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = trial;
            vals[worst] = fr;
            continue;
        }
        // Contraction, outside if the reflection improved on the worst point.
        const bool outside = fr < vals[worst];
        for (size_t d = 0; d < n; ++d) {
            trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d])
                                : centroid[d] + 0.5 * (pts[worst][d] - centroid[d]);
        }
        const double fc = eval(trial2);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = trial2;
            vals[worst] = fc;
            continue;
        }
        for (size_t i = 0; i <= n; ++i) {
            if (i == best) {
                continue;
            }
            for (size_t d = 0; d < n; ++d) {
                pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
            }
            vals[i] = eval(pts[i]);
        }
    }
}

} // namespace hts::detail
