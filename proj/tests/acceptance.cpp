// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance <path-to-htsc> [--reps N] [--threads N] [--artifacts DIR]

#include "hts/cluster.hpp"
#include "hts/distance.hpp"
#include "hts/errors.hpp"
#include "hts/evaluate.hpp"
#include "hts/experiment.hpp"
#include "hts/reconcile.hpp"
#include "hts/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace hts;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------- 1, 2, 3

struct SimulationOutcomes {
    Outcome table;
    Outcome twins;
    Outcome combination;
};

SimulationOutcomes simulation_criteria(int reps, int threads, const fs::path& artifacts) {
    std::ostringstream cfg_text;
    cfg_text << R"({"seed": 2024,
      "data": {"source": "simulate", "replications": )"
             << reps << R"(, "m": 120, "length": 144},
      "approaches": ["base", "two-level", "Cluster-trend1", "Cluster-trend-season", "Cluster-trend2",
                     "Cluster-season", "combination"],
      "combination": ["Cluster-trend1", "Cluster-trend-season", "Cluster-trend2", "Cluster-season"],
      "twins": {"source": "Cluster-trend-season", "count": 20},
      "plan": {"initial_length": 132, "horizon": 12}})";
    auto cfg = parse_config(cfg_text.str());
    cfg.threads = threads;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!artifacts.empty()) {
        write_artifacts(cfg, res, artifacts);
    }
    std::fprintf(stderr, "simulation: %d replications in %.1f s\n", reps, secs);

    auto col = [&](const std::string& label) {
        const auto it = std::find(res.labels.begin(), res.labels.end(), label);
        if (it == res.labels.end()) {
            throw ArgumentError("missing approach " + label);
        }
        return static_cast<Eigen::Index>(it - res.labels.begin());
    };
    const Eigen::MatrixXd& s = res.scores; // one window per replication
    const std::vector<std::string> clusters{"Cluster-trend1", "Cluster-trend-season", "Cluster-trend2",
                                            "Cluster-season"};
    SimulationOutcomes out;

    {
        const double base = s.col(col("Base")).mean();
        const double two = s.col(col("Two-level")).mean();
        bool ok = std::fabs(base - 0.7764) <= 0.02 && std::fabs(two - 0.5971) <= 0.02;
        std::string d = "Base " + fmt("%.4f", base) + " (target 0.7764 +- 0.02), Two-level " + fmt("%.4f", two) +
                        " (target 0.5971 +- 0.02)";
        for (const auto& c : clusters) {
            const double v = s.col(col(c)).mean();
            ok = ok && std::fabs(v - two) <= 0.005;
            d += ", " + c + " " + fmt("%.4f", v);
        }
        int base_worst = 0;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            double others = s(r, col("Two-level"));
            for (const auto& c : clusters) {
                others = std::max(others, s(r, col(c)));
            }
            base_worst += s(r, col("Base")) > others ? 1 : 0;
        }
        ok = ok && base_worst >= static_cast<int>(std::ceil(0.95 * static_cast<double>(s.rows())));
        d += "; Base strictly worst in " + std::to_string(base_worst) + "/" + std::to_string(s.rows()) +
             " (need >= 95%)";
        out.table = {ok, d};
    }
    {
        const auto& t = *res.twins;
        out.twins = {t.strictly_inside, "mean rank " + fmt("%.3f", t.mean_ranks[0]) + " vs twins " +
                                            fmt("%.3f", t.best_twin_rank) + ".." + fmt("%.3f", t.worst_twin_rank) +
                                            " (position " + std::to_string(t.position) + " of " +
                                            std::to_string(t.labels.size()) + ")"};
    }
    {
        int wins = 0;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            double best = s(r, col(clusters[0]));
            for (const auto& c : clusters) {
                best = std::min(best, s(r, col(c)));
            }
            wins += s(r, col("Combination")) <= best ? 1 : 0;
        }
        const bool ok = wins >= static_cast<int>(std::ceil(0.6 * static_cast<double>(s.rows())));
        out.combination = {ok, "combination <= best cluster hierarchy in " + std::to_string(wins) + "/" +
                                   std::to_string(s.rows()) + " replications (need >= 60%); mean " +
                                   fmt("%.4f", s.col(col("Combination")).mean())};
    }
    return out;
}

// ---------------------------------------------------------------- 4

Eigen::MatrixXd random_spd(Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a(i, j) = rng.normal();
        }
    }
    Eigen::MatrixXd w = a * a.transpose() / n;
    for (int i = 0; i < n; ++i) {
        w(i, i) += rng.uniform(0.1, 1.0);
    }
    return w;
}

Outcome reconciliation_criterion() {
    Rng rng(derive_seed(4, "acceptance-reconcile"));
    double coh = 0.0;
    double qr = 0.0;
    double idem = 0.0;
    double scale = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const int m = 2 + static_cast<int>(rng.below(30));
        const int k_cap = std::min(15, 50 - 1 - m);
        const int k_target = static_cast<int>(rng.below(static_cast<std::uint64_t>(k_cap + 1)));
        std::set<std::vector<int>> rows;
        Eigen::MatrixXd c(0, m);
        for (int attempt = 0; attempt < 200 && static_cast<int>(rows.size()) < k_target; ++attempt) {
            std::vector<int> bits(static_cast<size_t>(m));
            int ones = 0;
            for (auto& b : bits) {
                b = rng.uniform() < 0.4 ? 1 : 0;
                ones += b;
            }
            if (ones == 0 || !rows.insert(bits).second) {
                continue;
            }
            c.conservativeResize(c.rows() + 1, m);
            for (int j = 0; j < m; ++j) {
                c(c.rows() - 1, j) = bits[static_cast<size_t>(j)];
            }
        }
        const Eigen::MatrixXd s = summing_matrix(c.rows() ? Grouping(c) : Grouping(m));
        const auto n = static_cast<int>(s.rows());
        Eigen::VectorXd yhat(n);
        for (int i = 0; i < n; ++i) {
            yhat(i) = rng.normal();
        }
        CovEstimate w;
        w.w = random_spd(rng, n);
        const auto r = reconcile(s, w, yhat);
        coh = std::max(coh, (r.ytilde - s * r.btilde).cwiseAbs().maxCoeff());

        const auto again = reconcile(s, w, r.ytilde);
        idem = std::max(idem, (again.ytilde - r.ytilde).cwiseAbs().maxCoeff());
        CovEstimate scaled = w;
        scaled.w *= rng.uniform(0.01, 100.0);
        scale = std::max(scale, (reconcile(s, scaled, yhat).ytilde - r.ytilde).cwiseAbs().maxCoeff());

        CovEstimate id;
        id.w = Eigen::MatrixXd::Identity(n, n);
        id.method = CovMethod::identity;
        const Eigen::VectorXd oracle = s * s.householderQr().solve(yhat);
        qr = std::max(qr, (reconcile(s, id, yhat).ytilde - oracle).cwiseAbs().maxCoeff());
    }
    const bool ok = coh <= 1e-8 && qr <= 1e-10 && idem <= 1e-10 && scale <= 1e-10;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "1000 instances: coherence %.2e (<= 1e-8), QR oracle %.2e, idempotence %.2e, scaling %.2e "
                  "(<= 1e-10)",
                  coh, qr, idem, scale);
    return {ok, buf};
}

// ---------------------------------------------------------------- 5

Outcome hand_oracle_criterion() {
    Eigen::MatrixXd s(3, 2);
    s << 1, 1, 1, 0, 0, 1;
    Eigen::VectorXd yhat(3);
    yhat << 10, 4, 5;
    CovEstimate id;
    id.w = Eigen::MatrixXd::Identity(3, 3);
    id.method = CovMethod::identity;
    CovEstimate wls;
    wls.w = Eigen::Vector3d(2, 1, 1).asDiagonal();
    wls.method = CovMethod::diagonal;
    const Eigen::Vector3d want_ols(29.0 / 3.0, 13.0 / 3.0, 16.0 / 3.0);
    const Eigen::Vector3d want_wls(9.5, 4.25, 5.25);
    double err = 0.0;
    err = std::max(err, (reconcile(s, id, yhat).ytilde - want_ols).cwiseAbs().maxCoeff());
    err = std::max(err, (reconcile(s, wls, yhat).ytilde - want_wls).cwiseAbs().maxCoeff());
    const std::vector<double> train{1, 3, 2, 4};
    const std::vector<double> actual{3, 5};
    const std::vector<double> fc{2, 4};
    err = std::max(err, std::fabs(rmsse(train, actual, fc, 2) - 1.0));
    const std::vector<double> a{0, 0, 1};
    const std::vector<double> b{0, 1, 1};
    const std::vector<double> c{1, 2, 3};
    const std::vector<double> d{2, 3, 4};
    err = std::max(err, std::fabs(dtw_distance(a, b) - 0.0));
    err = std::max(err, std::fabs(dtw_distance(c, d) - 2.0));
    err = std::max(err, std::fabs(dtw_distance(c, c) - 0.0));
    return {err <= 1e-10, "max deviation " + fmt("%.2e", err) + " over 2 reconciliation, 1 RMSSE and 3 DTW examples"};
}

// ---------------------------------------------------------------- 6

Outcome clustering_criterion() {
    Rng rng(derive_seed(6, "acceptance-cluster"));
    int tree_bad = 0;
    int swap_bad = 0;
    int asw_bad = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        const int m = 3 + static_cast<int>(rng.below(38));
        Eigen::MatrixXd d(m, m);
        if (inst % 2 == 0) {
            const int p = 1 + static_cast<int>(rng.below(5));
            Eigen::MatrixXd x(m, p);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < p; ++j) {
                    x(i, j) = rng.normal();
                }
            }
            d = euclidean_matrix(x);
        } else {
            d.setZero();
            for (int i = 0; i < m; ++i) {
                for (int j = i + 1; j < m; ++j) {
                    d(i, j) = d(j, i) = rng.uniform(0.01, 1.0);
                }
            }
        }
        const auto tree = ward_tree(d);
        if (static_cast<int>(tree.nodes.size()) != 2 * m - 1 || grouping_from_tree(tree).rows() != m - 2) {
            ++tree_bad;
        }
        const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 2)));
        const auto p = pam(d, k);
        for (size_t i = 1; i < p.cost_history.size(); ++i) {
            if (p.cost_history[i] > p.cost_history[i - 1]) {
                ++swap_bad;
                break;
            }
        }
        std::vector<int> labels(static_cast<size_t>(m));
        for (auto& l : labels) {
            l = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        }
        for (double a : {p.asw, average_silhouette(d, labels)}) {
            if (!(a >= -1.0 && a <= 1.0)) {
                ++asw_bad;
            }
        }
    }
    return {tree_bad == 0 && swap_bad == 0 && asw_bad == 0,
            "1000 matrices: tree shape violations " + std::to_string(tree_bad) + ", SWAP cost increases " +
                std::to_string(swap_bad) + ", ASW out of [-1,1] " + std::to_string(asw_bad)};
}

// ---------------------------------------------------------------- 7

Outcome window_criterion() {
    const int a = make_plan(228, 96, 12).windows();
    const int b = make_plan(252, 96, 12).windows();
    return {a == 121 && b == 145, "T=228 -> " + std::to_string(a) + " (121), T=252 -> " + std::to_string(b) + " (145)"};
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return rc;
}

// Runs `htsc run --config`, then `htsc run --manifest` into a second
// directory, and compares every file byte for byte.
std::string determinism_case(const std::string& htsc, const fs::path& dir, const std::string& config) {
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << config;
    const auto a = dir / "first";
    const auto b = dir / "rerun";
    const std::string q = "\"";
    if (shell(q + htsc + q + " --threads 2 run --config " + q + (dir / "config.json").string() + q + " --out " + q +
              a.string() + q + " > " + q + (dir / "first.log").string() + q + " 2>&1") != 0) {
        return "initial run failed: " + slurp(dir / "first.log");
    }
    if (shell(q + htsc + q + " --threads 1 run --manifest " + q + (a / "manifest.json").string() + q + " --out " +
              q + b.string() + q + " > " + q + (dir / "rerun.log").string() + q + " 2>&1") != 0) {
        return "manifest rerun failed: " + slurp(dir / "rerun.log");
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) {
            return "differs: " + name.string();
        }
        ++files;
    }
    return files >= 6 ? std::string{} : "too few outputs (" + std::to_string(files) + ")";
}

Outcome determinism_criterion(const std::string& htsc, const fs::path& work) {
    fs::remove_all(work);
    const std::string sim = R"({"seed": 77,
      "data": {"source": "simulate", "replications": 3, "m": 24, "length": 48},
      "approaches": ["base", "two-level", "Cluster-trend-season", "TS-EUC-ME", "ER-DTW-HC", "TSF-EUC-HC",
                     "ERF-EUC-ME", "grouped", "combination"],
      "grouped": ["TS-EUC-ME", "ER-DTW-HC"],
      "combination": ["Cluster-trend-season", "TS-EUC-ME", "TSF-EUC-HC"],
      "twins": {"source": "combination", "count": 3},
      "plan": {"initial_length": 40, "horizon": 6, "step": 2},
      "keep_forecasts": true})";
    std::string err = determinism_case(htsc, work / "simulate", sim);
    if (!err.empty()) {
        return {false, "simulated run: " + err};
    }

    // A csv panel with a natural hierarchy, written from a simulated draw.
    DgpConfig dgp;
    dgp.m = 12;
    dgp.length = 40;
    dgp.seed = 5;
    const auto drawn = simulate_panel(dgp);
    fs::create_directories(work / "csv");
    write_panel(drawn.panel, work / "csv" / "panel.csv");
    std::ofstream(work / "csv" / "natural.json")
        << R"({"up": ["s001","s002","s003","s004"], "flat": ["s005","s006","s007","s008"],
              "down": ["s009","s010","s011","s012"]})";
    const std::string csv = R"({"data": {"source": "csv", "path": "panel.csv", "seasonal_period": 2,
        "hierarchy": "natural.json"}, "approaches": ["two-level", "natural", "TS-DTW-ME"],
        "plan": {"initial_length": 30, "horizon": 4}, "reconciliation": "wls"})";
    err = determinism_case(htsc, work / "csv", csv);
    if (!err.empty()) {
        return {false, "csv run: " + err};
    }
    return {true, "simulated (twins, grouped, combination) and csv (natural) runs re-executed from their manifests "
                  "reproduce every output byte for byte"};
}

// ---------------------------------------------------------------- 9

double enumerate_paths(const std::vector<double>& x, const std::vector<double>& y, size_t i, size_t j, double acc) {
    acc += std::fabs(x[i] - y[j]);
    if (i + 1 == x.size() && j + 1 == y.size()) {
        return acc;
    }
    double best = INFINITY;
    if (i + 1 < x.size()) {
        best = std::min(best, enumerate_paths(x, y, i + 1, j, acc));
    }
    if (j + 1 < y.size()) {
        best = std::min(best, enumerate_paths(x, y, i, j + 1, acc));
    }
    if (i + 1 < x.size() && j + 1 < y.size()) {
        best = std::min(best, enumerate_paths(x, y, i + 1, j + 1, acc));
    }
    return best;
}

Outcome dtw_criterion() {
    Rng rng(derive_seed(9, "acceptance-dtw"));
    int mismatches = 0;
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<double> x(1 + rng.below(5));
        std::vector<double> y(1 + rng.below(5));
        // Grid values in steps of 0.25 keep every partial sum exact.
        for (auto& v : x) {
            v = static_cast<double>(rng.below(17)) * 0.25 - 2.0;
        }
        for (auto& v : y) {
            v = static_cast<double>(rng.below(17)) * 0.25 - 2.0;
        }
        mismatches += dtw_distance(x, y) == enumerate_paths(x, y, 0, 0, 0.0) ? 0 : 1;
    }
    return {mismatches == 0, "200 grid instances of length <= 5: " + std::to_string(mismatches) + " mismatches"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::string htsc;
    int reps = 100;
    int threads = 1;
    std::string artifacts;
    std::string work = (fs::temp_directory_path() / "hts_acceptance").string();
    app.add_option("htsc", htsc, "Path to the htsc executable")->required();
    app.add_option("--reps", reps, "Simulation replications")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads")->capture_default_str();
    app.add_option("--artifacts", artifacts, "Write the simulation experiment's artifacts here");
    app.add_option("--work", work, "Scratch directory for the determinism runs")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    std::map<int, Outcome> results;
    auto guarded = [&](int id, const std::function<Outcome()>& fn) {
        try {
            results[id] = fn();
        } catch (const std::exception& e) {
            results[id] = {false, std::string("error: ") + e.what()};
        }
    };
    guarded(4, reconciliation_criterion);
    guarded(5, hand_oracle_criterion);
    guarded(6, clustering_criterion);
    guarded(7, window_criterion);
    guarded(9, dtw_criterion);
    guarded(8, [&] { return determinism_criterion(htsc, work); });
    try {
        const auto sim = simulation_criteria(reps, threads, artifacts);
        results[1] = sim.table;
        results[2] = sim.twins;
        results[3] = sim.combination;
    } catch (const std::exception& e) {
        for (int id : {1, 2, 3}) {
            results[id] = {false, std::string("error: ") + e.what()};
        }
    }

    const std::map<int, std::string> names{{1, "simulation table reproduction"},
                                           {2, "true clusters vs random twins"},
                                           {3, "combination vs best cluster hierarchy"},
                                           {4, "reconciliation correctness"},
                                           {5, "hand oracles"},
                                           {6, "clustering structure"},
                                           {7, "window arithmetic"},
                                           {8, "determinism from manifest"},
                                           {9, "DTW vs path enumeration"}};
    int failed = 0;
    for (const auto& [id, r] : results) {
        std::printf("%s criterion %d (%s): %s\n", r.pass ? "PASS" : "FAIL", id, names.at(id).c_str(),
                    r.detail.c_str());
        failed += r.pass ? 0 : 1;
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
