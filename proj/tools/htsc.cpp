// htsc: command-line front end for the hierarchy experiments.

#include "hts/baseforecast.hpp"
#include "hts/cluster.hpp"
#include "hts/combine.hpp"
#include "hts/errors.hpp"
#include "hts/experiment.hpp"
#include "hts/permute.hpp"
#include "hts/reconcile.hpp"
#include "hts/represent.hpp"
#include "hts/rng.hpp"
#include "hts/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PanelArgs {
    std::string panel;
    int period = 12;
    std::string hierarchy;
    std::string top_id = "Total";
};

void add_panel_options(CLI::App* cmd, PanelArgs& a, bool with_hierarchy) {
    cmd->add_option("--panel", a.panel, "Wide CSV panel (date,<id>,...)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seasonal-period", a.period, "Seasonal period")->capture_default_str();
    cmd->add_option("--top-id", a.top_id, "Column holding the top series, if present")->capture_default_str();
    if (with_hierarchy) {
        cmd->add_option("--hierarchy", a.hierarchy, "Hierarchy JSON {middle id: [bottom ids]}")
            ->check(CLI::ExistingFile);
    }
}

hts::SeriesPanel load_panel(const PanelArgs& a) {
    std::optional<fs::path> h;
    if (!a.hierarchy.empty()) {
        h = a.hierarchy;
    }
    return hts::read_panel(a.panel, a.period, h, a.top_id);
}

hts::Grouping load_grouping(const PanelArgs& a, const hts::SeriesPanel& panel) {
    if (a.hierarchy.empty()) {
        return hts::Grouping(panel.bottom_count());
    }
    return hts::read_natural_hierarchy(a.hierarchy, panel).grouping;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw hts::ArgumentError("cannot write " + path.string());
    }
}

std::string table_text(const hts::ForecastTable& t) {
    std::ostringstream s;
    hts::write_forecast_table(t, s);
    return s.str();
}

hts::ForecastTable bundle_table(const hts::ForecastBundle& b, const Eigen::MatrixXd& values, int k) {
    hts::ForecastTable t;
    t.ids = b.ids;
    t.values = values;
    for (size_t i = 0; i < b.ids.size(); ++i) {
        const int r = static_cast<int>(i);
        t.levels.push_back(r == 0 ? hts::Level::top : r <= k ? hts::Level::middle : hts::Level::bottom);
    }
    return t;
}

Eigen::MatrixXd bottom_residuals(const hts::SeriesPanel& panel, int threads) {
    const auto bundle = hts::forecast_panel(panel, hts::Grouping(panel.bottom_count()), 1, threads);
    return bundle.residuals.rightCols(panel.bottom_count());
}

void print_summary(const hts::ExperimentResult& res) {
    std::printf("%-32s %10s\n", "approach", "rmsse");
    for (size_t j = 0; j < res.labels.size(); ++j) {
        std::printf("%-32s %10.4f\n", res.labels[j].c_str(), res.scores.col(static_cast<Eigen::Index>(j)).mean());
    }
    if (res.twins) {
        const auto& t = *res.twins;
        std::printf("%s ranks %d of %zu among itself and its twins (mean rank %.3f, twins %.3f..%.3f)\n",
                    t.source.c_str(), t.position, t.labels.size(), t.mean_ranks[0], t.best_twin_rank,
                    t.worst_twin_rank);
    }
}

int run_and_write(const hts::ExperimentConfig& cfg, const fs::path& out) {
    const auto res = hts::run_experiment(cfg);
    hts::write_artifacts(cfg, res, out);
    print_summary(res);
    std::printf("wrote %s (config %s)\n", out.string().c_str(), hts::config_hash(cfg).c_str());
    return 0;
}

int reproduce(const fs::path& manifest, const fs::path& out, int threads) {
    auto cfg = hts::config_from_manifest(manifest);
    if (threads > 0) {
        cfg.threads = threads;
    }
    const auto expected = hts::manifest_outputs(manifest);
    const auto res = hts::run_experiment(cfg);
    std::ifstream min(manifest);
    const auto recorded = json::parse(min);
    if (recorded.value("data_hash", "") != hts::hex_hash(res.data_hash)) {
        throw hts::ConfigError("input data changed since the manifest was written");
    }
    hts::write_artifacts(cfg, res, out);
    std::vector<std::string> differ;
    for (const auto& [file, hash] : expected) {
        if (!fs::exists(out / file) || hts::hex_hash(hts::file_hash(out / file)) != hash) {
            differ.push_back(file);
        }
    }
    if (!differ.empty()) {
        std::string list;
        for (const auto& f : differ) {
            list += (list.empty() ? "" : ", ") + f;
        }
        throw hts::NumericalError("rerun differs from the manifest in: " + list);
    }
    std::printf("reproduced %zu outputs bit-exactly in %s\n", expected.size(), out.string().c_str());
    return 0;
}

int emit_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchy construction, reconciliation and evaluation experiments"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: from config, else 1)")
        ->check(CLI::NonNegativeNumber);
    auto nthreads = [&threads](int fallback) { return threads > 0 ? threads : std::max(1, fallback); };

    // simulate
    auto* sim = app.add_subcommand("simulate", "Write simulated panels and their true cluster labels");
    int sim_reps = 1;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    hts::DgpConfig sim_cfg;
    sim->add_option("--reps", sim_reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
    sim->add_option("--seed", sim_seed, "Root seed")->capture_default_str();
    sim->add_option("--m", sim_cfg.m, "Bottom series (multiple of 6)")->capture_default_str();
    sim->add_option("--length", sim_cfg.length, "Observations per series")->capture_default_str();
    sim->add_option("--out", sim_out, "Output directory")->required();

    // features
    auto* feat = app.add_subcommand("features", "Dump the per-series feature matrix");
    PanelArgs feat_panel;
    std::string feat_out;
    bool feat_residual = false;
    add_panel_options(feat, feat_panel, false);
    feat->add_flag("--residual", feat_residual, "Features of in-sample one-step errors instead of the series");
    feat->add_option("--out", feat_out, "Output CSV")->required();

    // cluster
    auto* clu = app.add_subcommand("cluster", "Build a hierarchy with one clustering approach");
    PanelArgs clu_panel;
    std::string clu_approach;
    std::string clu_out;
    hts::ClusterOptions clu_opt;
    add_panel_options(clu, clu_panel, false);
    clu->add_option("--approach", clu_approach, "Approach name, e.g. TSF-EUC-HC")->required();
    clu->add_option("--pca-threshold", clu_opt.pca_threshold, "Explained variance kept by PCA")
        ->capture_default_str();
    clu->add_option("--k-max", clu_opt.k_max, "Largest k searched by silhouette (0: min(10, m-1))")
        ->capture_default_str();
    clu->add_option("--out", clu_out, "Output hierarchy JSON")->required();

    // forecast
    auto* fc = app.add_subcommand("forecast", "Base forecasts for every node of a hierarchy");
    PanelArgs fc_panel;
    int fc_h = 12;
    std::string fc_out;
    std::string fc_resid;
    add_panel_options(fc, fc_panel, true);
    fc->set_help_flag("--help", "Print this help message and exit");
    fc->add_option("--h", fc_h, "Forecast horizon")->check(CLI::PositiveNumber)->capture_default_str();
    fc->add_option("--out", fc_out, "Output forecast table")->required();
    fc->add_option("--residuals", fc_resid, "Also write in-sample one-step errors (T x n CSV)");

    // reconcile
    auto* rec = app.add_subcommand("reconcile", "Base forecasts followed by reconciliation");
    PanelArgs rec_panel;
    int rec_h = 12;
    std::string rec_method = "mint";
    std::string rec_out;
    add_panel_options(rec, rec_panel, true);
    rec->set_help_flag("--help", "Print this help message and exit");
    rec->add_option("--h", rec_h, "Forecast horizon")->check(CLI::PositiveNumber)->capture_default_str();
    rec->add_option("--recon", rec_method, "mint, wls or ols")->capture_default_str();
    rec->add_option("--out", rec_out, "Output forecast table")->required();

    // permute
    auto* perm = app.add_subcommand("permute", "Random twin permutations, optionally applied to a hierarchy");
    int perm_count = 100;
    std::uint64_t perm_seed = 1;
    int perm_m = 0;
    PanelArgs perm_panel;
    std::string perm_out;
    perm->add_option("--count", perm_count, "Number of twins")->check(CLI::PositiveNumber)->capture_default_str();
    perm->add_option("--seed", perm_seed, "Seed")->capture_default_str();
    perm->add_option("--m", perm_m, "Bottom series count (when no panel is given)");
    perm->add_option("--panel", perm_panel.panel, "Panel CSV giving the bottom ids")->check(CLI::ExistingFile);
    perm->add_option("--seasonal-period", perm_panel.period, "Seasonal period of the panel");
    perm->add_option("--hierarchy", perm_panel.hierarchy, "Hierarchy JSON to twin (needs --panel)")
        ->check(CLI::ExistingFile);
    perm->add_option("--out", perm_out, "Output directory (default: permutations to stdout)");

    // combine
    auto* comb = app.add_subcommand("combine", "Equal-weight average of reconciled forecast tables");
    std::vector<std::string> comb_inputs;
    std::string comb_out;
    comb->add_option("--inputs", comb_inputs, "Forecast tables")->required()->check(CLI::ExistingFile);
    comb->add_option("--out", comb_out, "Output forecast table")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Expanding-window evaluation of approaches on a CSV panel");
    PanelArgs ev_panel;
    std::vector<std::string> ev_approaches;
    std::vector<std::string> ev_combination;
    std::vector<std::string> ev_grouped;
    hts::ExperimentConfig ev_cfg;
    std::string ev_method = "mint";
    std::string ev_out;
    add_panel_options(ev, ev_panel, true);
    ev->add_option("--approaches", ev_approaches, "Approach names")->required();
    ev->add_option("--combination", ev_combination, "Parts of 'combination' (default: the twelve cluster approaches)");
    ev->add_option("--grouped", ev_grouped, "Parts of 'grouped' (default: the twelve cluster approaches)");
    ev->add_option("--initial", ev_cfg.initial_length, "First training length")->capture_default_str();
    ev->set_help_flag("--help", "Print this help message and exit");
    ev->add_option("--h", ev_cfg.horizon, "Forecast horizon")->capture_default_str();
    ev->add_option("--step", ev_cfg.step, "Window step")->capture_default_str();
    ev->add_option("--recon", ev_method, "mint, wls or ols")->capture_default_str();
    ev->add_option("--alpha", ev_cfg.alpha, "MCB significance level")->capture_default_str();
    ev->add_flag("--keep-forecasts", ev_cfg.keep_forecasts, "Write forecasts.csv");
    ev->add_option("--out", ev_out, "Output directory")->required();

    // run / twin-run
    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config or re-run a manifest");
    std::string run_config;
    std::string run_manifest;
    std::string run_out;
    auto* run_cfg_opt = run->add_option("--config", run_config, "Experiment config")->check(CLI::ExistingFile);
    run->add_option("--manifest", run_manifest, "Manifest of an earlier run; outputs are verified bit-exactly")
        ->check(CLI::ExistingFile)
        ->excludes(run_cfg_opt);
    run->add_option("--out", run_out, "Output directory")->required();

    auto* twin_run = app.add_subcommand("twin-run", "Evaluate a hierarchy against its random twins");
    std::string twin_config;
    std::string twin_out;
    twin_run->add_option("--config", twin_config, "Experiment config with a twins section")
        ->required()
        ->check(CLI::ExistingFile);
    twin_run->add_option("--out", twin_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) {
            fs::create_directories(sim_out);
            for (int r = 0; r < sim_reps; ++r) {
                hts::DgpConfig c = sim_cfg;
                c.seed = hts::derive_seed(sim_seed, "replication", static_cast<std::uint64_t>(r));
                const auto s = hts::simulate_panel(c);
                char stem[32];
                std::snprintf(stem, sizeof stem, "rep_%03d", r + 1);
                hts::write_panel(s.panel, fs::path(sim_out) / (std::string(stem) + "_panel.csv"));
                std::ostringstream labels;
                labels << "series,cluster\n";
                const auto ids = s.panel.bottom_ids();
                for (size_t i = 0; i < ids.size(); ++i) {
                    labels << ids[i] << ',' << s.labels[i] << '\n';
                }
                write_file(fs::path(sim_out) / (std::string(stem) + "_labels.csv"), labels.str());
            }
            return 0;
        }
        if (*feat) {
            const auto panel = load_panel(feat_panel);
            const Eigen::MatrixXd series =
                feat_residual ? bottom_residuals(panel, nthreads(1)) : panel.bottom();
            const auto fm = hts::feature_matrix(series, panel.seasonal_period(), nthreads(1));
            std::ostringstream s;
            s << "series";
            for (const auto& n : hts::feature_names()) {
                s << ',' << n;
            }
            s << '\n';
            const auto ids = panel.bottom_ids();
            for (Eigen::Index i = 0; i < fm.rows(); ++i) {
                s << ids[static_cast<size_t>(i)];
                for (Eigen::Index c = 0; c < fm.cols(); ++c) {
                    s << ',' << hts::format_double(fm(i, c));
                }
                s << '\n';
            }
            write_file(feat_out, s.str());
            return 0;
        }
        if (*clu) {
            hts::find_cluster_approach(clu_approach);
            const auto panel = load_panel(clu_panel);
            clu_opt.threads = nthreads(1);
            const Eigen::MatrixXd bottom = panel.bottom();
            const auto groupings = hts::cluster_groupings({clu_approach}, bottom, bottom_residuals(panel, nthreads(1)),
                                                          panel.seasonal_period(), clu_opt);
            write_file(clu_out, hts::hierarchy_json(groupings.at(clu_approach), panel.bottom_ids()) + "\n");
            return 0;
        }
        if (*fc || *rec) {
            const PanelArgs& pa = *fc ? fc_panel : rec_panel;
            const int h = *fc ? fc_h : rec_h;
            const auto panel = load_panel(pa);
            const auto g = load_grouping(pa, panel);
            const auto bundle = hts::forecast_panel(panel, g, h, nthreads(1));
            if (*fc) {
                write_file(fc_out, table_text(bundle_table(bundle, bundle.forecasts, g.rows())));
                if (!fc_resid.empty()) {
                    std::ostringstream s;
                    for (size_t i = 0; i < bundle.ids.size(); ++i) {
                        s << (i ? "," : "") << bundle.ids[i];
                    }
                    s << '\n';
                    for (Eigen::Index t = 0; t < bundle.residuals.rows(); ++t) {
                        for (Eigen::Index c = 0; c < bundle.residuals.cols(); ++c) {
                            s << (c ? "," : "") << hts::format_double(bundle.residuals(t, c));
                        }
                        s << '\n';
                    }
                    write_file(fc_resid, s.str());
                }
                return 0;
            }
            const auto w = hts::estimate_w(bundle.residuals, hts::parse_cov_method(rec_method));
            const auto r = hts::reconcile(hts::summing_matrix(g), w, bundle.forecasts);
            write_file(rec_out, table_text(bundle_table(bundle, r.ytilde, g.rows())));
            std::printf("method %s, shrinkage %.6f%s\n", hts::cov_method_name(w.method).c_str(), w.lambda,
                        w.jittered ? ", jittered" : "");
            return 0;
        }
        if (*perm) {
            std::optional<hts::SeriesPanel> panel;
            if (!perm_panel.panel.empty()) {
                panel = load_panel(perm_panel);
                perm_m = panel->bottom_count();
            }
            if (perm_m < 1) {
                throw hts::ArgumentError("permute needs --panel or a positive --m");
            }
            const auto perms = hts::twin_permutations(perm_m, perm_count, perm_seed);
            const std::string listing = json{{"seed", perm_seed}, {"m", perm_m}, {"permutations", perms}}.dump() + "\n";
            if (perm_out.empty()) {
                if (!perm_panel.hierarchy.empty()) {
                    throw hts::ArgumentError("--hierarchy needs --out");
                }
                std::cout << listing;
                return 0;
            }
            write_file(fs::path(perm_out) / "permutations.json", listing);
            if (!perm_panel.hierarchy.empty()) {
                if (!panel) {
                    throw hts::ArgumentError("--hierarchy needs --panel for the bottom ids");
                }
                const auto g = hts::read_natural_hierarchy(perm_panel.hierarchy, *panel).grouping;
                const auto ids = panel->bottom_ids();
                for (size_t i = 0; i < perms.size(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof name, "twin_%03zu.json", i + 1);
                    write_file(fs::path(perm_out) / name, hts::hierarchy_json(hts::twin(g, perms[i]), ids) + "\n");
                }
            }
            return 0;
        }
        if (*comb) {
            std::vector<Eigen::MatrixXd> parts;
            hts::ForecastTable shape;
            for (const auto& path : comb_inputs) {
                const auto t = hts::read_forecast_table(fs::path(path));
                hts::ForecastTable kept;
                std::vector<Eigen::Index> rows;
                for (size_t i = 0; i < t.ids.size(); ++i) {
                    if (t.levels[i] != hts::Level::middle) {
                        kept.ids.push_back(t.ids[i]);
                        kept.levels.push_back(t.levels[i]);
                        rows.push_back(static_cast<Eigen::Index>(i));
                    }
                }
                if (kept.levels.empty() || kept.levels.front() != hts::Level::top ||
                    std::count(kept.levels.begin(), kept.levels.end(), hts::Level::top) != 1) {
                    throw hts::FormatError(path + ": expected exactly one top row, listed first");
                }
                if (parts.empty()) {
                    shape = kept;
                } else if (kept.ids != shape.ids) {
                    throw hts::ArgumentError(path + ": top and bottom series differ from " + comb_inputs.front());
                }
                parts.push_back(t.values(rows, Eigen::all));
            }
            shape.values = hts::combine(parts);
            write_file(comb_out, table_text(shape));
            return 0;
        }
        if (*ev) {
            ev_cfg.data.kind = hts::DataSource::Kind::csv;
            json j{{"data",
                    {{"source", "csv"},
                     {"path", ev_panel.panel},
                     {"seasonal_period", ev_panel.period},
                     {"hierarchy", ev_panel.hierarchy},
                     {"top_id", ev_panel.top_id}}},
                   {"approaches", ev_approaches},
                   {"combination", ev_combination},
                   {"grouped", ev_grouped},
                   {"plan", {{"initial_length", ev_cfg.initial_length}, {"horizon", ev_cfg.horizon}, {"step", ev_cfg.step}}},
                   {"reconciliation", ev_method},
                   {"alpha", ev_cfg.alpha},
                   {"keep_forecasts", ev_cfg.keep_forecasts}};
            auto cfg = hts::parse_config(j.dump(), fs::current_path());
            cfg.threads = nthreads(1);
            return run_and_write(cfg, ev_out);
        }
        if (*run) {
            if (!run_manifest.empty()) {
                return reproduce(run_manifest, run_out, threads);
            }
            if (run_config.empty()) {
                throw hts::ConfigError("run needs --config or --manifest");
            }
            auto cfg = hts::load_config(run_config);
            cfg.threads = nthreads(cfg.threads);
            return run_and_write(cfg, run_out);
        }
        if (*twin_run) {
            auto cfg = hts::load_config(twin_config);
            if (cfg.twins.count < 1) {
                throw hts::ConfigError("twin-run needs twins.source and a positive twins.count");
            }
            cfg.threads = nthreads(cfg.threads);
            return run_and_write(cfg, twin_out);
        }
    } catch (const hts::Error& e) {
        return emit_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        return emit_error("InternalError", e.what());
    }
    return 0;
}
