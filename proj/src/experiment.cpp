#include "hts/experiment.hpp"

#include "hts/errors.hpp"
#include "hts/parallel.hpp"
#include "hts/permute.hpp"
#include "hts/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace hts {

using nlohmann::json;

namespace {

const std::map<std::string, std::string> kFixedLabels{
    {"base", "Base"}, {"two-level", "Two-level"}, {"natural", "Natural"},
    {"grouped", "Grouped"}, {"combination", "Combination"}};

const std::vector<std::string> kTrueSchemes{"trend-season", "trend1", "trend2", "season"};

std::string true_scheme(const std::string& name) {
    const std::string prefix = "Cluster-";
    if (name.rfind(prefix, 0) != 0) {
        return {};
    }
    const auto scheme = name.substr(prefix.size());
    return std::find(kTrueSchemes.begin(), kTrueSchemes.end(), scheme) != kTrueSchemes.end() ? scheme : std::string{};
}

bool is_hierarchy_name(const std::string& name) {
    return name == "two-level" || name == "natural" || is_cluster_approach(name) || !true_scheme(name).empty();
}

std::vector<std::string> all_cluster_names() {
    std::vector<std::string> out;
    for (const auto& a : cluster_approaches()) {
        out.push_back(a.name);
    }
    return out;
}

void check_name(const std::string& name, const ExperimentConfig& cfg) {
    const bool simulated = cfg.data.kind == DataSource::Kind::simulate;
    if (name == "natural") {
        if (simulated || cfg.data.hierarchy.empty()) {
            throw ConfigError("approach 'natural' needs csv data with a hierarchy file");
        }
        return;
    }
    if (!true_scheme(name).empty()) {
        if (!simulated) {
            throw ConfigError("approach '" + name + "' needs simulated data (true cluster labels)");
        }
        return;
    }
    if (kFixedLabels.count(name) || is_cluster_approach(name)) {
        return;
    }
    throw ConfigError("unknown approach '" + name + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

std::string absolute_or_empty(const std::string& p, const std::filesystem::path& base) {
    if (p.empty()) {
        return p;
    }
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) {
        path = base / path;
    }
    return std::filesystem::absolute(path).lexically_normal().string();
}

json config_to_json(const ExperimentConfig& cfg) {
    json data;
    if (cfg.data.kind == DataSource::Kind::simulate) {
        const auto& d = cfg.data.dgp;
        data = {{"source", "simulate"},
                {"replications", cfg.data.replications},
                {"m", d.m},
                {"length", d.length},
                {"alphas", d.alphas},
                {"beta_range", d.beta_range},
                {"gamma_range", d.gamma_range},
                {"var_xi", d.var_xi},
                {"var_eps_up", d.var_eps_up},
                {"var_eps_down", d.var_eps_down}};
    } else {
        data = {{"source", "csv"},
                {"path", cfg.data.path},
                {"seasonal_period", cfg.data.seasonal_period},
                {"hierarchy", cfg.data.hierarchy},
                {"top_id", cfg.data.top_id}};
    }
    return json{{"seed", cfg.seed},
                {"data", data},
                {"approaches", cfg.approaches},
                {"combination", cfg.combination},
                {"grouped", cfg.grouped},
                {"twins", {{"source", cfg.twins.source}, {"count", cfg.twins.count}}},
                {"plan", {{"initial_length", cfg.initial_length}, {"horizon", cfg.horizon}, {"step", cfg.step}}},
                {"reconciliation", cov_method_name(cfg.method)},
                {"clustering", {{"pca_threshold", cfg.pca_threshold}, {"k_max", cfg.k_max}}},
                {"alpha", cfg.alpha},
                {"keep_forecasts", cfg.keep_forecasts}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

const char* level_name(Level l) {
    switch (l) {
    case Level::top:
        return "top";
    case Level::middle:
        return "middle";
    case Level::bottom:
        return "bottom";
    }
    return "bottom";
}

struct Context {
    const std::vector<int>* labels = nullptr;
    const Grouping* natural = nullptr;
};

ApproachSpec resolve_name(const std::string& name, const ExperimentConfig& cfg, const Context& ctx);

std::vector<ApproachSpec> resolve_parts(const std::vector<std::string>& names, const ExperimentConfig& cfg,
                                        const Context& ctx) {
    std::vector<ApproachSpec> parts;
    for (const auto& n : names.empty() ? all_cluster_names() : names) {
        parts.push_back(resolve_name(n, cfg, ctx));
    }
    return parts;
}

ApproachSpec resolve_name(const std::string& name, const ExperimentConfig& cfg, const Context& ctx) {
    if (name == "base") {
        return ApproachSpec::base();
    }
    if (name == "two-level") {
        return ApproachSpec::two_level();
    }
    if (name == "natural") {
        return ApproachSpec::fixed("Natural", *ctx.natural);
    }
    if (name == "grouped") {
        return ApproachSpec::grouped(resolve_parts(cfg.grouped, cfg, ctx));
    }
    if (name == "combination") {
        return ApproachSpec::combination("Combination", resolve_parts(cfg.combination, cfg, ctx));
    }
    if (auto scheme = true_scheme(name); !scheme.empty()) {
        return ApproachSpec::fixed(name, true_grouping(*ctx.labels, scheme));
    }
    return ApproachSpec::clustered(name);
}

std::string twin_label(const std::string& source, int i, int count) {
    const int width = static_cast<int>(std::to_string(count).size());
    std::string idx = std::to_string(i + 1);
    idx.insert(0, static_cast<size_t>(std::max(0, width - static_cast<int>(idx.size()))), '0');
    return approach_label(source) + " twin " + idx;
}

std::vector<double> mean_ranks_of(const Eigen::MatrixXd& scores) {
    const Eigen::VectorXd mean = rank_rows(scores).colwise().mean();
    return {mean.data(), mean.data() + mean.size()};
}

} // namespace

std::string approach_label(const std::string& name) {
    auto it = kFixedLabels.find(name);
    return it == kFixedLabels.end() ? name : it->second;
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j,
                   {"seed", "data", "approaches", "combination", "grouped", "twins", "plan", "reconciliation",
                    "clustering", "alpha", "keep_forecasts", "threads"},
                   "config");
    ExperimentConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.threads = get_or<int>(j, "threads", 1);
    cfg.alpha = get_or<double>(j, "alpha", cfg.alpha);
    cfg.keep_forecasts = get_or<bool>(j, "keep_forecasts", false);
    cfg.method = parse_cov_method(get_or<std::string>(j, "reconciliation", "mint"));

    if (!j.contains("data")) {
        throw ConfigError("config needs a 'data' section");
    }
    const json& d = j["data"];
    const auto source = get_or<std::string>(d, "source", "");
    if (source == "simulate") {
        reject_unknown(d,
                       {"source", "replications", "m", "length", "alphas", "beta_range", "gamma_range", "var_xi",
                        "var_eps_up", "var_eps_down"},
                       "data");
        cfg.data.kind = DataSource::Kind::simulate;
        auto& g = cfg.data.dgp;
        cfg.data.replications = get_or<int>(d, "replications", 1);
        g.m = get_or<int>(d, "m", g.m);
        g.length = get_or<int>(d, "length", g.length);
        g.alphas = get_or<std::array<double, 3>>(d, "alphas", g.alphas);
        g.beta_range = get_or<std::array<double, 2>>(d, "beta_range", g.beta_range);
        g.gamma_range = get_or<std::array<double, 2>>(d, "gamma_range", g.gamma_range);
        g.var_xi = get_or<double>(d, "var_xi", g.var_xi);
        g.var_eps_up = get_or<double>(d, "var_eps_up", g.var_eps_up);
        g.var_eps_down = get_or<double>(d, "var_eps_down", g.var_eps_down);
        try {
            g.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("data: ") + e.what());
        }
        if (cfg.data.replications < 1) {
            throw ConfigError("data.replications must be at least 1");
        }
    } else if (source == "csv") {
        reject_unknown(d, {"source", "path", "seasonal_period", "hierarchy", "top_id"}, "data");
        cfg.data.kind = DataSource::Kind::csv;
        cfg.data.path = absolute_or_empty(get_or<std::string>(d, "path", ""), base_dir);
        cfg.data.seasonal_period = get_or<int>(d, "seasonal_period", 12);
        cfg.data.hierarchy = absolute_or_empty(get_or<std::string>(d, "hierarchy", ""), base_dir);
        cfg.data.top_id = get_or<std::string>(d, "top_id", "Total");
        if (cfg.data.path.empty()) {
            throw ConfigError("data.path is required for csv data");
        }
        if (cfg.data.seasonal_period < 1) {
            throw ConfigError("data.seasonal_period must be positive");
        }
    } else {
        throw ConfigError("data.source must be 'simulate' or 'csv'");
    }

    if (j.contains("plan")) {
        const json& p = j["plan"];
        reject_unknown(p, {"initial_length", "horizon", "step"}, "plan");
        cfg.initial_length = get_or<int>(p, "initial_length", cfg.initial_length);
        cfg.horizon = get_or<int>(p, "horizon", cfg.horizon);
        cfg.step = get_or<int>(p, "step", cfg.step);
    }
    if (cfg.initial_length < 1 || cfg.horizon < 1 || cfg.step < 1) {
        throw ConfigError("plan lengths must be positive");
    }
    if (j.contains("clustering")) {
        const json& c = j["clustering"];
        reject_unknown(c, {"pca_threshold", "k_max"}, "clustering");
        cfg.pca_threshold = get_or<double>(c, "pca_threshold", cfg.pca_threshold);
        cfg.k_max = get_or<int>(c, "k_max", cfg.k_max);
    }
    if (!(cfg.pca_threshold > 0.0 && cfg.pca_threshold <= 1.0) || cfg.k_max < 0) {
        throw ConfigError("clustering.pca_threshold must lie in (0, 1] and k_max must be >= 0");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }

    cfg.approaches = get_or<std::vector<std::string>>(j, "approaches", {});
    cfg.combination = get_or<std::vector<std::string>>(j, "combination", {});
    cfg.grouped = get_or<std::vector<std::string>>(j, "grouped", {});
    if (j.contains("twins")) {
        const json& t = j["twins"];
        reject_unknown(t, {"source", "count"}, "twins");
        cfg.twins.source = get_or<std::string>(t, "source", "");
        cfg.twins.count = get_or<int>(t, "count", 0);
    }

    if (cfg.approaches.empty() && cfg.twins.count == 0) {
        throw ConfigError("config lists no approaches");
    }
    std::set<std::string> seen;
    for (const auto& a : cfg.approaches) {
        check_name(a, cfg);
        if (!seen.insert(a).second) {
            throw ConfigError("approach '" + a + "' listed twice");
        }
    }
    for (const auto& p : cfg.combination) {
        check_name(p, cfg);
        if (p == "base" || p == "combination") {
            throw ConfigError("combination parts must be hierarchies, got '" + p + "'");
        }
    }
    for (const auto& p : cfg.grouped) {
        check_name(p, cfg);
        if (!is_hierarchy_name(p)) {
            throw ConfigError("grouped parts must be single hierarchies, got '" + p + "'");
        }
    }
    if (cfg.twins.count < 0) {
        throw ConfigError("twins.count must be >= 0");
    }
    if (cfg.twins.count > 0) {
        check_name(cfg.twins.source, cfg);
        if (cfg.twins.source == "base") {
            throw ConfigError("base forecasts have no hierarchy to permute");
        }
    } else if (!cfg.twins.source.empty()) {
        throw ConfigError("twins.source given without a positive twins.count");
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, std::filesystem::absolute(path).parent_path());
}

std::string canonical_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(); }

std::string hex_hash(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const ExperimentConfig& cfg) { return hex_hash(fnv1a64(canonical_config(cfg))); }

std::uint64_t replication_seed(const ExperimentConfig& cfg, int r) {
    return derive_seed(cfg.seed, "replication", static_cast<std::uint64_t>(r));
}

std::uint64_t twin_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, "twins"); }

std::uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot read " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(text);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const bool simulated = cfg.data.kind == DataSource::Kind::simulate;
    const int reps = simulated ? cfg.data.replications : 1;
    ExperimentResult res;

    std::optional<SeriesPanel> csv_panel;
    std::optional<Grouping> natural;
    if (!simulated) {
        std::optional<std::filesystem::path> h;
        if (!cfg.data.hierarchy.empty()) {
            h = cfg.data.hierarchy;
        }
        csv_panel = read_panel(cfg.data.path, cfg.data.seasonal_period, h, cfg.data.top_id);
        res.data_hash = file_hash(cfg.data.path);
        if (h) {
            natural = read_natural_hierarchy(*h, *csv_panel).grouping;
            res.data_hash = fnv1a64(hex_hash(res.data_hash) + hex_hash(file_hash(*h)));
        }
    }
    for (int r = 0; r < reps; ++r) {
        res.replication_seeds.push_back(simulated ? replication_seed(cfg, r) : 0);
    }
    const int m = simulated ? cfg.data.dgp.m : csv_panel->bottom_count();
    if (cfg.twins.count > 0) {
        res.twin_permutations = twin_permutations(m, cfg.twins.count, twin_seed(cfg));
    }

    std::vector<std::string> names = cfg.approaches;
    if (cfg.twins.count > 0 && std::find(names.begin(), names.end(), cfg.twins.source) == names.end()) {
        names.push_back(cfg.twins.source);
    }
    for (const auto& n : names) {
        res.labels.push_back(approach_label(n));
    }
    const int source_col = cfg.twins.count > 0
                               ? static_cast<int>(std::find(names.begin(), names.end(), cfg.twins.source) - names.begin())
                               : -1;
    for (int i = 0; i < cfg.twins.count; ++i) {
        res.labels.push_back(twin_label(cfg.twins.source, i, cfg.twins.count));
    }

    const int outer = std::max(1, std::min(cfg.threads, reps));
    const int inner = outer == 1 ? std::max(1, cfg.threads) : 1;
    res.reports.resize(static_cast<size_t>(reps));
    parallel_for(reps, outer, [&](int r) {
        try {
            std::optional<SimulatedPanel> sim;
            if (simulated) {
                DgpConfig dgp = cfg.data.dgp;
                dgp.seed = res.replication_seeds[static_cast<size_t>(r)];
                sim = simulate_panel(dgp);
            }
            const SeriesPanel& panel = simulated ? sim->panel : *csv_panel;
            Context ctx{simulated ? &sim->labels : nullptr, natural ? &*natural : nullptr};
            std::vector<ApproachSpec> specs;
            for (const auto& n : names) {
                specs.push_back(resolve_name(n, cfg, ctx));
            }
            for (int i = 0; i < cfg.twins.count; ++i) {
                specs.push_back(ApproachSpec::twin(specs[static_cast<size_t>(source_col)],
                                                   res.twin_permutations[static_cast<size_t>(i)],
                                                   res.labels[names.size() + static_cast<size_t>(i)]));
            }
            BacktestOptions opt;
            opt.method = cfg.method;
            opt.cluster.pca_threshold = cfg.pca_threshold;
            opt.cluster.k_max = cfg.k_max;
            opt.cluster.threads = inner;
            opt.threads = inner;
            opt.keep_forecasts = cfg.keep_forecasts;
            const auto plan = make_plan(panel.length(), cfg.initial_length, cfg.horizon, cfg.step);
            res.reports[static_cast<size_t>(r)] = run_backtest(panel, specs, plan, opt);
        } catch (const Error& e) {
            if (!simulated) {
                throw;
            }
            rethrow_with_context(e, "replication " + std::to_string(r + 1) + ": ");
        }
    });

    Eigen::Index rows = 0;
    for (const auto& rep : res.reports) {
        rows += rep.rmsse.rows();
    }
    const auto J = static_cast<Eigen::Index>(res.labels.size());
    res.scores.resize(rows, J);
    Eigen::Index at = 0;
    for (int r = 0; r < reps; ++r) {
        const auto& rep = res.reports[static_cast<size_t>(r)];
        res.scores.middleRows(at, rep.rmsse.rows()) = rep.rmsse;
        for (Eigen::Index w = 0; w < rep.rmsse.rows(); ++w) {
            res.score_replication.push_back(r + 1);
            res.score_window.push_back(static_cast<int>(w) + 1);
        }
        at += rep.rmsse.rows();
    }
    if (rows >= 2 && J >= 2) {
        res.mcb = mcb(res.scores, cfg.alpha);
    }

    if (cfg.twins.count > 0) {
        TwinSummary t;
        t.source = approach_label(cfg.twins.source);
        Eigen::MatrixXd sub(rows, cfg.twins.count + 1);
        sub.col(0) = res.scores.col(source_col);
        t.labels.push_back(t.source);
        for (int i = 0; i < cfg.twins.count; ++i) {
            sub.col(i + 1) = res.scores.col(static_cast<Eigen::Index>(names.size()) + i);
            t.labels.push_back(res.labels[names.size() + static_cast<size_t>(i)]);
        }
        t.mean_ranks = mean_ranks_of(sub);
        if (rows >= 2) {
            t.mcb = mcb(sub, cfg.alpha);
        }
        const double own = t.mean_ranks[0];
        t.best_twin_rank = *std::min_element(t.mean_ranks.begin() + 1, t.mean_ranks.end());
        t.worst_twin_rank = *std::max_element(t.mean_ranks.begin() + 1, t.mean_ranks.end());
        t.position = 1 + static_cast<int>(std::count_if(t.mean_ranks.begin() + 1, t.mean_ranks.end(),
                                                        [own](double v) { return v < own; }));
        t.strictly_inside = t.best_twin_rank < own && own < t.worst_twin_rank;
        res.twins = std::move(t);
    }
    return res;
}

void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& res, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text(out / name, text);
        files.push_back(name);
    };

    {
        std::ostringstream s;
        s << "replication,window,approach,score\n";
        for (Eigen::Index i = 0; i < res.scores.rows(); ++i) {
            for (size_t j = 0; j < res.labels.size(); ++j) {
                s << res.score_replication[static_cast<size_t>(i)] << ',' << res.score_window[static_cast<size_t>(i)]
                  << ',' << res.labels[j] << ',' << format_double(res.scores(i, static_cast<Eigen::Index>(j))) << '\n';
            }
        }
        emit("rmsse.csv", s.str());
    }
    {
        std::ostringstream s;
        s << "replication,window,approach,series,score\n";
        for (size_t r = 0; r < res.reports.size(); ++r) {
            const auto& rep = res.reports[r];
            for (size_t w = 0; w < rep.series_rmsse.size(); ++w) {
                for (size_t j = 0; j < res.labels.size(); ++j) {
                    for (size_t i = 0; i < rep.series_ids.size(); ++i) {
                        s << r + 1 << ',' << w + 1 << ',' << res.labels[j] << ',' << rep.series_ids[i] << ','
                          << format_double(rep.series_rmsse[w](static_cast<Eigen::Index>(j),
                                                               static_cast<Eigen::Index>(i)))
                          << '\n';
                    }
                }
            }
        }
        emit("series_rmsse.csv", s.str());
    }
    if (cfg.keep_forecasts) {
        std::ostringstream s;
        s << "replication,window,approach,series,horizon,value\n";
        for (size_t r = 0; r < res.reports.size(); ++r) {
            const auto& rep = res.reports[r];
            for (size_t w = 0; w < rep.forecasts.size(); ++w) {
                for (size_t j = 0; j < res.labels.size(); ++j) {
                    const auto& f = rep.forecasts[w][j];
                    for (Eigen::Index i = 0; i < f.rows(); ++i) {
                        for (Eigen::Index h = 0; h < f.cols(); ++h) {
                            s << r + 1 << ',' << w + 1 << ',' << res.labels[j] << ','
                              << rep.series_ids[static_cast<size_t>(i)] << ',' << h + 1 << ','
                              << format_double(f(i, h)) << '\n';
                        }
                    }
                }
            }
        }
        emit("forecasts.csv", s.str());
    }

    auto mcb_json = [](const McbResult& m, const std::vector<std::string>& labels) {
        std::vector<std::string> best_set;
        for (size_t j = 0; j < labels.size(); ++j) {
            if (m.indistinguishable[j]) {
                best_set.push_back(labels[j]);
            }
        }
        return json{{"labels", labels},
                    {"mean_ranks", m.mean_ranks},
                    {"half_width", m.half_width},
                    {"q", m.q},
                    {"alpha", m.alpha},
                    {"windows", m.windows},
                    {"best", labels[static_cast<size_t>(m.best)]},
                    {"indistinguishable_from_best", best_set}};
    };
    if (res.mcb) {
        emit("mcb.json", mcb_json(*res.mcb, res.labels).dump(2) + "\n");
        emit("mcb.svg", mcb_svg(*res.mcb, res.labels, "Mean ranks"));
    }

    json summary;
    {
        std::vector<double> mean_rmsse;
        std::vector<double> mean_middle;
        for (Eigen::Index j = 0; j < res.scores.cols(); ++j) {
            mean_rmsse.push_back(res.scores.col(j).mean());
            double total = 0.0;
            Eigen::Index count = 0;
            for (const auto& rep : res.reports) {
                total += rep.middle_rows.col(j).cast<double>().sum();
                count += rep.middle_rows.rows();
            }
            mean_middle.push_back(total / static_cast<double>(count));
        }
        summary = json{{"labels", res.labels},
                       {"mean_rmsse", mean_rmsse},
                       {"mean_middle_series", mean_middle},
                       {"replications", res.reports.size()},
                       {"rows", res.scores.rows()}};
    }
    if (res.twins) {
        const auto& t = *res.twins;
        json tj{{"source", t.source},
                {"labels", t.labels},
                {"mean_ranks", t.mean_ranks},
                {"position", t.position},
                {"of", t.labels.size()},
                {"best_twin_rank", t.best_twin_rank},
                {"worst_twin_rank", t.worst_twin_rank},
                {"strictly_inside", t.strictly_inside}};
        if (t.mcb) {
            tj["mcb"] = mcb_json(*t.mcb, t.labels);
            emit("twin_mcb.svg", mcb_svg(*t.mcb, t.labels, t.source + " and its twins"));
        }
        emit("twins.json", tj.dump(2) + "\n");
        summary["twins"] = {{"position", t.position}, {"of", t.labels.size()}, {"strictly_inside", t.strictly_inside}};
    }
    emit("summary.json", summary.dump(2) + "\n");

    json outputs = json::object();
    for (const auto& f : files) {
        outputs[f] = hex_hash(file_hash(out / f));
    }
    json manifest{{"tool", "htsc"},
                  {"config", config_to_json(cfg)},
                  {"config_hash", config_hash(cfg)},
                  {"seed", cfg.seed},
                  {"replication_seeds", res.replication_seeds},
                  {"twin_seed", cfg.twins.count > 0 ? twin_seed(cfg) : 0},
                  {"data_hash", hex_hash(res.data_hash)},
                  {"outputs", outputs}};
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

json read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read manifest " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
    }
}

} // namespace

ExperimentConfig config_from_manifest(const std::filesystem::path& manifest) {
    const json m = read_manifest(manifest);
    if (!m.contains("config") || !m.contains("config_hash")) {
        throw ConfigError("manifest lacks config or config_hash");
    }
    auto cfg = parse_config(m["config"].dump());
    if (config_hash(cfg) != m["config_hash"].get<std::string>()) {
        throw ConfigError("manifest config does not match its recorded hash");
    }
    return cfg;
}

std::map<std::string, std::string> manifest_outputs(const std::filesystem::path& manifest) {
    const json m = read_manifest(manifest);
    std::map<std::string, std::string> out;
    for (auto it = m["outputs"].begin(); it != m["outputs"].end(); ++it) {
        out[it.key()] = it.value().get<std::string>();
    }
    return out;
}

void write_forecast_table(const ForecastTable& t, std::ostream& out) {
    out << "series,level";
    for (Eigen::Index h = 0; h < t.values.cols(); ++h) {
        out << ",h" << h + 1;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        out << t.ids[static_cast<size_t>(i)] << ',' << level_name(t.levels[static_cast<size_t>(i)]);
        for (Eigen::Index h = 0; h < t.values.cols(); ++h) {
            out << ',' << format_double(t.values(i, h));
        }
        out << '\n';
    }
}

ForecastTable read_forecast_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty forecast table");
    }
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "series" || header[1] != "level") {
        throw FormatError("forecast table header must start with series,level and have a horizon column");
    }
    const auto h = static_cast<Eigen::Index>(header.size() - 2);
    ForecastTable t;
    std::vector<double> vals;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw FormatError("forecast table line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells");
        }
        t.ids.push_back(cells[0]);
        if (cells[1] == "top") {
            t.levels.push_back(Level::top);
        } else if (cells[1] == "middle") {
            t.levels.push_back(Level::middle);
        } else if (cells[1] == "bottom") {
            t.levels.push_back(Level::bottom);
        } else {
            throw FormatError("forecast table line " + std::to_string(line_no) + ": unknown level '" + cells[1] + "'");
        }
        for (size_t c = 2; c < cells.size(); ++c) {
            try {
                size_t used = 0;
                vals.push_back(std::stod(cells[c], &used));
                if (used != cells[c].size()) {
                    throw std::invalid_argument(cells[c]);
                }
            } catch (const std::exception&) {
                throw ParseError("forecast table line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
            }
        }
    }
    t.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        vals.data(), static_cast<Eigen::Index>(t.ids.size()), h);
    return t;
}

ForecastTable read_forecast_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot read " + path.string());
    }
    return read_forecast_table(in);
}

} // namespace hts
