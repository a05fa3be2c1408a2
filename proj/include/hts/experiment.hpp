#pragma once

#include "hts/evaluate.hpp"
#include "hts/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hts {

struct DataSource {
    enum class Kind { simulate, csv };
    Kind kind = Kind::simulate;
    // simulate
    int replications = 1;
    DgpConfig dgp; // seed is replaced per replication
    // csv
    std::string path;
    int seasonal_period = 12;
    std::string hierarchy; // natural hierarchy JSON, optional
    std::string top_id = "Total";
};

struct TwinConfig {
    std::string source; // approach name whose hierarchy is permuted
    int count = 0;
};

/// Everything that determines an experiment's numbers. `threads` is not part
/// of the canonical form: results do not depend on it.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    DataSource data;
    std::vector<std::string> approaches;
    std::vector<std::string> combination; // parts of "combination"; empty -> the twelve cluster approaches
    std::vector<std::string> grouped;     // parts of "grouped"; empty -> the twelve cluster approaches
    TwinConfig twins;
    int initial_length = 96;
    int horizon = 12;
    int step = 1;
    CovMethod method = CovMethod::shrinkage;
    double pca_threshold = 0.8;
    int k_max = 0;
    double alpha = 0.05;
    bool keep_forecasts = false;
    int threads = 1;
};

/// Parses a JSON config. Relative data paths are resolved against `base_dir`.
/// Unknown keys, unknown approach names and inconsistent requests raise
/// ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON (sorted keys, every default filled in).
std::string canonical_config(const ExperimentConfig& cfg);
/// Hex FNV-1a of the canonical JSON.
std::string config_hash(const ExperimentConfig& cfg);

/// Output label of a configured approach name ("base" -> "Base", ...).
std::string approach_label(const std::string& name);

/// DGP seed of replication r (0-based).
std::uint64_t replication_seed(const ExperimentConfig& cfg, int r);
/// Seed of the twin permutations (shared by every replication).
std::uint64_t twin_seed(const ExperimentConfig& cfg);

struct TwinSummary {
    std::string source;
    std::vector<std::string> labels; // source then twins
    std::vector<double> mean_ranks;  // over source + twins only
    std::optional<McbResult> mcb;    // needs at least two score rows
    int position = 0;                // 1-based position of the source by mean rank
    double best_twin_rank = 0.0;
    double worst_twin_rank = 0.0;
    bool strictly_inside = false;    // best twin < source < worst twin
};

struct ExperimentResult {
    std::vector<std::string> labels;
    std::vector<EvalReport> reports;  // per replication
    Eigen::MatrixXd scores;           // (replication, window) rows x approaches
    std::vector<int> score_replication;
    std::vector<int> score_window;
    std::optional<McbResult> mcb; // needs at least two rows and two approaches
    std::vector<std::uint64_t> replication_seeds;
    std::vector<std::vector<int>> twin_permutations;
    std::optional<TwinSummary> twins;
    std::uint64_t data_hash = 0; // FNV-1a of the csv input, 0 for simulated data
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes rmsse.csv, series_rmsse.csv, mcb.json, mcb.svg, summary.json,
/// forecasts.csv (when kept), twin files (when twins were requested) and
/// manifest.json, which records the canonical config, its hash, the seeds and
/// a content hash of every other output.
void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& result, const std::filesystem::path& out);

/// Reads a manifest and returns the config it recorded; ConfigError if the
/// recorded hash does not match the recorded config.
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);
/// Output file -> content hash recorded in a manifest.
std::map<std::string, std::string> manifest_outputs(const std::filesystem::path& manifest);

std::string hex_hash(std::uint64_t h);
std::uint64_t file_hash(const std::filesystem::path& path);
/// %.17g, enough to round-trip a double.
std::string format_double(double v);

/// Forecast tables: `series,level,h1,...,hH`, one row per hierarchy node.
struct ForecastTable {
    std::vector<std::string> ids;
    std::vector<Level> levels;
    Eigen::MatrixXd values; // rows x h
};
void write_forecast_table(const ForecastTable& t, std::ostream& out);
ForecastTable read_forecast_table(std::istream& in);
ForecastTable read_forecast_table(const std::filesystem::path& path);

} // namespace hts
