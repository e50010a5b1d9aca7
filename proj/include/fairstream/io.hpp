#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "fairstream/synth.hpp"
#include "fairstream/train.hpp"

namespace fairstream {

inline constexpr int kSchemaVersion = 1;

// %.17g formatting: enough significant digits to round-trip any double.
std::string format_double(double v);

// ---- basin bundle (graph.json, series.csv, sensitive.csv) ----

void write_bundle(const std::filesystem::path& dir, const SyntheticBasin& basin,
                  const nlohmann::json& config_echo);

Bundle read_bundle(const std::filesystem::path& dir);

// FNV-1a over the three bundle files, in schema order; identifies a bundle in
// checkpoints.
std::uint64_t bundle_hash(const std::filesystem::path& dir);

// ---- model checkpoints ----

struct Checkpoint {
    nlohmann::json config_echo;
    std::string sampler_mode;
    std::uint64_t seed = 0;
    std::uint64_t bundle_fingerprint = 0;
    ModelConfig model_config;
    std::vector<double> params, adam_m, adam_v;
    std::int64_t step = 0;
    int best_epoch = -1;
    double best_val_rmse = 0.0;
    std::vector<double> feature_mean, feature_stddev;
    double target_mean = 0.0, target_stddev = 1.0;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::filesystem::path& path);

ModelState state_from_checkpoint(const Checkpoint& cp);

// ---- fairness reports and audit artifacts ----

nlohmann::json report_json(const MultiSeedResult& runs, const GroupPartition& groups,
                           const std::string& sampler_mode, const nlohmann::json& config_echo);

void write_report(const std::filesystem::path& path, const nlohmann::json& report);

// Seed-averaged per-segment RMSE table: segment_id, s_value, group, rmse.
void write_per_segment_csv(const std::filesystem::path& path, const MultiSeedResult& runs,
                           const GroupPartition& groups);

// Seed-averaged windowed RMSE curve for the first window size:
// window_center, rmse.
void write_window_curve_csv(const std::filesystem::path& path, const MultiSeedResult& runs);

// Ablation table: one row per (mode, seed) plus one mean row per mode.
struct AblationRow {
    std::string mode;
    std::string seed; // a number, or "mean"
    double rmse = 0.0;
    double m_fair = 0.0;
    std::vector<double> worst_windows;
};
void write_ablation_csv(const std::filesystem::path& path,
                        const std::vector<double>& window_sizes,
                        const std::vector<AblationRow>& rows);

// ---- plots ----

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<std::pair<double, double>>& points);

void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<double>& values);

// Optional audit dumps.
void write_pgraph_json(const std::filesystem::path& path, const PredictionGraph& pgraph);
void write_influence_csv(const std::filesystem::path& path, const PredictionGraph& pgraph,
                         const InfluenceTable& table);
void write_neighborhoods_json(const std::filesystem::path& path,
                              const std::vector<NeighborSample>& samples,
                              const GroupPartition& groups, std::uint64_t epoch);

} // namespace fairstream
