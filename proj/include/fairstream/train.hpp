#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairstream/influence.hpp"
#include "fairstream/metrics.hpp"
#include "fairstream/model.hpp"
#include "fairstream/sampler.hpp"
#include "fairstream/stream_graph.hpp"
#include "fairstream/synth.hpp"

namespace fairstream {

struct TrainConfig {
    int epochs = 100;
    int batch_nodes = 32;
    double train_fraction = 2.0 / 3.0;
    std::vector<std::uint64_t> seeds = {1, 5, 85, 500, 1000};
    double learning_rate = 1e-3;
    int patience = 10;
    bool single_thread = false;

    void validate() const;
};

enum class GroupRmseMode { Pooled, SegmentAveraged };

struct EvalConfig {
    std::vector<double> window_sizes = {0.05, 0.10, 0.20};
    double window_stride_fraction = 0.1;
    GroupRmseMode group_rmse_mode = GroupRmseMode::Pooled;

    void validate() const;
};

struct GraphConfig {
    int hop_limit = 0; // 0 = unlimited
    std::vector<double> group_thresholds = {0.35, 0.65};
    std::vector<std::string> group_labels; // optional, thresholds+1 entries
};

// Everything one training run needs except the sampler mode and seed.
struct ExperimentConfig {
    GraphConfig graph;
    InfluenceMode influence_mode = InfluenceMode::Averaged;
    ModelConfig model;     // feature_dim filled from the bundle during prepare
    SamplerConfig sampler; // seed overridden per run
    TrainConfig train;
    EvalConfig eval;
};

// A basin bundle as loaded from disk.
struct Bundle {
    BasinGraph graph;
    std::vector<SegmentSeries> series;
    std::vector<double> sensitive;
    int time_steps = 0;
    int feature_dim = 0;
};

// Contiguous day ranges: train [0, train_end), validation
// [train_end, val_end), test [val_end, test_end).
struct Split {
    int train_end = 0;
    int val_end = 0;
    int test_end = 0;
};

Split split_days(int total_days, double train_fraction);

// Mode- and seed-independent preparation shared by every run on a bundle:
// expanded graph, adjacency, groups, influence, splits and scalers.
struct Pipeline {
    const Bundle* bundle = nullptr;
    PredictionGraph pgraph;
    GroupPartition groups;
    InfluenceTable influence;
    Eigen::VectorXd sampling_influence; // per edge, collapsed for the sampler
    Split split;
    std::vector<Eigen::MatrixXd> features_std; // per segment, T x F
    Eigen::VectorXd feature_mean, feature_stddev;
    double target_mean = 0.0, target_stddev = 1.0;
    Eigen::MatrixXd feature_means; // per segment, train-window average (for similarity)
    ModelConfig model_config;

    SamplerContext sampler_context() const;
};

Pipeline prepare_pipeline(const Bundle& bundle, const ExperimentConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double train_rmse = 0.0;
    double val_rmse = 0.0;
};

class TrainDivergence : public NumericError {
public:
    TrainDivergence(const std::string& msg, std::vector<EpochRecord> h)
        : NumericError(msg), history(std::move(h)) {}
    std::vector<EpochRecord> history;
};

struct WindowEntry {
    double size = 0.0;
    double worst_rmse = 0.0;
    double window_lo = 0.0;
};

struct EvalOutputs {
    double rmse = 0.0;
    GroupFairness fairness;
    std::vector<WindowEntry> worst_windows;
    std::vector<SegmentErrors> per_segment;              // test errors, all segments with data
    std::vector<std::pair<double, double>> window_curve; // first configured window size
};

struct SeedResult {
    std::uint64_t seed = 0;
    int best_epoch = -1;
    double best_val_rmse = 0.0;
    std::vector<EpochRecord> history;
    EvalOutputs test;
    ModelState state;

    explicit SeedResult(ModelState s) : state(std::move(s)) {}
};

SeedResult train_one_seed(const Pipeline& pipe, const ExperimentConfig& cfg, SamplerMode mode,
                          std::uint64_t seed);

// Test-split metrics for a given parameter state; the same computation the
// trainer runs after restoring its best epoch.
EvalOutputs evaluate_state(const Pipeline& pipe, const ExperimentConfig& cfg, SamplerMode mode,
                           std::uint64_t seed, const ModelState& state);

struct MultiSeedResult {
    std::vector<SeedResult> seeds;                       // successful runs, seed-list order
    std::vector<std::pair<std::uint64_t, std::string>> failures;
};

MultiSeedResult multi_seed(const Pipeline& pipe, const ExperimentConfig& cfg, SamplerMode mode);

// Pooled RMSE (original units) over observed cells in [begin, end), using the
// given neighborhood samples.
double pooled_rmse(const Pipeline& pipe, const ExperimentConfig& cfg, const ModelState& state,
                   const std::vector<NeighborSample>& samples, int begin, int end);

// Epoch label reserved for the fixed evaluation-time neighborhood sample.
inline constexpr std::uint64_t kEvalEpoch = ~std::uint64_t(0);

} // namespace fairstream
