#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "fairstream/influence.hpp"
#include "fairstream/rng.hpp"
#include "fairstream/stream_graph.hpp"

namespace fairstream {

enum class SamplerMode {
    Random,
    FairDiscrete,
    FairContinuous,
    FairEdgeAblation, // influence replaced by the constant 1 (edge counting)
    FairAdjAblation,  // influence replaced by the base adjacency weight
};

struct SamplerConfig {
    SamplerMode mode = SamplerMode::Random;
    int neighbor_budget = 5;               // K_n
    double balance_tolerance = 0.1;        // allowed max/min group-influence ratio - 1
    double feature_similarity_weight = 0.3;
    std::uint64_t seed = 0;

    void validate() const {
        if (neighbor_budget < 1) throw ValidationError("neighbor_budget must be >= 1");
        if (balance_tolerance < 0.0) throw ValidationError("balance_tolerance must be >= 0");
        if (feature_similarity_weight < 0.0 || feature_similarity_weight > 1.0)
            throw ValidationError("feature_similarity_weight must lie in [0,1]");
    }
};

// One neighbor as used by the balancing pipeline. `influence` is whatever
// measure the active mode balances (physical influence, 1, or base weight).
struct NeighborInfo {
    SegmentId id = -1;
    int edge = -1;
    double base_weight = 0.0;
    double influence = 0.0;
    int group = -1;
    double s_value = 0.0;
    double feature_similarity = 0.0;
};

struct SampledNeighbor {
    SegmentId id = -1;
    double weight = 0.0;     // rescaled weight A'
    double influence = 0.0;
};

struct NeighborSample {
    SegmentId target = -1;
    bool headwater = false;  // no upstream edges at all
    std::vector<SampledNeighbor> neighbors;
    std::map<int, double> group_influence; // summed influence per present group
};

// Immutable shared inputs for sampling a whole basin.
struct SamplerContext {
    const PredictionGraph* graph = nullptr;
    const GroupPartition* groups = nullptr;       // discrete-like modes
    const std::vector<double>* s_values = nullptr; // continuous mode
    const Eigen::MatrixXd* feature_means = nullptr; // segments x F
    Eigen::VectorXd influence;                     // per prediction-graph edge
};

// Uniform random budget-subset of a node's in-edges plus the remaining
// candidate pool; both as prediction-graph edge indices.
std::pair<std::vector<int>, std::vector<int>> sample_initial(const PredictionGraph& graph,
                                                             SegmentId node, int budget,
                                                             Rng& rng);

// Greedy injection/removal until per-group influence sums are within
// 1 + tolerance of each other. The balance target is the set of groups present
// in picked or pool at entry; moves that do not strictly reduce the max/min
// ratio are not applied; removed neighbors are discarded, not pooled.
void modify_discrete(std::vector<NeighborInfo>& picked, std::vector<NeighborInfo>& pool,
                     double tolerance, double similarity_weight, int move_cap);

// Max/min per-group influence-sum ratio over a fixed group set; +inf when a
// target group is absent. Exposed for tests.
double group_influence_ratio(const std::vector<NeighborInfo>& picked,
                             const std::vector<int>& target_groups);

// Influence-weighted similarity mass of a candidate's sensitive value against
// the picked set. `range` is the max pairwise |s| spread of picked + pool;
// range 0 means all values coincide and similarity is 1.
double density(const std::vector<NeighborInfo>& picked, double candidate_s, double range);

double pairwise_s_range(const std::vector<NeighborInfo>& picked,
                        const std::vector<NeighborInfo>& pool);

// Injects pool candidates in ascending-density order while each injection
// strictly increases the variance of picked sensitive values, capped at
// max_injections.
void modify_continuous(std::vector<NeighborInfo>& picked, std::vector<NeighborInfo>& pool,
                       int max_injections);

// A' = A * max_k SI_k / SI_(group of j) over the final neighbor set.
void rescale_weights(std::vector<NeighborInfo>& picked, std::map<int, double>& group_influence,
                     std::vector<double>& weights_out);

// Full per-node pipeline for the configured mode. The random stream is
// derived from (config.seed, node, epoch).
NeighborSample sample_node(const SamplerContext& ctx, const SamplerConfig& config,
                           SegmentId node, std::uint64_t epoch);

std::vector<NeighborSample> sample_all(const SamplerContext& ctx, const SamplerConfig& config,
                                       std::uint64_t epoch);

SamplerMode sampler_mode_from_string(const std::string& name);
std::string to_string(SamplerMode mode);

} // namespace fairstream
