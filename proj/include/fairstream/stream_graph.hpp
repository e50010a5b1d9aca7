#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairstream/basin.hpp"

namespace fairstream {

// Edge of the expanded prediction graph: upstream segment j influences
// downstream segment i along a recorded stream path.
struct PredictionEdge {
    SegmentId upstream = -1;
    SegmentId downstream = -1;
    double distance = 0.0;            // sum of the path's direct-edge distances
    int hops = 0;
    std::vector<SegmentId> path;      // path[0] == upstream, path.back() == downstream
    double weight = 0.0;              // adjacency weight, filled by compute_adjacency
};

// Expanded graph with an edge (j, i) whenever j lies anywhere upstream of i
// within the hop limit. Immutable after construction.
class PredictionGraph {
public:
    // hop_limit 0 means unlimited.
    static PredictionGraph expand_multihop(const BasinGraph& graph, int hop_limit = 0);

    // Standardizes distances over all edges (zero mean, unit variance) and
    // sets weight = 1/(1+exp(d_std)). Degenerate spread maps to d_std = 0.
    void compute_adjacency();

    int segment_count() const { return segment_count_; }
    const std::vector<PredictionEdge>& edges() const { return edges_; }
    const std::vector<int>& in_edges(SegmentId i) const { return in_edges_.at(size_t(i)); }
    std::optional<int> edge_index(SegmentId upstream, SegmentId downstream) const;
    bool has_edge(SegmentId upstream, SegmentId downstream) const {
        return edge_index(upstream, downstream).has_value();
    }

    // Stored stream path for an edge; throws NotFoundError for non-edges.
    const std::vector<SegmentId>& enumerate_path(SegmentId upstream, SegmentId downstream) const;

private:
    int segment_count_ = 0;
    std::vector<PredictionEdge> edges_;
    std::vector<std::vector<int>> in_edges_; // per downstream node, sorted by upstream id
    std::unordered_map<std::uint64_t, int> index_;
};

// Logistic map from standardized distance to adjacency weight.
double logistic_edge_weight(double standardized_distance);

// Discrete sensitive groups from threshold cuts. Bins are lower-inclusive:
// a value exactly at a cut belongs to the upper group.
struct GroupPartition {
    std::vector<double> thresholds;   // strictly increasing
    std::vector<std::string> labels;  // size thresholds.size() + 1
    std::vector<int> membership;      // per segment, index into labels

    int group_count() const { return int(labels.size()); }
};

GroupPartition discretize(const std::vector<double>& sensitive,
                          const std::vector<double>& thresholds,
                          std::vector<std::string> labels = {});

} // namespace fairstream
