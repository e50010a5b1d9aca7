#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fairstream/errors.hpp"

namespace fairstream {

using SegmentId = int;

using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>; // segments x days

// One directed edge of the river network; water flows upstream -> downstream.
struct DirectEdge {
    SegmentId upstream = -1;
    SegmentId downstream = -1;
    double distance = 0.0; // stream distance along the channel, arbitrary units
};

// Directed river network. Segments are 0..n-1; edges must form a DAG.
class BasinGraph {
public:
    BasinGraph() = default;
    BasinGraph(int segment_count, std::vector<DirectEdge> edges);

    int segment_count() const { return segment_count_; }
    const std::vector<DirectEdge>& edges() const { return edges_; }
    const std::vector<SegmentId>& outlets() const { return outlets_; }

    // Direct upstream / downstream neighbor ids of a segment.
    const std::vector<SegmentId>& upstream_of(SegmentId i) const { return upstream_.at(size_t(i)); }
    const std::vector<SegmentId>& downstream_of(SegmentId i) const { return downstream_.at(size_t(i)); }

    // Edge indices whose downstream endpoint is i.
    const std::vector<int>& in_edge_indices(SegmentId i) const { return in_edges_.at(size_t(i)); }

    // Upstream-first order: every edge's upstream endpoint precedes its
    // downstream endpoint.
    const std::vector<SegmentId>& topological_order() const { return topo_; }

private:
    int segment_count_ = 0;
    std::vector<DirectEdge> edges_;
    std::vector<std::vector<SegmentId>> upstream_;
    std::vector<std::vector<SegmentId>> downstream_;
    std::vector<std::vector<int>> in_edges_;
    std::vector<SegmentId> outlets_;
    std::vector<SegmentId> topo_;
};

// Per-segment daily time series. `features` is days x feature_dim; the flow
// column is already gap-filled (observed value where flagged, simulated
// elsewhere). `temp` is dense; `temp_observed` marks which cells a model may
// train or evaluate on.
struct SegmentSeries {
    Eigen::MatrixXd features;            // T x F
    Eigen::VectorXd flow;                // T
    std::vector<std::uint8_t> flow_observed;
    Eigen::VectorXd temp;                // T
    std::vector<std::uint8_t> temp_observed;
    Eigen::VectorXd runoff;              // T, local contribution (not serialized)
};

struct SensitiveProfile {
    double s_value = 0.0;
    std::string group; // empty until a partition is applied
};

struct SyntheticBasin {
    BasinGraph graph;
    std::vector<SegmentSeries> series;          // indexed by segment id
    std::vector<double> sensitive;              // s value per segment
    Eigen::MatrixXd ground_truth_temperature;   // segments x days
};

// Feature column layout produced by the synthetic generator.
enum FeatureColumn : int {
    kFeatDoySin = 0,
    kFeatDoyCos = 1,
    kFeatAirTemp = 2,
    kFeatSolar = 3,
    kFeatPrecip = 4,
    kFeatureDim = 5,
};

} // namespace fairstream
