#pragma once

#include <span>

#include "fairstream/basin.hpp"
#include "fairstream/stream_graph.hpp"

namespace fairstream {

// Gap-filled streamflow: observed value where the mask is set, simulated value
// elsewhere. q > 0 everywhere once constructed.
struct FlowTable {
    Eigen::MatrixXd flow;  // segments x days
    Mask observed;         // 1 where the value came from an observation
};

FlowTable fill_flow(const Eigen::MatrixXd& observed_values, const Mask& observed_mask,
                    const Eigen::MatrixXd& simulated);

// Flow-ratio influence of an upstream segment on its direct downstream
// neighbor: q_up / (q_up + q_down).
double one_hop_influence(double q_upstream, double q_downstream);

// Product of one-hop influences along an edge's stream path, evaluated left to
// right (upstream end first) so rebuilds are bit-identical.
double path_influence(std::span<const SegmentId> path, const Eigen::MatrixXd& flow, int day);

enum class InfluenceMode { PerStep, Averaged };

// Influence for every prediction-graph edge, either per day or averaged over
// days. Values lie in (0, 1).
class InfluenceTable {
public:
    static InfluenceTable build(const PredictionGraph& pgraph, const FlowTable& flows,
                                InfluenceMode mode);

    InfluenceMode mode() const { return mode_; }
    int edge_count() const { return int(averaged_.size()); }
    int day_count() const { return int(per_step_.cols()); }

    double at(int edge, int day) const;     // per-step value (PerStep mode only)
    double averaged(int edge) const { return averaged_(edge); }
    const Eigen::VectorXd& averaged_all() const { return averaged_; }

    // Mean over the half-open day range [begin, end); PerStep mode only.
    Eigen::VectorXd averaged_over(int begin, int end) const;

private:
    InfluenceMode mode_ = InfluenceMode::Averaged;
    Eigen::MatrixXd per_step_;  // edges x days (empty in Averaged mode)
    Eigen::VectorXd averaged_;  // edges
};

} // namespace fairstream
