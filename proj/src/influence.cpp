#include "fairstream/influence.hpp"

#include <cmath>

namespace fairstream {

FlowTable fill_flow(const Eigen::MatrixXd& observed_values, const Mask& observed_mask,
                    const Eigen::MatrixXd& simulated) {
    if (observed_values.rows() != observed_mask.rows() ||
        observed_values.cols() != observed_mask.cols())
        throw ValidationError("observed values and mask shapes differ");
    if (simulated.rows() != observed_values.rows() || simulated.cols() != observed_values.cols())
        throw ValidationError("simulated flow shape differs from observed");

    FlowTable out;
    out.flow.resize(observed_values.rows(), observed_values.cols());
    out.observed = observed_mask;
    for (Eigen::Index i = 0; i < observed_values.rows(); ++i) {
        for (Eigen::Index t = 0; t < observed_values.cols(); ++t) {
            double q;
            if (observed_mask(i, t)) {
                q = observed_values(i, t);
            } else {
                q = simulated(i, t);
                if (!std::isfinite(q))
                    throw NumericError("missing simulated flow at unobserved cell (" +
                                       std::to_string(i) + ", " + std::to_string(t) + ")");
            }
            if (!(q > 0.0))
                throw NumericError("gap-filled flow must be positive at (" + std::to_string(i) +
                                   ", " + std::to_string(t) + ")");
            out.flow(i, t) = q;
        }
    }
    return out;
}

double one_hop_influence(double q_upstream, double q_downstream) {
    if (!(q_upstream > 0.0) || !(q_downstream > 0.0))
        throw NumericError("influence requires strictly positive flows");
    return q_upstream / (q_upstream + q_downstream);
}

double path_influence(std::span<const SegmentId> path, const Eigen::MatrixXd& flow, int day) {
    if (path.size() < 2) throw ValidationError("a stream path needs at least two segments");
    double product = 1.0;
    for (size_t m = 1; m < path.size(); ++m)
        product *= one_hop_influence(flow(path[m - 1], day), flow(path[m], day));
    return product;
}

InfluenceTable InfluenceTable::build(const PredictionGraph& pgraph, const FlowTable& flows,
                                     InfluenceMode mode) {
    const int E = int(pgraph.edges().size());
    const int T = int(flows.flow.cols());
    InfluenceTable table;
    table.mode_ = mode;
    table.averaged_.setZero(E);
    if (mode == InfluenceMode::PerStep) table.per_step_.resize(E, T);

    for (int e = 0; e < E; ++e) {
        const auto& path = pgraph.edges()[size_t(e)].path;
        double sum = 0.0;
        for (int t = 0; t < T; ++t) {
            const double v = path_influence(path, flows.flow, t);
            if (mode == InfluenceMode::PerStep) table.per_step_(e, t) = v;
            sum += v;
        }
        table.averaged_(e) = sum / double(T);
    }
    return table;
}

double InfluenceTable::at(int edge, int day) const {
    if (mode_ != InfluenceMode::PerStep)
        throw ValidationError("per-step lookup on a time-averaged influence table");
    return per_step_(edge, day);
}

Eigen::VectorXd InfluenceTable::averaged_over(int begin, int end) const {
    if (mode_ != InfluenceMode::PerStep)
        throw ValidationError("window average requires a per-step influence table");
    if (begin < 0 || end > int(per_step_.cols()) || begin >= end)
        throw ValidationError("bad day range for influence average");
    return per_step_.middleCols(begin, end - begin).rowwise().mean();
}

} // namespace fairstream
