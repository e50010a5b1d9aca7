#include "fairstream/stream_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace fairstream {

namespace {

std::uint64_t edge_key(SegmentId up, SegmentId down) {
    return (std::uint64_t(std::uint32_t(up)) << 32) | std::uint64_t(std::uint32_t(down));
}

struct Route {
    int hops = 0;
    double distance = 0.0;
    std::vector<SegmentId> path; // from source upstream node down to the target
};

// Tie order for equal-hop routes: smaller total distance, then
// lexicographically smaller path.
bool better_route(const Route& a, const Route& b) {
    if (a.hops != b.hops) return a.hops < b.hops;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.path < b.path;
}

} // namespace

PredictionGraph PredictionGraph::expand_multihop(const BasinGraph& graph, int hop_limit) {
    if (hop_limit < 0) throw ValidationError("hop limit must be >= 0");
    PredictionGraph pg;
    pg.segment_count_ = graph.segment_count();
    pg.in_edges_.assign(size_t(graph.segment_count()), {});

    // Per target i, a breadth-first walk against the flow direction. Routes
    // are kept per reached node and improved under the (hops, distance, path)
    // order; BFS levels guarantee shortest-hop routes win.
    for (SegmentId target = 0; target < graph.segment_count(); ++target) {
        std::unordered_map<SegmentId, Route> best;
        std::deque<SegmentId> frontier{target};
        best[target] = Route{0, 0.0, {target}};
        int level = 0;
        while (!frontier.empty() && (hop_limit == 0 || level < hop_limit)) {
            ++level;
            std::deque<SegmentId> next;
            for (SegmentId v : frontier) {
                const Route& via = best.at(v);
                if (via.hops != level - 1) continue; // superseded entry
                for (int e : graph.in_edge_indices(v)) {
                    const DirectEdge& de = graph.edges()[size_t(e)];
                    Route cand;
                    cand.hops = level;
                    cand.distance = via.distance + de.distance;
                    cand.path.reserve(via.path.size() + 1);
                    cand.path.push_back(de.upstream);
                    cand.path.insert(cand.path.end(), via.path.begin(), via.path.end());
                    auto it = best.find(de.upstream);
                    if (it == best.end()) {
                        best.emplace(de.upstream, std::move(cand));
                        next.push_back(de.upstream);
                    } else if (better_route(cand, it->second)) {
                        it->second = std::move(cand);
                        // already queued at this level or settled at a lower one
                    }
                }
            }
            frontier = std::move(next);
        }
        for (auto& [source, route] : best) {
            if (source == target) continue;
            PredictionEdge pe;
            pe.upstream = source;
            pe.downstream = target;
            pe.distance = route.distance;
            pe.hops = route.hops;
            pe.path = std::move(route.path);
            pg.edges_.push_back(std::move(pe));
        }
    }

    std::sort(pg.edges_.begin(), pg.edges_.end(), [](const PredictionEdge& a, const PredictionEdge& b) {
        if (a.downstream != b.downstream) return a.downstream < b.downstream;
        return a.upstream < b.upstream;
    });
    for (size_t e = 0; e < pg.edges_.size(); ++e) {
        const PredictionEdge& pe = pg.edges_[e];
        pg.in_edges_[size_t(pe.downstream)].push_back(int(e));
        pg.index_.emplace(edge_key(pe.upstream, pe.downstream), int(e));
    }
    return pg;
}

double logistic_edge_weight(double standardized_distance) {
    return 1.0 / (1.0 + std::exp(standardized_distance));
}

void PredictionGraph::compute_adjacency() {
    if (edges_.empty()) return;
    double mean = 0.0;
    for (const auto& e : edges_) mean += e.distance;
    mean /= double(edges_.size());
    double var = 0.0;
    for (const auto& e : edges_) var += (e.distance - mean) * (e.distance - mean);
    var /= double(edges_.size());
    const double sd = std::sqrt(var);
    for (auto& e : edges_) {
        const double d_std = sd > 0.0 ? (e.distance - mean) / sd : 0.0;
        e.weight = logistic_edge_weight(d_std);
    }
}

std::optional<int> PredictionGraph::edge_index(SegmentId upstream, SegmentId downstream) const {
    auto it = index_.find(edge_key(upstream, downstream));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::vector<SegmentId>& PredictionGraph::enumerate_path(SegmentId upstream,
                                                              SegmentId downstream) const {
    auto idx = edge_index(upstream, downstream);
    if (!idx)
        throw NotFoundError("no prediction edge from segment " + std::to_string(upstream) +
                            " to segment " + std::to_string(downstream));
    return edges_[size_t(*idx)].path;
}

GroupPartition discretize(const std::vector<double>& sensitive,
                          const std::vector<double>& thresholds,
                          std::vector<std::string> labels) {
    for (size_t k = 1; k < thresholds.size(); ++k)
        if (!(thresholds[k - 1] < thresholds[k]))
            throw ValidationError("thresholds must be strictly increasing");
    GroupPartition part;
    part.thresholds = thresholds;
    if (labels.empty()) {
        for (size_t g = 0; g <= thresholds.size(); ++g) labels.push_back("g" + std::to_string(g));
    }
    if (labels.size() != thresholds.size() + 1)
        throw ValidationError("need one label per bin (thresholds + 1)");
    part.labels = std::move(labels);
    part.membership.reserve(sensitive.size());
    for (double v : sensitive) {
        int g = 0;
        while (g < int(thresholds.size()) && v >= thresholds[size_t(g)]) ++g;
        part.membership.push_back(g);
    }
    return part;
}

} // namespace fairstream
