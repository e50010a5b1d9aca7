#include "fairstream/basin.hpp"

#include <algorithm>
#include <queue>

namespace fairstream {

BasinGraph::BasinGraph(int segment_count, std::vector<DirectEdge> edges)
    : segment_count_(segment_count), edges_(std::move(edges)) {
    if (segment_count_ < 1) throw ValidationError("basin graph needs at least one segment");
    upstream_.assign(size_t(segment_count_), {});
    downstream_.assign(size_t(segment_count_), {});
    in_edges_.assign(size_t(segment_count_), {});

    for (size_t e = 0; e < edges_.size(); ++e) {
        const DirectEdge& ed = edges_[e];
        if (ed.upstream < 0 || ed.upstream >= segment_count_ || ed.downstream < 0 ||
            ed.downstream >= segment_count_)
            throw ValidationError("edge endpoint out of range");
        if (ed.upstream == ed.downstream) throw ValidationError("self-edge not allowed");
        if (ed.distance <= 0.0) throw ValidationError("stream distance must be positive");
        upstream_[size_t(ed.downstream)].push_back(ed.upstream);
        downstream_[size_t(ed.upstream)].push_back(ed.downstream);
        in_edges_[size_t(ed.downstream)].push_back(int(e));
    }
    for (auto& v : upstream_) std::sort(v.begin(), v.end());
    for (auto& v : downstream_) std::sort(v.begin(), v.end());

    // Kahn's algorithm; also proves acyclicity.
    std::vector<int> pending(size_t(segment_count_), 0);
    for (const auto& ed : edges_) pending[size_t(ed.downstream)]++;
    std::priority_queue<SegmentId, std::vector<SegmentId>, std::greater<>> ready;
    for (SegmentId i = 0; i < segment_count_; ++i)
        if (pending[size_t(i)] == 0) ready.push(i);
    topo_.reserve(size_t(segment_count_));
    while (!ready.empty()) {
        SegmentId i = ready.top();
        ready.pop();
        topo_.push_back(i);
        for (SegmentId d : downstream_[size_t(i)])
            if (--pending[size_t(d)] == 0) ready.push(d);
    }
    if (int(topo_.size()) != segment_count_)
        throw ValidationError("river network contains a cycle");

    for (SegmentId i = 0; i < segment_count_; ++i)
        if (downstream_[size_t(i)].empty()) outlets_.push_back(i);
}

} // namespace fairstream
