#include "fairstream/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairstream {

double rmse(const std::vector<double>& predictions, const std::vector<double>& observations) {
    if (predictions.size() != observations.size())
        throw ValidationError("prediction and observation counts differ");
    if (predictions.empty()) throw ValidationError("rmse over an empty subset");
    double sse = 0.0;
    for (size_t k = 0; k < predictions.size(); ++k) {
        const double e = predictions[k] - observations[k];
        sse += e * e;
    }
    return std::sqrt(sse / double(predictions.size()));
}

double ErrorPool::rmse() const {
    if (count == 0) throw ValidationError("rmse over an empty subset");
    return std::sqrt(sse / double(count));
}

double mean_absolute_deviation(const std::vector<double>& group_values, double reference) {
    if (group_values.empty()) throw ValidationError("no groups to average over");
    double total = 0.0;
    for (double v : group_values) total += std::abs(v - reference);
    return total / double(group_values.size());
}

GroupFairness group_fairness(const std::vector<ErrorPool>& per_group) {
    GroupFairness out;
    ErrorPool all;
    for (const auto& pool : per_group) all.merge(pool);
    if (all.count == 0) throw ValidationError("no observations in any group");
    out.overall_rmse = all.rmse();

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> present;
    out.group_rmse.assign(per_group.size(), nan);
    out.group_deviation.assign(per_group.size(), nan);
    for (size_t g = 0; g < per_group.size(); ++g) {
        if (per_group[g].count == 0) {
            out.excluded_groups.push_back(int(g));
            continue;
        }
        out.group_rmse[g] = per_group[g].rmse();
        out.group_deviation[g] = std::abs(out.group_rmse[g] - out.overall_rmse);
        present.push_back(out.group_rmse[g]);
    }
    out.m_fair = mean_absolute_deviation(present, out.overall_rmse);
    return out;
}

namespace {

// Pooled RMSE of segments with s inside the closed window [lo, lo + size];
// count 0 signals an empty window.
ErrorPool pool_window(const std::vector<SegmentErrors>& segments, double lo, double size) {
    ErrorPool pool;
    for (const auto& seg : segments)
        if (seg.s_value >= lo && seg.s_value <= lo + size) pool.merge(seg.pool);
    return pool;
}

} // namespace

WindowResult worst_window(const std::vector<SegmentErrors>& segments, double window_size) {
    if (window_size <= 0.0) throw ValidationError("window size must be positive");
    if (segments.empty()) throw ValidationError("no segments to slide a window over");

    // The pooled membership only changes when a window edge crosses some
    // segment's s, so these left edges cover every achievable window content.
    std::vector<double> edges;
    edges.reserve(2 * segments.size());
    for (const auto& seg : segments) {
        edges.push_back(seg.s_value);
        edges.push_back(seg.s_value - window_size);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    bool found = false;
    WindowResult best{};
    for (double lo : edges) {
        const ErrorPool pool = pool_window(segments, lo, window_size);
        if (pool.count == 0) continue;
        const double value = pool.rmse();
        if (!found || value > best.worst_rmse) {
            best.worst_rmse = value;
            best.window_lo = lo;
            found = true;
        }
    }
    if (!found) throw ValidationError("no window contains an observation");
    return best;
}

std::vector<std::pair<double, double>> window_curve(const std::vector<SegmentErrors>& segments,
                                                    double window_size,
                                                    double stride_fraction) {
    if (window_size <= 0.0) throw ValidationError("window size must be positive");
    if (stride_fraction <= 0.0 || stride_fraction > 1.0)
        throw ValidationError("stride fraction must lie in (0,1]");
    if (segments.empty()) throw ValidationError("no segments to slide a window over");

    double s_min = segments.front().s_value, s_max = segments.front().s_value;
    for (const auto& seg : segments) {
        s_min = std::min(s_min, seg.s_value);
        s_max = std::max(s_max, seg.s_value);
    }
    const double stride = window_size * stride_fraction;
    std::vector<std::pair<double, double>> curve;
    for (double lo = s_min - window_size; lo <= s_max + stride * 0.5; lo += stride) {
        const ErrorPool pool = pool_window(segments, lo, window_size);
        if (pool.count == 0) continue;
        curve.emplace_back(lo + window_size / 2.0, pool.rmse());
    }
    return curve;
}

} // namespace fairstream
