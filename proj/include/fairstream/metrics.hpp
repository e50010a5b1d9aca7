#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairstream/errors.hpp"

namespace fairstream {

// Root mean squared error over paired predictions and observations.
double rmse(const std::vector<double>& predictions, const std::vector<double>& observations);

// Squared-error pool; windows and groups combine these.
struct ErrorPool {
    double sse = 0.0;
    std::int64_t count = 0;

    void add(double prediction, double observation) {
        const double e = prediction - observation;
        sse += e * e;
        ++count;
    }
    void merge(const ErrorPool& other) {
        sse += other.sse;
        count += other.count;
    }
    double rmse() const;
};

// Mean absolute deviation of per-group performance from the overall
// performance. Groups with no observations are skipped (reported via
// excluded_groups) and do not count toward the divisor.
struct GroupFairness {
    double overall_rmse = 0.0;
    double m_fair = 0.0;
    std::vector<double> group_rmse;      // NaN for excluded groups
    std::vector<double> group_deviation; // |group - overall|, NaN for excluded
    std::vector<int> excluded_groups;
};

GroupFairness group_fairness(const std::vector<ErrorPool>& per_group);

// Per-group performance from raw deviations when group RMSEs are already
// known; direct transcription of the fairness formula.
double mean_absolute_deviation(const std::vector<double>& group_values, double reference);

// Per-segment error summary used by the sliding-window evaluation.
struct SegmentErrors {
    int segment = -1;
    double s_value = 0.0;
    ErrorPool pool;
};

struct WindowResult {
    double worst_rmse = 0.0;
    double window_lo = 0.0; // left edge of the worst window
};

// Worst pooled RMSE over windows of the given width on the sensitive axis.
// Every window position where the member set can change is evaluated (each
// segment's s as a left edge and as a right edge), which makes the result
// exact for all positions; windows with no observations are skipped.
WindowResult worst_window(const std::vector<SegmentErrors>& segments, double window_size);

// RMSE curve on a regular window grid: (window center, pooled rmse) for
// windows stepped by stride_fraction * window_size; empty windows skipped.
std::vector<std::pair<double, double>> window_curve(const std::vector<SegmentErrors>& segments,
                                                    double window_size,
                                                    double stride_fraction);

} // namespace fairstream
