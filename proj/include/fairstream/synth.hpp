#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fairstream/basin.hpp"

namespace fairstream {

// Knobs for one synthetic basin. Everything downstream of this struct is a
// pure function of it: same spec -> identical basin, including all noise,
// masks and sensitive values.
struct BasinSpec {
    int segment_count = 50;
    double tree_branching = 1.5;       // mean upstream children per segment
    int time_steps = 365;
    double observation_density = 0.3;  // fraction of (segment, day) temp cells observed
    double streamflow_observation_density = 0.5;
    double sensitive_clustering = 0.5; // 0 = independent draws, 1 = pure neighbor mean
    double noise_scale = 0.5;          // deg C, also scales weather noise
    std::uint64_t seed = 0;
    // Observation probability tilt along the sensitive axis: 0 keeps the
    // density uniform, 1 makes low-s segments roughly unobserved and high-s
    // segments observed at ~2x density.
    double observation_bias = 0.0;
    // Daily relaxation toward air temperature; 0 disables and leaves the pure
    // flow-weighted mixing dynamics.
    double air_relaxation = 0.1;

    void validate() const;
};

// Random directed tree (edges point downstream), distances drawn from a fixed
// range. Deterministic in spec.seed.
BasinGraph generate_topology(const BasinSpec& spec);

// Weather drivers, local runoff and accumulated streamflow for every segment.
// Flow at a segment is the sum of its direct upstream flows plus local runoff,
// floored at kMinFlow.
std::vector<SegmentSeries> simulate_flow_and_weather(const BasinGraph& graph,
                                                     const BasinSpec& spec);

// Flow-weighted mixing of the previous own temperature with current upstream
// temperatures; the convex-combination step applied at every (segment, day).
double mix_temperature(double prev_own_temp, double own_flow,
                       std::span<const double> upstream_temps,
                       std::span<const double> upstream_flows);

// Dense water temperature evolved in topological order: flow-weighted mixing,
// then relaxation toward air temperature, then additive noise.
Eigen::MatrixXd simulate_temperature(const BasinGraph& graph,
                                     const std::vector<SegmentSeries>& series,
                                     const BasinSpec& spec);

// Continuous sensitive value per segment, spatially autocorrelated along the
// network with strength spec.sensitive_clustering. Values lie in [0, 1].
std::vector<double> assign_sensitive(const BasinGraph& graph, const BasinSpec& spec);

// Bernoulli(density) mask per cell.
Mask mask_observations(const Eigen::MatrixXd& dense, double density, std::uint64_t seed);

// Per-segment densities (rows of `dense` follow segment ids).
Mask mask_observations(const Eigen::MatrixXd& dense,
                       const std::vector<double>& per_segment_density,
                       std::uint64_t seed);

// Full bundle: topology, drivers, temperatures, sensitive values and both
// observation masks, with the observation-bias tilt applied to temperature
// observations.
SyntheticBasin generate_basin(const BasinSpec& spec);

// Observation probability per segment given the bias tilt; exposed for tests.
std::vector<double> biased_observation_density(const std::vector<double>& sensitive,
                                               double density, double bias);

inline constexpr double kMinFlow = 1e-3;

} // namespace fairstream
