#include "fairstream/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "fairstream/rng.hpp"

namespace fairstream {

namespace {

// Substream labels; each generation stage owns an independent stream so that
// adding draws to one stage never perturbs another.
enum StreamKind : std::uint64_t {
    kStreamTopology = 1,
    kStreamElevation = 2,
    kStreamWeather = 3,
    kStreamRunoff = 4,
    kStreamTemperature = 5,
    kStreamSensitive = 6,
    kStreamMask = 7,
    kStreamSimFlowError = 8,
};

constexpr double kDistanceMin = 500.0;
constexpr double kDistanceMax = 5000.0;
constexpr double kAirTempMean = 12.0;
constexpr double kAirTempAmplitude = 10.0;
constexpr double kElevationStep = 0.8;   // per-hop random-walk step of the local climate offset
constexpr double kSeasonPhaseDays = 105.0;
constexpr double kRunoffSeasonLag = 60.0;
constexpr int kYearDays = 365;

double season(double day, double lag) {
    return std::sin(2.0 * std::numbers::pi * (day - lag) / double(kYearDays));
}

// BFS order from the outlets upward; every visited segment has at least one
// already-visited network neighbor (its downstream parent).
std::vector<SegmentId> outlet_first_order(const BasinGraph& graph) {
    std::vector<SegmentId> order;
    order.reserve(size_t(graph.segment_count()));
    std::vector<char> seen(size_t(graph.segment_count()), 0);
    std::deque<SegmentId> frontier;
    for (SegmentId o : graph.outlets()) {
        frontier.push_back(o);
        seen[size_t(o)] = 1;
    }
    while (!frontier.empty()) {
        SegmentId i = frontier.front();
        frontier.pop_front();
        order.push_back(i);
        for (SegmentId u : graph.upstream_of(i)) {
            if (!seen[size_t(u)]) {
                seen[size_t(u)] = 1;
                frontier.push_back(u);
            }
        }
    }
    return order;
}

// Spatially smooth per-segment offset: random walk along the tree from the
// outlet, so distant headwaters drift furthest from the basin mean.
std::vector<double> elevation_offsets(const BasinGraph& graph, const BasinSpec& spec) {
    std::vector<double> offset(size_t(graph.segment_count()), 0.0);
    Rng rng = Rng::stream(spec.seed, kStreamElevation);
    for (SegmentId i : outlet_first_order(graph)) {
        const auto& down = graph.downstream_of(i);
        if (down.empty()) {
            offset[size_t(i)] = rng.normal(0.0, 1.0);
        } else {
            offset[size_t(i)] = offset[size_t(down.front())] + rng.normal(0.0, kElevationStep);
        }
    }
    return offset;
}

} // namespace

void BasinSpec::validate() const {
    if (segment_count < 2) throw ValidationError("segment_count must be >= 2");
    if (time_steps < 2) throw ValidationError("time_steps must be >= 2");
    if (tree_branching < 0.0) throw ValidationError("tree_branching must be >= 0");
    auto density_ok = [](double d) { return d >= 0.0 && d <= 1.0; };
    if (!density_ok(observation_density))
        throw ValidationError("observation_density must lie in [0,1]");
    if (!density_ok(streamflow_observation_density))
        throw ValidationError("streamflow_observation_density must lie in [0,1]");
    if (!density_ok(sensitive_clustering))
        throw ValidationError("sensitive_clustering must lie in [0,1]");
    if (noise_scale < 0.0) throw ValidationError("noise_scale must be >= 0");
    if (observation_bias < 0.0 || observation_bias > 1.0)
        throw ValidationError("observation_bias must lie in [0,1]");
    if (air_relaxation < 0.0 || air_relaxation > 1.0)
        throw ValidationError("air_relaxation must lie in [0,1]");
}

BasinGraph generate_topology(const BasinSpec& spec) {
    spec.validate();
    Rng rng = Rng::stream(spec.seed, kStreamTopology);

    // Grow a tree outward from the outlet (id 0). Each dequeued segment draws
    // a Poisson(tree_branching) number of upstream children; if the frontier
    // drains early the remaining segments attach to uniformly chosen existing
    // ones.
    std::vector<DirectEdge> edges;
    edges.reserve(size_t(spec.segment_count - 1));
    std::deque<SegmentId> frontier{0};
    SegmentId next_id = 1;
    while (next_id < spec.segment_count) {
        SegmentId parent;
        int children;
        if (frontier.empty()) {
            parent = SegmentId(rng.uniform_int(std::uint64_t(next_id)));
            children = 1;
        } else {
            parent = frontier.front();
            frontier.pop_front();
            children = rng.poisson(spec.tree_branching);
        }
        children = std::min(children, spec.segment_count - next_id);
        for (int c = 0; c < children; ++c) {
            SegmentId child = next_id++;
            edges.push_back({child, parent, rng.uniform(kDistanceMin, kDistanceMax)});
            frontier.push_back(child);
        }
    }
    return BasinGraph(spec.segment_count, std::move(edges));
}

std::vector<SegmentSeries> simulate_flow_and_weather(const BasinGraph& graph,
                                                     const BasinSpec& spec) {
    spec.validate();
    const int n = graph.segment_count();
    const int T = spec.time_steps;
    const std::vector<double> elev = elevation_offsets(graph, spec);

    std::vector<SegmentSeries> series(size_t(n));
    for (SegmentId i = 0; i < n; ++i) {
        Rng weather = Rng::stream(spec.seed, kStreamWeather, std::uint64_t(i));
        Rng runoff_rng = Rng::stream(spec.seed, kStreamRunoff, std::uint64_t(i));
        SegmentSeries& s = series[size_t(i)];
        s.features.resize(T, kFeatureDim);
        s.runoff.resize(T);
        s.flow.setZero(T);

        const double base_runoff = std::exp(runoff_rng.normal(0.0, 0.4));
        for (int t = 0; t < T; ++t) {
            const double day = double(t % kYearDays);
            const double doy_angle = 2.0 * std::numbers::pi * day / double(kYearDays);
            const double air = kAirTempMean + kAirTempAmplitude * season(day, kSeasonPhaseDays) -
                               elev[size_t(i)] + spec.noise_scale * weather.normal();
            const double solar =
                std::max(0.0, 180.0 + 120.0 * season(day, kSeasonPhaseDays) +
                                  20.0 * weather.normal());
            const double wet = weather.uniform();
            double precip = 0.0;
            if (wet < 0.3) {
                double u = weather.uniform();
                while (u == 0.0) u = weather.uniform();
                precip = -2.0 * std::log(u);
            }
            s.features(t, kFeatDoySin) = std::sin(doy_angle);
            s.features(t, kFeatDoyCos) = std::cos(doy_angle);
            s.features(t, kFeatAirTemp) = air;
            s.features(t, kFeatSolar) = solar;
            s.features(t, kFeatPrecip) = precip;

            const double seasonal = 1.0 + 0.5 * season(day, kRunoffSeasonLag);
            s.runoff(t) = std::max(kMinFlow, base_runoff * seasonal + 0.4 * precip +
                                                 0.2 * spec.noise_scale * runoff_rng.normal());
        }
    }

    // Accumulate flow downstream.
    for (SegmentId i : graph.topological_order()) {
        SegmentSeries& s = series[size_t(i)];
        s.flow = s.runoff;
        for (SegmentId u : graph.upstream_of(i)) s.flow += series[size_t(u)].flow;
        for (int t = 0; t < spec.time_steps; ++t) s.flow(t) = std::max(kMinFlow, s.flow(t));
    }
    return series;
}

double mix_temperature(double prev_own_temp, double own_flow,
                       std::span<const double> upstream_temps,
                       std::span<const double> upstream_flows) {
    if (own_flow <= 0.0) throw NumericError("mix_temperature requires positive own flow");
    double numer = prev_own_temp * own_flow;
    double denom = own_flow;
    for (size_t k = 0; k < upstream_temps.size(); ++k) {
        if (upstream_flows[k] <= 0.0)
            throw NumericError("mix_temperature requires positive upstream flow");
        numer += upstream_temps[k] * upstream_flows[k];
        denom += upstream_flows[k];
    }
    return numer / denom;
}

Eigen::MatrixXd simulate_temperature(const BasinGraph& graph,
                                     const std::vector<SegmentSeries>& series,
                                     const BasinSpec& spec) {
    const int n = graph.segment_count();
    const int T = spec.time_steps;
    for (SegmentId i = 0; i < n; ++i)
        if ((series[size_t(i)].flow.array() <= 0.0).any())
            throw NumericError("temperature simulation requires strictly positive flows");

    std::vector<Rng> noise;
    noise.reserve(size_t(n));
    for (SegmentId i = 0; i < n; ++i)
        noise.push_back(Rng::stream(spec.seed, kStreamTemperature, std::uint64_t(i)));

    Eigen::MatrixXd temp(n, T);
    for (SegmentId i = 0; i < n; ++i)
        temp(i, 0) = series[size_t(i)].features(0, kFeatAirTemp);

    std::vector<double> up_temps, up_flows;
    for (int t = 1; t < T; ++t) {
        for (SegmentId i : graph.topological_order()) {
            const SegmentSeries& s = series[size_t(i)];
            up_temps.clear();
            up_flows.clear();
            for (SegmentId u : graph.upstream_of(i)) {
                up_temps.push_back(temp(u, t));
                up_flows.push_back(series[size_t(u)].flow(t));
            }
            double y = mix_temperature(temp(i, t - 1), s.flow(t), up_temps, up_flows);
            y += spec.air_relaxation * (s.features(t, kFeatAirTemp) - y);
            y += spec.noise_scale * noise[size_t(i)].normal();
            temp(i, t) = y;
        }
    }
    return temp;
}

std::vector<double> assign_sensitive(const BasinGraph& graph, const BasinSpec& spec) {
    const double c = spec.sensitive_clustering;
    Rng rng = Rng::stream(spec.seed, kStreamSensitive);
    std::vector<double> s(size_t(graph.segment_count()), 0.0);
    std::vector<char> assigned(size_t(graph.segment_count()), 0);

    // One-pass spatial autoregression in outlet-first order: each segment
    // blends the mean of its already-assigned network neighbors with a fresh
    // uniform draw. The draw is consumed unconditionally to keep the stream
    // alignment independent of the clustering value.
    for (SegmentId i : outlet_first_order(graph)) {
        const double fresh = rng.uniform();
        double nbr_sum = 0.0;
        int nbr_count = 0;
        for (SegmentId u : graph.upstream_of(i))
            if (assigned[size_t(u)]) {
                nbr_sum += s[size_t(u)];
                ++nbr_count;
            }
        for (SegmentId d : graph.downstream_of(i))
            if (assigned[size_t(d)]) {
                nbr_sum += s[size_t(d)];
                ++nbr_count;
            }
        if (nbr_count == 0) {
            s[size_t(i)] = fresh;
        } else {
            s[size_t(i)] = c * (nbr_sum / double(nbr_count)) + (1.0 - c) * fresh;
        }
        assigned[size_t(i)] = 1;
    }
    return s;
}

Mask mask_observations(const Eigen::MatrixXd& dense, double density, std::uint64_t seed) {
    if (density < 0.0 || density > 1.0) throw ValidationError("density must lie in [0,1]");
    std::vector<double> per_segment(size_t(dense.rows()), density);
    return mask_observations(dense, per_segment, seed);
}

Mask mask_observations(const Eigen::MatrixXd& dense,
                       const std::vector<double>& per_segment_density,
                       std::uint64_t seed) {
    if (per_segment_density.size() != size_t(dense.rows()))
        throw ValidationError("per-segment density count must match rows");
    Mask mask(dense.rows(), dense.cols());
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
        const double p = per_segment_density[size_t(i)];
        if (p < 0.0 || p > 1.0) throw ValidationError("density must lie in [0,1]");
        Rng rng = Rng::stream(seed, kStreamMask, std::uint64_t(i));
        for (Eigen::Index t = 0; t < dense.cols(); ++t)
            mask(i, t) = rng.uniform() < p ? 1 : 0;
    }
    return mask;
}

std::vector<double> biased_observation_density(const std::vector<double>& sensitive,
                                               double density, double bias) {
    const size_t n = sensitive.size();
    std::vector<double> out(n, density);
    if (bias == 0.0 || n < 2) return out;

    // Rank-based tilt: the lowest-s segment gets density*(1-bias), the highest
    // density*(1+bias), clamped to [0,1].
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (sensitive[a] != sensitive[b]) return sensitive[a] < sensitive[b];
        return a < b;
    });
    for (size_t r = 0; r < n; ++r) {
        const double rank_norm = double(r) / double(n - 1);
        const double p = density * (1.0 + bias * (2.0 * rank_norm - 1.0));
        out[order[r]] = std::clamp(p, 0.0, 1.0);
    }
    return out;
}

SyntheticBasin generate_basin(const BasinSpec& spec) {
    spec.validate();
    SyntheticBasin basin;
    basin.graph = generate_topology(spec);
    basin.series = simulate_flow_and_weather(basin.graph, spec);
    basin.ground_truth_temperature = simulate_temperature(basin.graph, basin.series, spec);
    basin.sensitive = assign_sensitive(basin.graph, spec);

    const int n = basin.graph.segment_count();
    const int T = spec.time_steps;

    // Temperature observations: density tilted along the sensitive axis.
    Mask temp_mask =
        mask_observations(basin.ground_truth_temperature,
                          biased_observation_density(basin.sensitive, spec.observation_density,
                                                     spec.observation_bias),
                          spec.seed);

    // Flow observations: uniform density. Unobserved cells carry the simulated
    // value (true flow with a small multiplicative simulation error).
    Eigen::MatrixXd flow_true(n, T);
    for (SegmentId i = 0; i < n; ++i) flow_true.row(i) = basin.series[size_t(i)].flow;
    Mask flow_mask =
        mask_observations(flow_true, spec.streamflow_observation_density, spec.seed ^ 0x5f0ceULL);

    for (SegmentId i = 0; i < n; ++i) {
        SegmentSeries& s = basin.series[size_t(i)];
        Rng sim_err = Rng::stream(spec.seed, kStreamSimFlowError, std::uint64_t(i));
        s.flow_observed.resize(size_t(T));
        s.temp_observed.resize(size_t(T));
        s.temp = basin.ground_truth_temperature.row(i);
        for (int t = 0; t < T; ++t) {
            const double err = sim_err.normal(0.0, 0.1);
            s.flow_observed[size_t(t)] = flow_mask(i, t);
            if (!flow_mask(i, t))
                s.flow(t) = std::max(kMinFlow, s.flow(t) * (1.0 + err));
            s.temp_observed[size_t(t)] = temp_mask(i, t);
        }
    }
    return basin;
}

} // namespace fairstream
