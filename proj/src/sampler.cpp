#include "fairstream/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairstream {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::map<int, double> group_sums(const std::vector<NeighborInfo>& picked) {
    std::map<int, double> si;
    for (const auto& nb : picked) si[nb.group] += nb.influence;
    return si;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

} // namespace

std::pair<std::vector<int>, std::vector<int>> sample_initial(const PredictionGraph& graph,
                                                             SegmentId node, int budget,
                                                             Rng& rng) {
    const auto& in = graph.in_edges(node);
    const int n = int(in.size());
    std::vector<int> initial, pool;
    if (n == 0) return {initial, pool};
    if (budget >= n) {
        initial = in;
        return {initial, pool};
    }
    const std::vector<int> chosen = rng.sample_without_replacement(n, budget);
    std::vector<char> is_chosen(size_t(n), 0);
    for (int pos : chosen) is_chosen[size_t(pos)] = 1;
    for (int pos = 0; pos < n; ++pos)
        (is_chosen[size_t(pos)] ? initial : pool).push_back(in[size_t(pos)]);
    return {initial, pool};
}

double group_influence_ratio(const std::vector<NeighborInfo>& picked,
                             const std::vector<int>& target_groups) {
    if (target_groups.empty()) return 1.0;
    std::map<int, double> si = group_sums(picked);
    double lo = kInf, hi = 0.0;
    for (int g : target_groups) {
        auto it = si.find(g);
        const double v = it == si.end() ? 0.0 : it->second;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo <= 0.0) return kInf;
    return hi / lo;
}

void modify_discrete(std::vector<NeighborInfo>& picked, std::vector<NeighborInfo>& pool,
                     double tolerance, double similarity_weight, int move_cap) {
    std::vector<int> target_groups;
    for (const auto& nb : picked) target_groups.push_back(nb.group);
    for (const auto& nb : pool) target_groups.push_back(nb.group);
    std::sort(target_groups.begin(), target_groups.end());
    target_groups.erase(std::unique(target_groups.begin(), target_groups.end()),
                        target_groups.end());
    if (target_groups.size() <= 1) return;

    for (int moves = 0; moves < move_cap; ++moves) {
        const double ratio = group_influence_ratio(picked, target_groups);
        if (ratio <= 1.0 + tolerance) return;

        std::map<int, double> si = group_sums(picked);
        int under = -1, over = -1;
        double under_si = kInf, over_si = -kInf;
        for (int g : target_groups) {
            auto it = si.find(g);
            const double v = it == si.end() ? 0.0 : it->second;
            if (v < under_si) {
                under_si = v;
                under = g;
            }
            if (v > over_si) {
                over_si = v;
                over = g;
            }
        }

        // Candidate score: normalized influence blended with feature
        // similarity to the target node.
        double max_pool_inf = 0.0;
        for (const auto& nb : pool) max_pool_inf = std::max(max_pool_inf, nb.influence);
        int inject_pos = -1;
        double inject_score = -kInf;
        for (size_t p = 0; p < pool.size(); ++p) {
            if (pool[p].group != under) continue;
            const double norm_inf = max_pool_inf > 0.0 ? pool[p].influence / max_pool_inf : 0.0;
            const double score = (1.0 - similarity_weight) * norm_inf +
                                 similarity_weight * pool[p].feature_similarity;
            if (score > inject_score ||
                (score == inject_score && inject_pos >= 0 && pool[p].id < pool[size_t(inject_pos)].id)) {
                inject_score = score;
                inject_pos = int(p);
            }
        }

        if (inject_pos >= 0) {
            std::vector<NeighborInfo> trial = picked;
            trial.push_back(pool[size_t(inject_pos)]);
            if (group_influence_ratio(trial, target_groups) < ratio) {
                picked.push_back(pool[size_t(inject_pos)]);
                pool.erase(pool.begin() + inject_pos);
                continue;
            }
            return; // best injection does not improve balance
        }

        // No candidate in the most under-represented group: drop the weakest
        // neighbor of the most over-represented one.
        int victim = -1;
        for (size_t p = 0; p < picked.size(); ++p) {
            if (picked[p].group != over) continue;
            if (victim < 0 || picked[p].influence < picked[size_t(victim)].influence ||
                (picked[p].influence == picked[size_t(victim)].influence &&
                 picked[p].id < picked[size_t(victim)].id))
                victim = int(p);
        }
        if (victim < 0) return;
        std::vector<NeighborInfo> trial = picked;
        trial.erase(trial.begin() + victim);
        if (group_influence_ratio(trial, target_groups) < ratio) {
            picked.erase(picked.begin() + victim);
            continue;
        }
        return; // removal would not improve balance (e.g. it would empty the group)
    }
}

double pairwise_s_range(const std::vector<NeighborInfo>& picked,
                        const std::vector<NeighborInfo>& pool) {
    double lo = kInf, hi = -kInf;
    for (const auto& nb : picked) {
        lo = std::min(lo, nb.s_value);
        hi = std::max(hi, nb.s_value);
    }
    for (const auto& nb : pool) {
        lo = std::min(lo, nb.s_value);
        hi = std::max(hi, nb.s_value);
    }
    if (!(hi > lo)) return 0.0;
    return hi - lo;
}

double density(const std::vector<NeighborInfo>& picked, double candidate_s, double range) {
    double total = 0.0;
    for (const auto& nb : picked) {
        const double sim = range > 0.0 ? 1.0 - std::abs(candidate_s - nb.s_value) / range : 1.0;
        total += sim * nb.influence;
    }
    return total;
}

namespace {

double population_variance(const std::vector<NeighborInfo>& picked, double extra_s, bool with_extra) {
    const double n = double(picked.size()) + (with_extra ? 1.0 : 0.0);
    if (n == 0.0) return 0.0;
    double mean = with_extra ? extra_s : 0.0;
    for (const auto& nb : picked) mean += nb.s_value;
    mean /= n;
    double var = with_extra ? (extra_s - mean) * (extra_s - mean) : 0.0;
    for (const auto& nb : picked) var += (nb.s_value - mean) * (nb.s_value - mean);
    return var / n;
}

} // namespace

void modify_continuous(std::vector<NeighborInfo>& picked, std::vector<NeighborInfo>& pool,
                       int max_injections) {
    if (pool.empty() || max_injections <= 0) return;
    const double range = pairwise_s_range(picked, pool);

    struct Ranked {
        double density;
        NeighborInfo info;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(pool.size());
    for (const auto& nb : pool) ranked.push_back({density(picked, nb.s_value, range), nb});
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.density != b.density) return a.density < b.density;
        if (a.info.influence != b.info.influence) return a.info.influence > b.info.influence;
        return a.info.id < b.info.id;
    });

    double var = population_variance(picked, 0.0, false);
    int injected = 0;
    for (const auto& r : ranked) {
        if (injected >= max_injections) break;
        const double new_var = population_variance(picked, r.info.s_value, true);
        if (!(new_var > var)) break;
        picked.push_back(r.info);
        var = new_var;
        ++injected;
    }
    pool.clear();
}

void rescale_weights(std::vector<NeighborInfo>& picked, std::map<int, double>& group_influence,
                     std::vector<double>& weights_out) {
    group_influence = group_sums(picked);
    double max_si = 0.0;
    for (const auto& [g, si] : group_influence) max_si = std::max(max_si, si);
    weights_out.resize(picked.size());
    for (size_t p = 0; p < picked.size(); ++p) {
        const double si = group_influence.at(picked[p].group);
        weights_out[p] = picked[p].base_weight * (si > 0.0 ? max_si / si : 1.0);
    }
}

NeighborSample sample_node(const SamplerContext& ctx, const SamplerConfig& config,
                           SegmentId node, std::uint64_t epoch) {
    config.validate();
    NeighborSample sample;
    sample.target = node;

    Rng rng = Rng::stream(config.seed, std::uint64_t(std::uint32_t(node)), epoch);
    auto [initial_edges, pool_edges] =
        sample_initial(*ctx.graph, node, config.neighbor_budget, rng);
    if (initial_edges.empty() && pool_edges.empty()) {
        sample.headwater = true;
        return sample;
    }

    const bool needs_groups = config.mode == SamplerMode::FairDiscrete ||
                              config.mode == SamplerMode::FairEdgeAblation ||
                              config.mode == SamplerMode::FairAdjAblation;
    if (needs_groups && ctx.groups == nullptr)
        throw ValidationError("discrete sampler modes need a group partition");
    if (config.mode == SamplerMode::FairContinuous && ctx.s_values == nullptr)
        throw ValidationError("continuous sampler mode needs sensitive values");

    auto make_info = [&](int edge) {
        const PredictionEdge& pe = ctx.graph->edges()[size_t(edge)];
        NeighborInfo nb;
        nb.id = pe.upstream;
        nb.edge = edge;
        nb.base_weight = pe.weight;
        switch (config.mode) {
            case SamplerMode::FairEdgeAblation: nb.influence = 1.0; break;
            case SamplerMode::FairAdjAblation: nb.influence = pe.weight; break;
            default: nb.influence = ctx.influence(edge); break;
        }
        if (ctx.groups) nb.group = ctx.groups->membership.at(size_t(pe.upstream));
        if (ctx.s_values) nb.s_value = (*ctx.s_values)[size_t(pe.upstream)];
        if (ctx.feature_means)
            nb.feature_similarity = cosine_similarity(ctx.feature_means->row(node).transpose(),
                                                      ctx.feature_means->row(pe.upstream).transpose());
        return nb;
    };

    std::vector<NeighborInfo> picked, pool;
    for (int e : initial_edges) picked.push_back(make_info(e));
    for (int e : pool_edges) pool.push_back(make_info(e));

    std::vector<double> weights(picked.size());
    switch (config.mode) {
        case SamplerMode::Random:
            for (size_t p = 0; p < picked.size(); ++p) weights[p] = picked[p].base_weight;
            sample.group_influence = group_sums(picked);
            break;
        case SamplerMode::FairDiscrete:
        case SamplerMode::FairEdgeAblation:
        case SamplerMode::FairAdjAblation:
            modify_discrete(picked, pool, config.balance_tolerance,
                            config.feature_similarity_weight, 4 * config.neighbor_budget);
            rescale_weights(picked, sample.group_influence, weights);
            break;
        case SamplerMode::FairContinuous:
            modify_continuous(picked, pool, config.neighbor_budget / 2);
            weights.resize(picked.size());
            for (size_t p = 0; p < picked.size(); ++p) weights[p] = picked[p].base_weight;
            sample.group_influence = group_sums(picked);
            break;
    }

    sample.neighbors.reserve(picked.size());
    for (size_t p = 0; p < picked.size(); ++p)
        sample.neighbors.push_back({picked[p].id, weights[p], picked[p].influence});
    return sample;
}

std::vector<NeighborSample> sample_all(const SamplerContext& ctx, const SamplerConfig& config,
                                       std::uint64_t epoch) {
    std::vector<NeighborSample> samples;
    samples.reserve(size_t(ctx.graph->segment_count()));
    for (SegmentId i = 0; i < ctx.graph->segment_count(); ++i)
        samples.push_back(sample_node(ctx, config, i, epoch));
    return samples;
}

SamplerMode sampler_mode_from_string(const std::string& name) {
    if (name == "random") return SamplerMode::Random;
    if (name == "fair-discrete") return SamplerMode::FairDiscrete;
    if (name == "fair-continuous") return SamplerMode::FairContinuous;
    if (name == "fair-edge-ablation") return SamplerMode::FairEdgeAblation;
    if (name == "fair-adj-ablation") return SamplerMode::FairAdjAblation;
    throw ValidationError("unknown sampler mode: " + name);
}

std::string to_string(SamplerMode mode) {
    switch (mode) {
        case SamplerMode::Random: return "random";
        case SamplerMode::FairDiscrete: return "fair-discrete";
        case SamplerMode::FairContinuous: return "fair-continuous";
        case SamplerMode::FairEdgeAblation: return "fair-edge-ablation";
        case SamplerMode::FairAdjAblation: return "fair-adj-ablation";
    }
    throw ValidationError("unknown sampler mode");
}

} // namespace fairstream
