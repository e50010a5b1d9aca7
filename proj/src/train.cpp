#include "fairstream/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

namespace fairstream {

namespace {

constexpr std::uint64_t kStreamBatchShuffle = 0x62617463ULL;

// Segments with at least one observed temperature cell in [begin, end).
std::vector<SegmentId> observed_segments(const Bundle& bundle, int begin, int end) {
    std::vector<SegmentId> out;
    for (SegmentId i = 0; i < bundle.graph.segment_count(); ++i) {
        const auto& flags = bundle.series[size_t(i)].temp_observed;
        for (int t = begin; t < end; ++t)
            if (flags[size_t(t)]) {
                out.push_back(i);
                break;
            }
    }
    return out;
}

// Assembles a mini-batch: targets at level 0, sampled neighborhoods expanded
// one level per aggregation layer, observations scaled to model units.
Batch build_batch(const Pipeline& pipe, const std::vector<NeighborSample>& samples,
                  const std::vector<SegmentId>& targets, int encode_steps, int obs_begin,
                  int obs_end) {
    const Bundle& bundle = *pipe.bundle;
    const int layers = pipe.model_config.gnn_layers;

    Batch batch;
    batch.time_steps = encode_steps;
    std::unordered_map<SegmentId, int> ctx_of;
    auto add_node = [&](SegmentId id, int level) {
        auto [it, inserted] = ctx_of.emplace(id, batch.size());
        if (inserted) {
            batch.segment_ids.push_back(id);
            batch.features.push_back(&pipe.features_std[size_t(id)]);
            batch.neighbors.emplace_back();
            batch.level.push_back(level);
        }
        return it->second;
    };
    for (SegmentId id : targets) add_node(id, 0);

    // Breadth-first context expansion; nodes enter at their minimal depth.
    for (int scan = 0; scan < batch.size(); ++scan) {
        const int depth = batch.level[size_t(scan)];
        if (depth >= layers) continue;
        const NeighborSample& sample = samples[size_t(batch.segment_ids[size_t(scan)])];
        for (const auto& nb : sample.neighbors) {
            const int nb_ctx = add_node(nb.id, depth + 1);
            batch.neighbors[size_t(scan)].push_back({nb_ctx, nb.weight});
        }
    }

    for (size_t k = 0; k < targets.size(); ++k) {
        const int ctx = int(k); // targets were inserted first, in order
        const auto& series = bundle.series[size_t(targets[k])];
        for (int t = obs_begin; t < obs_end; ++t)
            if (series.temp_observed[size_t(t)])
                batch.observations.push_back(
                    {ctx, t, (series.temp(t) - pipe.target_mean) / pipe.target_stddev});
    }
    return batch;
}

std::vector<std::vector<SegmentId>> chunk_targets(std::vector<SegmentId> nodes, int chunk) {
    std::vector<std::vector<SegmentId>> out;
    for (size_t at = 0; at < nodes.size(); at += size_t(chunk)) {
        const size_t end = std::min(nodes.size(), at + size_t(chunk));
        out.emplace_back(nodes.begin() + long(at), nodes.begin() + long(end));
    }
    return out;
}

// Per-segment pooled test errors in original units.
std::vector<SegmentErrors> collect_errors(const Pipeline& pipe, const ExperimentConfig& cfg,
                                          const ModelState& state,
                                          const std::vector<NeighborSample>& samples, int begin,
                                          int end) {
    const Bundle& bundle = *pipe.bundle;
    std::vector<SegmentErrors> per_segment;
    std::vector<int> slot(size_t(bundle.graph.segment_count()), -1);

    const std::vector<SegmentId> nodes = observed_segments(bundle, begin, end);
    for (const auto& chunk : chunk_targets(nodes, cfg.train.batch_nodes)) {
        Batch batch = build_batch(pipe, samples, chunk, end, begin, end);
        const ForwardResult fr = forward(state, batch, false);
        for (const auto& obs : batch.observations) {
            const SegmentId seg = batch.segment_ids[size_t(obs.node)];
            if (slot[size_t(seg)] < 0) {
                slot[size_t(seg)] = int(per_segment.size());
                per_segment.push_back({seg, bundle.sensitive[size_t(seg)], {}});
            }
            const double pred =
                fr.predictions(obs.node, obs.t) * pipe.target_stddev + pipe.target_mean;
            const double truth = obs.y * pipe.target_stddev + pipe.target_mean;
            per_segment[size_t(slot[size_t(seg)])].pool.add(pred, truth);
        }
    }
    std::sort(per_segment.begin(), per_segment.end(),
              [](const SegmentErrors& a, const SegmentErrors& b) { return a.segment < b.segment; });
    return per_segment;
}

GroupFairness fairness_from_segments(const std::vector<SegmentErrors>& per_segment,
                                     const GroupPartition& groups, GroupRmseMode mode) {
    if (mode == GroupRmseMode::Pooled) {
        std::vector<ErrorPool> pools(size_t(groups.group_count()));
        for (const auto& seg : per_segment)
            pools[size_t(groups.membership[size_t(seg.segment)])].merge(seg.pool);
        return group_fairness(pools);
    }

    // Segment-averaged variant: a group's value is the mean of its segments'
    // RMSEs, the reference is the mean over all segments.
    GroupFairness out;
    std::vector<double> sums(size_t(groups.group_count()), 0.0);
    std::vector<int> counts(size_t(groups.group_count()), 0);
    double total = 0.0;
    int n = 0;
    for (const auto& seg : per_segment) {
        const double value = seg.pool.rmse();
        const int g = groups.membership[size_t(seg.segment)];
        sums[size_t(g)] += value;
        counts[size_t(g)] += 1;
        total += value;
        ++n;
    }
    if (n == 0) throw ValidationError("no observations in any group");
    out.overall_rmse = total / double(n);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.group_rmse.assign(size_t(groups.group_count()), nan);
    out.group_deviation.assign(size_t(groups.group_count()), nan);
    std::vector<double> present;
    for (int g = 0; g < groups.group_count(); ++g) {
        if (counts[size_t(g)] == 0) {
            out.excluded_groups.push_back(g);
            continue;
        }
        out.group_rmse[size_t(g)] = sums[size_t(g)] / double(counts[size_t(g)]);
        out.group_deviation[size_t(g)] = std::abs(out.group_rmse[size_t(g)] - out.overall_rmse);
        present.push_back(out.group_rmse[size_t(g)]);
    }
    out.m_fair = mean_absolute_deviation(present, out.overall_rmse);
    return out;
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_nodes < 1) throw ValidationError("batch_nodes must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("train_fraction must lie strictly inside (0,1)");
    if (seeds.empty()) throw ValidationError("at least one seed required");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (patience < 1) throw ValidationError("patience must be >= 1");
}

void EvalConfig::validate() const {
    if (window_sizes.empty()) throw ValidationError("at least one window size required");
    for (double w : window_sizes)
        if (!(w > 0.0)) throw ValidationError("window sizes must be positive");
    if (!(window_stride_fraction > 0.0 && window_stride_fraction <= 1.0))
        throw ValidationError("window_stride_fraction must lie in (0,1]");
}

Split split_days(int total_days, double train_fraction) {
    if (total_days < 3) throw ValidationError("need at least 3 days to split");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("train_fraction must lie strictly inside (0,1)");
    const int train_total = int(std::llround(double(total_days) * train_fraction));
    const int val_days = train_total / 3;
    Split split;
    split.train_end = train_total - val_days;
    split.val_end = train_total;
    split.test_end = total_days;
    if (split.train_end < 1 || val_days < 1 || split.test_end <= split.val_end)
        throw ValidationError("degenerate split: every part needs at least one day");
    return split;
}

SamplerContext Pipeline::sampler_context() const {
    SamplerContext ctx;
    ctx.graph = &pgraph;
    ctx.groups = &groups;
    ctx.s_values = &bundle->sensitive;
    ctx.feature_means = &feature_means;
    ctx.influence = sampling_influence;
    return ctx;
}

Pipeline prepare_pipeline(const Bundle& bundle, const ExperimentConfig& cfg) {
    cfg.train.validate();
    cfg.eval.validate();
    Pipeline pipe;
    pipe.bundle = &bundle;
    pipe.split = split_days(bundle.time_steps, cfg.train.train_fraction);

    pipe.pgraph = PredictionGraph::expand_multihop(bundle.graph, cfg.graph.hop_limit);
    pipe.pgraph.compute_adjacency();
    pipe.groups = discretize(bundle.sensitive, cfg.graph.group_thresholds, cfg.graph.group_labels);

    // Gap-filled flow straight from the bundle (its flow column is already
    // merged; the flags record the source).
    Eigen::MatrixXd flow(bundle.graph.segment_count(), bundle.time_steps);
    Mask flow_mask(bundle.graph.segment_count(), bundle.time_steps);
    for (SegmentId i = 0; i < bundle.graph.segment_count(); ++i) {
        flow.row(i) = bundle.series[size_t(i)].flow;
        for (int t = 0; t < bundle.time_steps; ++t)
            flow_mask(i, t) = bundle.series[size_t(i)].flow_observed[size_t(t)];
    }
    const FlowTable flows = fill_flow(flow, flow_mask, flow);
    pipe.influence = InfluenceTable::build(pipe.pgraph, flows, cfg.influence_mode);
    pipe.sampling_influence = cfg.influence_mode == InfluenceMode::Averaged
                                  ? pipe.influence.averaged_all()
                                  : pipe.influence.averaged_over(0, pipe.split.train_end);

    // Feature scaler from training days only.
    const int F = bundle.feature_dim;
    pipe.feature_mean.setZero(F);
    pipe.feature_stddev.setZero(F);
    std::int64_t cells = 0;
    for (SegmentId i = 0; i < bundle.graph.segment_count(); ++i) {
        pipe.feature_mean +=
            bundle.series[size_t(i)].features.topRows(pipe.split.train_end).colwise().sum().transpose();
        cells += pipe.split.train_end;
    }
    pipe.feature_mean /= double(cells);
    for (SegmentId i = 0; i < bundle.graph.segment_count(); ++i) {
        const auto block = bundle.series[size_t(i)].features.topRows(pipe.split.train_end);
        pipe.feature_stddev +=
            (block.rowwise() - pipe.feature_mean.transpose()).array().square().colwise().sum().matrix().transpose();
    }
    pipe.feature_stddev = (pipe.feature_stddev / double(cells)).array().sqrt().matrix();
    for (int f = 0; f < F; ++f)
        if (pipe.feature_stddev(f) < 1e-12) pipe.feature_stddev(f) = 1.0;

    pipe.features_std.resize(size_t(bundle.graph.segment_count()));
    pipe.feature_means.resize(bundle.graph.segment_count(), F);
    for (SegmentId i = 0; i < bundle.graph.segment_count(); ++i) {
        Eigen::MatrixXd std_feat =
            (bundle.series[size_t(i)].features.rowwise() - pipe.feature_mean.transpose());
        std_feat.array().rowwise() /= pipe.feature_stddev.transpose().array();
        pipe.feature_means.row(i) =
            std_feat.topRows(pipe.split.train_end).colwise().mean();
        pipe.features_std[size_t(i)] = std::move(std_feat);
    }

    // Target scaler from observed training cells only.
    double y_sum = 0.0, y_sq = 0.0;
    std::int64_t y_count = 0;
    for (SegmentId i = 0; i < bundle.graph.segment_count(); ++i) {
        const auto& series = bundle.series[size_t(i)];
        for (int t = 0; t < pipe.split.train_end; ++t)
            if (series.temp_observed[size_t(t)]) {
                y_sum += series.temp(t);
                y_sq += series.temp(t) * series.temp(t);
                ++y_count;
            }
    }
    if (y_count == 0) throw ValidationError("no observed temperatures in the training window");
    pipe.target_mean = y_sum / double(y_count);
    const double var = std::max(0.0, y_sq / double(y_count) - pipe.target_mean * pipe.target_mean);
    pipe.target_stddev = var > 1e-12 ? std::sqrt(var) : 1.0;

    pipe.model_config = cfg.model;
    pipe.model_config.feature_dim = F;
    pipe.model_config.validate();
    return pipe;
}

double pooled_rmse(const Pipeline& pipe, const ExperimentConfig& cfg, const ModelState& state,
                   const std::vector<NeighborSample>& samples, int begin, int end) {
    ErrorPool pool;
    for (const auto& seg :
         collect_errors(pipe, cfg, state, samples, begin, end))
        pool.merge(seg.pool);
    return pool.rmse();
}

EvalOutputs evaluate_state(const Pipeline& pipe, const ExperimentConfig& cfg, SamplerMode mode,
                           std::uint64_t seed, const ModelState& state) {
    SamplerConfig scfg = cfg.sampler;
    scfg.mode = mode;
    scfg.seed = seed;
    const SamplerContext ctx = pipe.sampler_context();
    const std::vector<NeighborSample> samples = sample_all(ctx, scfg, kEvalEpoch);

    EvalOutputs out;
    out.per_segment = collect_errors(pipe, cfg, state, samples, pipe.split.val_end,
                                     pipe.split.test_end);
    ErrorPool all;
    for (const auto& seg : out.per_segment) all.merge(seg.pool);
    out.rmse = all.rmse();
    out.fairness = fairness_from_segments(out.per_segment, pipe.groups,
                                          cfg.eval.group_rmse_mode);
    for (double w : cfg.eval.window_sizes) {
        const WindowResult wr = worst_window(out.per_segment, w);
        out.worst_windows.push_back({w, wr.worst_rmse, wr.window_lo});
    }
    out.window_curve = window_curve(out.per_segment, cfg.eval.window_sizes.front(),
                                    cfg.eval.window_stride_fraction);
    return out;
}

SeedResult train_one_seed(const Pipeline& pipe, const ExperimentConfig& cfg, SamplerMode mode,
                          std::uint64_t seed) {
    SamplerConfig scfg = cfg.sampler;
    scfg.mode = mode;
    scfg.seed = seed;
    const SamplerContext ctx = pipe.sampler_context();
    const Bundle& bundle = *pipe.bundle;

    SeedResult result{ModelState(pipe.model_config, seed)};
    result.seed = seed;
    const std::vector<NeighborSample> eval_samples = sample_all(ctx, scfg, kEvalEpoch);

    const std::vector<SegmentId> train_nodes = observed_segments(bundle, 0, pipe.split.train_end);
    if (train_nodes.empty()) throw ValidationError("no observations in the training split");

    std::vector<double> best_params, best_m, best_v;
    std::int64_t best_step = 0;
    int stale = 0;
    AdamParams adam;
    adam.learning_rate = cfg.train.learning_rate;

    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const std::vector<NeighborSample> samples =
            sample_all(ctx, scfg, std::uint64_t(epoch));

        std::vector<SegmentId> order = train_nodes;
        Rng::stream(seed, kStreamBatchShuffle, std::uint64_t(epoch)).shuffle(order);

        double epoch_sse = 0.0;
        std::int64_t epoch_obs = 0;
        for (const auto& chunk : chunk_targets(order, cfg.train.batch_nodes)) {
            Batch batch =
                build_batch(pipe, samples, chunk, pipe.split.train_end, 0, pipe.split.train_end);
            if (batch.observations.empty()) continue;
            const ForwardResult fr = forward(result.state, batch, true);
            if (!std::isfinite(fr.loss))
                throw TrainDivergence("training diverged at epoch " + std::to_string(epoch),
                                      result.history);
            const std::vector<double> grad = backward(result.state, batch, fr);
            adam_step(result.state, grad, adam);
            epoch_sse += fr.loss * double(batch.observations.size());
            epoch_obs += std::int64_t(batch.observations.size());
        }

        const double train_rmse =
            std::sqrt(epoch_sse / double(epoch_obs)) * pipe.target_stddev;
        const double val_rmse = pooled_rmse(pipe, cfg, result.state, eval_samples,
                                            pipe.split.train_end, pipe.split.val_end);
        result.history.push_back({epoch, train_rmse, val_rmse});

        if (result.best_epoch < 0 || val_rmse < result.best_val_rmse) {
            result.best_epoch = epoch;
            result.best_val_rmse = val_rmse;
            best_params = result.state.params();
            best_m = result.state.adam_m();
            best_v = result.state.adam_v();
            best_step = result.state.step();
            stale = 0;
        } else if (++stale >= cfg.train.patience) {
            break;
        }
    }

    result.state.params() = best_params;
    result.state.adam_m() = best_m;
    result.state.adam_v() = best_v;
    result.state.step_ref() = best_step;
    result.test = evaluate_state(pipe, cfg, mode, seed, result.state);
    return result;
}

MultiSeedResult multi_seed(const Pipeline& pipe, const ExperimentConfig& cfg, SamplerMode mode) {
    const auto& seeds = cfg.train.seeds;
    MultiSeedResult out;
    std::vector<std::optional<SeedResult>> results(seeds.size());
    std::vector<std::string> errors(seeds.size());

    auto worker = [&](size_t k) {
        try {
            results[k] = train_one_seed(pipe, cfg, mode, seeds[k]);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (cfg.train.single_thread || hw == 1 || seeds.size() == 1) {
        for (size_t k = 0; k < seeds.size(); ++k) worker(k);
    } else {
        std::vector<std::thread> pool;
        const size_t lanes = std::min<size_t>(hw, seeds.size());
        for (size_t lane = 0; lane < lanes; ++lane)
            pool.emplace_back([&, lane]() {
                for (size_t k = lane; k < seeds.size(); k += lanes) worker(k);
            });
        for (auto& th : pool) th.join();
    }

    for (size_t k = 0; k < seeds.size(); ++k) {
        if (results[k])
            out.seeds.push_back(std::move(*results[k]));
        else
            out.failures.emplace_back(seeds[k], errors[k]);
    }
    return out;
}

} // namespace fairstream
