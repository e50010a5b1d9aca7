#include "fairstream/commands.hpp"

#include <cmath>
#include <functional>

namespace fairstream {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int guarded(std::ostream& log, const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const ValidationError& e) {
        log << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NotFoundError& e) {
        log << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        log << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

Checkpoint make_checkpoint(const SeedResult& run, const Pipeline& pipe, const RunConfig& cfg,
                           SamplerMode mode, std::uint64_t fingerprint) {
    Checkpoint cp;
    cp.config_echo = cfg.to_json();
    cp.sampler_mode = to_string(mode);
    cp.seed = run.seed;
    cp.bundle_fingerprint = fingerprint;
    cp.model_config = pipe.model_config;
    cp.params = run.state.params();
    cp.adam_m = run.state.adam_m();
    cp.adam_v = run.state.adam_v();
    cp.step = run.state.step();
    cp.best_epoch = run.best_epoch;
    cp.best_val_rmse = run.best_val_rmse;
    cp.feature_mean.assign(pipe.feature_mean.data(),
                           pipe.feature_mean.data() + pipe.feature_mean.size());
    cp.feature_stddev.assign(pipe.feature_stddev.data(),
                             pipe.feature_stddev.data() + pipe.feature_stddev.size());
    cp.target_mean = pipe.target_mean;
    cp.target_stddev = pipe.target_stddev;
    return cp;
}

void write_run_artifacts(const fs::path& out_dir, const std::string& stem,
                         const MultiSeedResult& runs, const Pipeline& pipe,
                         const json& config_echo, const std::string& mode_name,
                         std::ostream& log) {
    const json report = report_json(runs, pipe.groups, mode_name, config_echo);
    write_report(out_dir / (stem + ".json"), report);
    write_per_segment_csv(out_dir / "per_segment_rmse.csv", runs, pipe.groups);
    write_window_curve_csv(out_dir / "window_curve.csv", runs);

    // Figures: windowed RMSE along the sensitive axis, and per-group
    // deviation bars (seed means).
    if (!runs.seeds.empty()) {
        std::vector<std::pair<double, double>> curve;
        const auto& first = runs.seeds.front().test.window_curve;
        for (size_t k = 0; k < first.size(); ++k) {
            double total = 0.0;
            int count = 0;
            for (const auto& run : runs.seeds)
                if (k < run.test.window_curve.size()) {
                    total += run.test.window_curve[k].second;
                    ++count;
                }
            curve.emplace_back(first[k].first, total / double(count));
        }
        write_line_plot_svg(out_dir / "rmse_vs_sensitive.svg",
                            "Windowed test RMSE across the sensitive axis (" + mode_name + ")",
                            "sensitive value (window center)", "RMSE", curve);

        std::vector<double> deviations;
        for (int g = 0; g < pipe.groups.group_count(); ++g) {
            double total = 0.0;
            int count = 0;
            for (const auto& run : runs.seeds) {
                const double d = run.test.fairness.group_deviation[size_t(g)];
                if (std::isfinite(d)) {
                    total += d;
                    ++count;
                }
            }
            deviations.push_back(count > 0 ? total / double(count)
                                           : std::numeric_limits<double>::quiet_NaN());
        }
        write_bar_chart_svg(out_dir / "group_deviation.svg",
                            "Per-group |RMSE - overall| (" + mode_name + ")", pipe.groups.labels,
                            deviations);
    }

    log << "report: " << (out_dir / (stem + ".json")).string() << "\n";
    for (const auto& [seed, what] : runs.failures)
        log << "seed " << seed << " failed: " << what << "\n";
}

MultiSeedResult run_mode(const Pipeline& pipe, const RunConfig& cfg, SamplerMode mode,
                         const fs::path& out_dir, std::uint64_t fingerprint, std::ostream& log) {
    MultiSeedResult runs = multi_seed(pipe, cfg.experiment(), mode);
    for (const auto& run : runs.seeds) {
        const fs::path path =
            out_dir / ("checkpoint_" + to_string(mode) + "_seed" + std::to_string(run.seed) +
                       ".json");
        write_checkpoint(path, make_checkpoint(run, pipe, cfg, mode, fingerprint));
    }
    log << "mode " << to_string(mode) << ": " << runs.seeds.size() << " seed(s) done\n";
    return runs;
}

} // namespace

int cmd_generate(const RunConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        const SyntheticBasin basin = generate_basin(cfg.basin);
        const fs::path dir = fs::path(cfg.output_dir) / "bundle";
        write_bundle(dir, basin, cfg.to_json());

        std::int64_t temp_obs = 0, flow_obs = 0;
        for (const auto& s : basin.series) {
            for (auto f : s.temp_observed) temp_obs += f;
            for (auto f : s.flow_observed) flow_obs += f;
        }
        log << "bundle: " << dir.string() << "\n";
        log << "segments: " << basin.graph.segment_count()
            << ", edges: " << basin.graph.edges().size() << ", days: " << cfg.basin.time_steps
            << "\n";
        log << "observed temperature cells: " << temp_obs << ", observed flow cells: " << flow_obs
            << "\n";
    });
}

int cmd_train(RunConfig cfg, const TrainOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        if (opts.seeds) cfg.train.seeds = *opts.seeds;
        cfg.train.single_thread = opts.single_thread;
        cfg.validate();

        const fs::path bundle_dir =
            opts.bundle_dir ? fs::path(*opts.bundle_dir) : fs::path(cfg.output_dir) / "bundle";
        if (!fs::exists(bundle_dir / "graph.json"))
            throw IoError("bundle not found at " + bundle_dir.string() +
                          " (run the generate command first)");
        const Bundle bundle = read_bundle(bundle_dir);
        const std::uint64_t fingerprint = bundle_hash(bundle_dir);
        const Pipeline pipe = prepare_pipeline(bundle, cfg.experiment());

        const fs::path out_dir = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(cfg.output_dir);
        fs::create_directories(out_dir);

        MultiSeedResult runs = run_mode(pipe, cfg, cfg.sampler.mode, out_dir, fingerprint, log);
        write_run_artifacts(out_dir, "report", runs, pipe, cfg.to_json(),
                            to_string(cfg.sampler.mode), log);
        if (runs.seeds.empty())
            throw NumericError("all seeds failed; see report failures for details");
    });
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Checkpoint cp = read_checkpoint(opts.checkpoint);
        const fs::path bundle_dir(opts.bundle_dir);
        if (!fs::exists(bundle_dir / "graph.json"))
            throw IoError("bundle not found at " + bundle_dir.string());
        if (bundle_hash(bundle_dir) != cp.bundle_fingerprint)
            throw ValidationError(
                "bundle fingerprint mismatch: this checkpoint was trained on different data");

        RunConfig cfg = RunConfig::from_json(cp.config_echo);
        if (opts.window_sizes) cfg.eval.window_sizes = *opts.window_sizes;

        const Bundle bundle = read_bundle(bundle_dir);
        const Pipeline pipe = prepare_pipeline(bundle, cfg.experiment());
        const SamplerMode mode = sampler_mode_from_string(cp.sampler_mode);

        SeedResult run{state_from_checkpoint(cp)};
        run.seed = cp.seed;
        run.best_epoch = cp.best_epoch;
        run.best_val_rmse = cp.best_val_rmse;
        run.test = evaluate_state(pipe, cfg.experiment(), mode, cp.seed, run.state);

        MultiSeedResult runs;
        runs.seeds.push_back(std::move(run));

        const fs::path out_dir = opts.out_dir
                                     ? fs::path(*opts.out_dir)
                                     : fs::path(opts.checkpoint).parent_path() / "evaluation";
        fs::create_directories(out_dir);
        write_run_artifacts(out_dir, "report", runs, pipe, cfg.to_json(), cp.sampler_mode, log);
        log << "test rmse: " << format_double(runs.seeds.front().test.rmse) << ", m_fair: "
            << format_double(runs.seeds.front().test.fairness.m_fair) << "\n";
    });
}

int cmd_ablate(RunConfig cfg, const TrainOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        if (opts.seeds) cfg.train.seeds = *opts.seeds;
        cfg.train.single_thread = opts.single_thread;
        cfg.validate();

        const fs::path bundle_dir =
            opts.bundle_dir ? fs::path(*opts.bundle_dir) : fs::path(cfg.output_dir) / "bundle";
        if (!fs::exists(bundle_dir / "graph.json"))
            throw IoError("bundle not found at " + bundle_dir.string() +
                          " (run the generate command first)");
        const Bundle bundle = read_bundle(bundle_dir);
        const std::uint64_t fingerprint = bundle_hash(bundle_dir);
        const Pipeline pipe = prepare_pipeline(bundle, cfg.experiment());

        const fs::path out_dir = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(cfg.output_dir);
        fs::create_directories(out_dir);

        std::vector<AblationRow> rows;
        for (SamplerMode mode : cfg.ablation_modes) {
            const fs::path mode_dir = out_dir / ("ablation_" + to_string(mode));
            fs::create_directories(mode_dir);
            MultiSeedResult runs = run_mode(pipe, cfg, mode, mode_dir, fingerprint, log);
            write_run_artifacts(mode_dir, "report", runs, pipe, cfg.to_json(), to_string(mode),
                                log);

            double rmse_sum = 0.0, fair_sum = 0.0;
            std::vector<double> window_sums(cfg.eval.window_sizes.size(), 0.0);
            for (const auto& run : runs.seeds) {
                AblationRow row;
                row.mode = to_string(mode);
                row.seed = std::to_string(run.seed);
                row.rmse = run.test.rmse;
                row.m_fair = run.test.fairness.m_fair;
                for (const auto& w : run.test.worst_windows)
                    row.worst_windows.push_back(w.worst_rmse);
                rows.push_back(row);
                rmse_sum += row.rmse;
                fair_sum += row.m_fair;
                for (size_t k = 0; k < row.worst_windows.size(); ++k)
                    window_sums[k] += row.worst_windows[k];
            }
            if (!runs.seeds.empty()) {
                AblationRow mean_row;
                mean_row.mode = to_string(mode);
                mean_row.seed = "mean";
                mean_row.rmse = rmse_sum / double(runs.seeds.size());
                mean_row.m_fair = fair_sum / double(runs.seeds.size());
                for (double s : window_sums)
                    mean_row.worst_windows.push_back(s / double(runs.seeds.size()));
                rows.push_back(std::move(mean_row));
            }
        }
        write_ablation_csv(out_dir / "ablation.csv", cfg.eval.window_sizes, rows);
        log << "ablation table: " << (out_dir / "ablation.csv").string() << "\n";
    });
}

} // namespace fairstream
