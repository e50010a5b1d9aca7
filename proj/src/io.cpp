#include "fairstream/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fairstream {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

json load_json(const fs::path& path) {
    std::ifstream in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("bad numeric field '" + s + "' in " + context);
    }
}

double median_of(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (double v : values) total += v;
    return total / double(values.size());
}

} // namespace

void write_bundle(const fs::path& dir, const SyntheticBasin& basin, const json& config_echo) {
    ensure_dir(dir);
    const BasinGraph& graph = basin.graph;

    json g;
    g["schema_version"] = kSchemaVersion;
    g["config"] = config_echo;
    g["segment_count"] = graph.segment_count();
    g["outlets"] = graph.outlets();
    json edges = json::array();
    for (const auto& e : graph.edges())
        edges.push_back(
            {{"upstream", e.upstream}, {"downstream", e.downstream}, {"distance", e.distance}});
    g["edges"] = std::move(edges);
    open_out(dir / "graph.json") << g.dump(2) << "\n";

    const int T = int(basin.ground_truth_temperature.cols());
    const int F = basin.series.empty() ? 0 : int(basin.series.front().features.cols());
    std::ofstream series = open_out(dir / "series.csv");
    series << "segment_id,day";
    for (int f = 1; f <= F; ++f) series << ",feature_" << f;
    series << ",flow,flow_observed_flag,temp,temp_observed_flag\n";
    for (SegmentId i = 0; i < graph.segment_count(); ++i) {
        const SegmentSeries& s = basin.series[size_t(i)];
        for (int t = 0; t < T; ++t) {
            series << i << ',' << t;
            for (int f = 0; f < F; ++f) series << ',' << format_double(s.features(t, f));
            series << ',' << format_double(s.flow(t)) << ',' << int(s.flow_observed[size_t(t)])
                   << ',' << format_double(s.temp(t)) << ',' << int(s.temp_observed[size_t(t)])
                   << '\n';
        }
    }

    std::ofstream sensitive = open_out(dir / "sensitive.csv");
    sensitive << "segment_id,s_value\n";
    for (SegmentId i = 0; i < graph.segment_count(); ++i)
        sensitive << i << ',' << format_double(basin.sensitive[size_t(i)]) << '\n';
}

Bundle read_bundle(const fs::path& dir) {
    const json g = load_json(dir / "graph.json");
    if (!g.contains("segment_count") || !g.contains("edges"))
        throw IoError("graph.json misses segment_count or edges");
    const int n = g.at("segment_count").get<int>();
    std::vector<DirectEdge> edges;
    for (const auto& e : g.at("edges"))
        edges.push_back({e.at("upstream").get<int>(), e.at("downstream").get<int>(),
                         e.at("distance").get<double>()});

    Bundle bundle;
    bundle.graph = BasinGraph(n, std::move(edges));

    // series.csv: infer T and F from the header and row count.
    std::ifstream in = open_in(dir / "series.csv");
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty series.csv");
    const auto header = split_csv_line(line);
    if (header.size() < 7) throw IoError("series.csv header too short");
    const int F = int(header.size()) - 6;
    bundle.feature_dim = F;

    struct Row {
        int seg, day;
        std::vector<double> feat;
        double flow, temp;
        int flow_obs, temp_obs;
    };
    std::vector<Row> rows;
    int max_day = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (int(fields.size()) != int(header.size()))
            throw IoError("series.csv row has " + std::to_string(fields.size()) + " fields");
        Row r;
        r.seg = int(parse_double(fields[0], "series.csv"));
        r.day = int(parse_double(fields[1], "series.csv"));
        for (int f = 0; f < F; ++f)
            r.feat.push_back(parse_double(fields[size_t(2 + f)], "series.csv"));
        r.flow = parse_double(fields[size_t(2 + F)], "series.csv");
        r.flow_obs = int(parse_double(fields[size_t(3 + F)], "series.csv"));
        r.temp = parse_double(fields[size_t(4 + F)], "series.csv");
        r.temp_obs = int(parse_double(fields[size_t(5 + F)], "series.csv"));
        if (r.seg < 0 || r.seg >= n) throw IoError("series.csv references unknown segment");
        max_day = std::max(max_day, r.day);
        rows.push_back(std::move(r));
    }
    const int T = max_day + 1;
    if (T < 1) throw IoError("series.csv contains no data rows");
    bundle.time_steps = T;

    bundle.series.resize(size_t(n));
    for (auto& s : bundle.series) {
        s.features.setZero(T, F);
        s.flow.setZero(T);
        s.temp.setZero(T);
        s.flow_observed.assign(size_t(T), 0);
        s.temp_observed.assign(size_t(T), 0);
    }
    for (const auto& r : rows) {
        SegmentSeries& s = bundle.series[size_t(r.seg)];
        for (int f = 0; f < F; ++f) s.features(r.day, f) = r.feat[size_t(f)];
        s.flow(r.day) = r.flow;
        s.temp(r.day) = r.temp;
        s.flow_observed[size_t(r.day)] = std::uint8_t(r.flow_obs != 0);
        s.temp_observed[size_t(r.day)] = std::uint8_t(r.temp_obs != 0);
    }

    std::ifstream sens = open_in(dir / "sensitive.csv");
    if (!std::getline(sens, line)) throw IoError("empty sensitive.csv");
    bundle.sensitive.assign(size_t(n), 0.0);
    std::vector<char> seen(size_t(n), 0);
    while (std::getline(sens, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) throw IoError("sensitive.csv row needs 2 fields");
        const int seg = int(parse_double(fields[0], "sensitive.csv"));
        if (seg < 0 || seg >= n) throw IoError("sensitive.csv references unknown segment");
        bundle.sensitive[size_t(seg)] = parse_double(fields[1], "sensitive.csv");
        seen[size_t(seg)] = 1;
    }
    for (char c : seen)
        if (!c) throw IoError("sensitive.csv misses a segment");
    return bundle;
}

std::uint64_t bundle_hash(const fs::path& dir) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char* name : {"graph.json", "series.csv", "sensitive.csv"}) {
        std::ifstream in = open_in(dir / name);
        char buf[4096];
        while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
            for (std::streamsize k = 0; k < in.gcount(); ++k) {
                h ^= std::uint64_t(std::uint8_t(buf[k]));
                h *= 1099511628211ULL;
            }
            if (!in) break;
        }
    }
    return h;
}

void write_checkpoint(const fs::path& path, const Checkpoint& cp) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = cp.config_echo;
    j["sampler_mode"] = cp.sampler_mode;
    j["seed"] = cp.seed;
    j["bundle_fingerprint"] = cp.bundle_fingerprint;
    j["model"] = {{"hidden_dim", cp.model_config.hidden_dim},
                  {"gnn_layers", cp.model_config.gnn_layers},
                  {"output_hidden_dims", cp.model_config.output_hidden_dims},
                  {"activation", to_string(cp.model_config.activation)},
                  {"feature_dim", cp.model_config.feature_dim}};
    j["params"] = cp.params;
    j["adam_m"] = cp.adam_m;
    j["adam_v"] = cp.adam_v;
    j["step"] = cp.step;
    j["best_epoch"] = cp.best_epoch;
    j["best_val_rmse"] = cp.best_val_rmse;
    j["feature_mean"] = cp.feature_mean;
    j["feature_stddev"] = cp.feature_stddev;
    j["target_mean"] = cp.target_mean;
    j["target_stddev"] = cp.target_stddev;
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    open_out(path) << j.dump(2) << "\n";
}

Checkpoint read_checkpoint(const fs::path& path) {
    const json j = load_json(path);
    Checkpoint cp;
    try {
        cp.config_echo = j.at("config");
        cp.sampler_mode = j.at("sampler_mode").get<std::string>();
        cp.seed = j.at("seed").get<std::uint64_t>();
        cp.bundle_fingerprint = j.at("bundle_fingerprint").get<std::uint64_t>();
        const json& m = j.at("model");
        cp.model_config.hidden_dim = m.at("hidden_dim").get<int>();
        cp.model_config.gnn_layers = m.at("gnn_layers").get<int>();
        cp.model_config.output_hidden_dims = m.at("output_hidden_dims").get<std::vector<int>>();
        cp.model_config.activation = activation_from_string(m.at("activation").get<std::string>());
        cp.model_config.feature_dim = m.at("feature_dim").get<int>();
        cp.params = j.at("params").get<std::vector<double>>();
        cp.adam_m = j.at("adam_m").get<std::vector<double>>();
        cp.adam_v = j.at("adam_v").get<std::vector<double>>();
        cp.step = j.at("step").get<std::int64_t>();
        cp.best_epoch = j.at("best_epoch").get<int>();
        cp.best_val_rmse = j.at("best_val_rmse").get<double>();
        cp.feature_mean = j.at("feature_mean").get<std::vector<double>>();
        cp.feature_stddev = j.at("feature_stddev").get<std::vector<double>>();
        cp.target_mean = j.at("target_mean").get<double>();
        cp.target_stddev = j.at("target_stddev").get<double>();
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    return cp;
}

ModelState state_from_checkpoint(const Checkpoint& cp) {
    ModelState state(cp.model_config, cp.seed);
    if (cp.params.size() != state.param_count() || cp.adam_m.size() != state.param_count() ||
        cp.adam_v.size() != state.param_count())
        throw IoError("checkpoint parameter count does not match its model config");
    state.params() = cp.params;
    state.adam_m() = cp.adam_m;
    state.adam_v() = cp.adam_v;
    state.step_ref() = cp.step;
    return state;
}

namespace {

json window_entries_json(const std::vector<WindowEntry>& windows) {
    json arr = json::array();
    for (const auto& w : windows)
        arr.push_back({{"size", w.size}, {"rmse", w.worst_rmse}, {"window_lo", w.window_lo}});
    return arr;
}

json group_map_json(const GroupPartition& groups, const std::vector<double>& values) {
    json obj = json::object();
    for (int g = 0; g < groups.group_count(); ++g)
        obj[groups.labels[size_t(g)]] = values[size_t(g)]; // NaN serializes as null
    return obj;
}

} // namespace

json report_json(const MultiSeedResult& runs, const GroupPartition& groups,
                 const std::string& sampler_mode, const json& config_echo) {
    json report;
    report["schema_version"] = kSchemaVersion;
    report["config"] = config_echo;
    report["sampler_mode"] = sampler_mode;
    report["group_labels"] = groups.labels;

    json seeds = json::array();
    json per_seed = json::array();
    for (const auto& run : runs.seeds) {
        seeds.push_back(run.seed);
        json entry;
        entry["seed"] = run.seed;
        entry["rmse"] = run.test.rmse;
        entry["m_fair"] = run.test.fairness.m_fair;
        entry["group_rmse"] = group_map_json(groups, run.test.fairness.group_rmse);
        entry["group_deviation"] = group_map_json(groups, run.test.fairness.group_deviation);
        entry["worst_windows"] = window_entries_json(run.test.worst_windows);
        entry["best_epoch"] = run.best_epoch;
        entry["best_val_rmse"] = run.best_val_rmse;
        json history = json::array();
        for (const auto& rec : run.history)
            history.push_back({{"epoch", rec.epoch},
                               {"train_rmse", rec.train_rmse},
                               {"val_rmse", rec.val_rmse}});
        entry["history"] = std::move(history);
        per_seed.push_back(std::move(entry));
    }
    report["seeds"] = std::move(seeds);
    report["per_seed"] = std::move(per_seed);

    json failures = json::array();
    for (const auto& [seed, what] : runs.failures)
        failures.push_back({{"seed", seed}, {"error", what}});
    report["failures"] = std::move(failures);

    auto aggregate = [&](auto&& reducer) {
        json agg;
        std::vector<double> rmses, fairs;
        for (const auto& run : runs.seeds) {
            rmses.push_back(run.test.rmse);
            fairs.push_back(run.test.fairness.m_fair);
        }
        agg["rmse"] = reducer(rmses);
        agg["m_fair"] = reducer(fairs);
        json windows = json::array();
        if (!runs.seeds.empty()) {
            const size_t n_windows = runs.seeds.front().test.worst_windows.size();
            for (size_t w = 0; w < n_windows; ++w) {
                std::vector<double> values;
                for (const auto& run : runs.seeds)
                    values.push_back(run.test.worst_windows[w].worst_rmse);
                windows.push_back({{"size", runs.seeds.front().test.worst_windows[w].size},
                                   {"rmse", reducer(values)}});
            }
        }
        agg["worst_windows"] = std::move(windows);
        return agg;
    };
    report["mean"] = aggregate(mean_of);
    report["median"] = aggregate(median_of);
    return report;
}

void write_report(const fs::path& path, const json& report) {
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    open_out(path) << report.dump(2) << "\n";
}

void write_per_segment_csv(const fs::path& path, const MultiSeedResult& runs,
                           const GroupPartition& groups) {
    // Mean per-seed RMSE per segment over the seeds that have data for it.
    std::map<int, std::pair<double, std::pair<double, int>>> table; // seg -> (s, (sum, n))
    for (const auto& run : runs.seeds)
        for (const auto& seg : run.test.per_segment) {
            auto& cell = table[seg.segment];
            cell.first = seg.s_value;
            cell.second.first += seg.pool.rmse();
            cell.second.second += 1;
        }
    std::ofstream out = open_out(path);
    out << "segment_id,s_value,group,rmse\n";
    for (const auto& [seg, cell] : table)
        out << seg << ',' << format_double(cell.first) << ','
            << groups.labels[size_t(groups.membership[size_t(seg)])] << ','
            << format_double(cell.second.first / double(cell.second.second)) << '\n';
}

void write_window_curve_csv(const fs::path& path, const MultiSeedResult& runs) {
    std::ofstream out = open_out(path);
    out << "window_center,rmse\n";
    if (runs.seeds.empty()) return;
    const size_t n_points = runs.seeds.front().test.window_curve.size();
    for (size_t k = 0; k < n_points; ++k) {
        double total = 0.0;
        int count = 0;
        for (const auto& run : runs.seeds) {
            if (k >= run.test.window_curve.size()) continue;
            total += run.test.window_curve[k].second;
            ++count;
        }
        out << format_double(runs.seeds.front().test.window_curve[k].first) << ','
            << format_double(total / double(count)) << '\n';
    }
}

void write_ablation_csv(const fs::path& path, const std::vector<double>& window_sizes,
                        const std::vector<AblationRow>& rows) {
    std::ofstream out = open_out(path);
    out << "mode,seed,rmse,m_fair";
    for (double w : window_sizes) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", w);
        out << ",worst_rmse_" << buf;
    }
    out << "\n";
    for (const auto& row : rows) {
        out << row.mode << ',' << row.seed << ',' << format_double(row.rmse) << ','
            << format_double(row.m_fair);
        for (double v : row.worst_windows) out << ',' << format_double(v);
        out << '\n';
    }
}

namespace {

struct PlotFrame {
    double x0, x1, y0, y1;       // data range
    double px0, px1, py0, py1;   // pixel box
    double x(double v) const { return px0 + (v - x0) / (x1 - x0) * (px1 - px0); }
    double y(double v) const { return py1 - (v - y0) / (y1 - y0) * (py1 - py0); }
};

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

} // namespace

void write_line_plot_svg(const fs::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<std::pair<double, double>>& points) {
    std::ofstream out = open_out(path);
    const int W = 640, H = 400;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << svg_escape(title) << "</text>\n";
    if (!points.empty()) {
        PlotFrame f{};
        f.x0 = f.x1 = points.front().first;
        f.y0 = f.y1 = points.front().second;
        for (const auto& [x, y] : points) {
            f.x0 = std::min(f.x0, x);
            f.x1 = std::max(f.x1, x);
            f.y0 = std::min(f.y0, y);
            f.y1 = std::max(f.y1, y);
        }
        if (f.x1 == f.x0) f.x1 = f.x0 + 1.0;
        if (f.y1 == f.y0) f.y1 = f.y0 + 1.0;
        f.px0 = 70;
        f.px1 = W - 30;
        f.py0 = 50;
        f.py1 = H - 60;
        out << "<line x1=\"" << f.px0 << "\" y1=\"" << f.py1 << "\" x2=\"" << f.px1 << "\" y2=\""
            << f.py1 << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << f.px0 << "\" y1=\"" << f.py0 << "\" x2=\"" << f.px0 << "\" y2=\""
            << f.py1 << "\" stroke=\"black\"/>\n";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4g", f.x0);
        out << "<text x=\"" << f.px0 << "\" y=\"" << H - 38 << "\" font-size=\"11\">" << buf
            << "</text>\n";
        std::snprintf(buf, sizeof(buf), "%.4g", f.x1);
        out << "<text x=\"" << f.px1 << "\" y=\"" << H - 38
            << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof(buf), "%.4g", f.y0);
        out << "<text x=\"" << f.px0 - 6 << "\" y=\"" << f.py1
            << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof(buf), "%.4g", f.y1);
        out << "<text x=\"" << f.px0 - 6 << "\" y=\"" << f.py0 + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
        out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : points) out << f.x(x) << ',' << f.y(y) << ' ';
        out << "\"/>\n";
    }
    out << "<text x=\"320\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
        << svg_escape(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"200\" text-anchor=\"middle\" font-size=\"13\" "
           "transform=\"rotate(-90 18 200)\">"
        << svg_escape(y_label) << "</text>\n";
    out << "</svg>\n";
}

void write_bar_chart_svg(const fs::path& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<double>& values) {
    std::ofstream out = open_out(path);
    const int W = 640, H = 400;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << svg_escape(title) << "</text>\n";
    double vmax = 0.0;
    for (double v : values)
        if (std::isfinite(v)) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;
    const double px0 = 70, px1 = W - 30, py0 = 50, py1 = H - 60;
    out << "<line x1=\"" << px0 << "\" y1=\"" << py1 << "\" x2=\"" << px1 << "\" y2=\"" << py1
        << "\" stroke=\"black\"/>\n";
    const size_t n = values.size();
    for (size_t k = 0; k < n; ++k) {
        if (!std::isfinite(values[k])) continue;
        const double slot = (px1 - px0) / double(n);
        const double bw = slot * 0.6;
        const double x = px0 + slot * double(k) + slot * 0.2;
        const double h = (values[k] / vmax) * (py1 - py0);
        out << "<rect x=\"" << x << "\" y=\"" << py1 - h << "\" width=\"" << bw << "\" height=\""
            << h << "\" fill=\"#1f77b4\"/>\n";
        out << "<text x=\"" << x + bw / 2 << "\" y=\"" << H - 38
            << "\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(labels[k])
            << "</text>\n";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", values[k]);
        out << "<text x=\"" << x + bw / 2 << "\" y=\"" << py1 - h - 4
            << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
    }
    out << "</svg>\n";
}

void write_pgraph_json(const fs::path& path, const PredictionGraph& pgraph) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["segment_count"] = pgraph.segment_count();
    json edges = json::array();
    for (const auto& e : pgraph.edges())
        edges.push_back({{"upstream", e.upstream},
                         {"downstream", e.downstream},
                         {"distance", e.distance},
                         {"hops", e.hops},
                         {"weight", e.weight},
                         {"path", e.path}});
    j["edges"] = std::move(edges);
    open_out(path) << j.dump(2) << "\n";
}

void write_influence_csv(const fs::path& path, const PredictionGraph& pgraph,
                         const InfluenceTable& table) {
    std::ofstream out = open_out(path);
    out << "upstream_id,downstream_id,day_or_AVG,value\n";
    for (int e = 0; e < table.edge_count(); ++e) {
        const auto& edge = pgraph.edges()[size_t(e)];
        if (table.mode() == InfluenceMode::PerStep) {
            for (int t = 0; t < table.day_count(); ++t)
                out << edge.upstream << ',' << edge.downstream << ',' << t << ','
                    << format_double(table.at(e, t)) << '\n';
        }
        out << edge.upstream << ',' << edge.downstream << ",AVG,"
            << format_double(table.averaged(e)) << '\n';
    }
}

void write_neighborhoods_json(const fs::path& path, const std::vector<NeighborSample>& samples,
                              const GroupPartition& groups, std::uint64_t epoch) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["epoch"] = epoch;
    json nodes = json::array();
    for (const auto& sample : samples) {
        json entry;
        entry["target"] = sample.target;
        entry["headwater"] = sample.headwater;
        json nbrs = json::array();
        for (const auto& nb : sample.neighbors)
            nbrs.push_back({{"id", nb.id}, {"weight", nb.weight}, {"influence", nb.influence}});
        entry["neighbors"] = std::move(nbrs);
        json gi = json::object();
        for (const auto& [g, v] : sample.group_influence)
            gi[g >= 0 && g < groups.group_count() ? groups.labels[size_t(g)]
                                                  : std::to_string(g)] = v;
        entry["group_influence"] = std::move(gi);
        nodes.push_back(std::move(entry));
    }
    j["nodes"] = std::move(nodes);
    open_out(path) << j.dump(2) << "\n";
}

} // namespace fairstream
