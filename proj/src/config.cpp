#include "fairstream/config.hpp"

#include <fstream>
#include <set>

namespace fairstream {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    if (!obj.is_object()) throw ValidationError(context + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ValidationError("unknown key '" + key + "' in " + context);
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(std::string("bad value for '") + key + "'");
        }
    }
}

} // namespace

InfluenceMode influence_mode_from_string(const std::string& name) {
    if (name == "averaged") return InfluenceMode::Averaged;
    if (name == "per-step") return InfluenceMode::PerStep;
    throw ValidationError("unknown influence mode: " + name);
}

std::string to_string(InfluenceMode mode) {
    return mode == InfluenceMode::Averaged ? "averaged" : "per-step";
}

GroupRmseMode group_rmse_mode_from_string(const std::string& name) {
    if (name == "pooled") return GroupRmseMode::Pooled;
    if (name == "segment-averaged") return GroupRmseMode::SegmentAveraged;
    throw ValidationError("unknown group RMSE mode: " + name);
}

std::string to_string(GroupRmseMode mode) {
    return mode == GroupRmseMode::Pooled ? "pooled" : "segment-averaged";
}

RunConfig RunConfig::from_json(const json& j) {
    check_keys(j, {"schema_version", "output_dir", "basin", "graph", "influence", "sampler",
                   "model", "train", "evaluation", "ablation"},
               "config");
    RunConfig cfg;
    get_if(j, "output_dir", cfg.output_dir);

    if (j.contains("basin")) {
        const json& b = j.at("basin");
        check_keys(b,
                   {"segment_count", "tree_branching", "time_steps", "observation_density",
                    "streamflow_observation_density", "sensitive_clustering", "noise_scale",
                    "seed", "observation_bias", "air_relaxation"},
                   "basin");
        get_if(b, "segment_count", cfg.basin.segment_count);
        get_if(b, "tree_branching", cfg.basin.tree_branching);
        get_if(b, "time_steps", cfg.basin.time_steps);
        get_if(b, "observation_density", cfg.basin.observation_density);
        get_if(b, "streamflow_observation_density", cfg.basin.streamflow_observation_density);
        get_if(b, "sensitive_clustering", cfg.basin.sensitive_clustering);
        get_if(b, "noise_scale", cfg.basin.noise_scale);
        get_if(b, "seed", cfg.basin.seed);
        get_if(b, "observation_bias", cfg.basin.observation_bias);
        get_if(b, "air_relaxation", cfg.basin.air_relaxation);
    }

    if (j.contains("graph")) {
        const json& g = j.at("graph");
        check_keys(g, {"hop_limit", "group_thresholds", "group_labels"}, "graph");
        get_if(g, "hop_limit", cfg.graph.hop_limit);
        get_if(g, "group_thresholds", cfg.graph.group_thresholds);
        get_if(g, "group_labels", cfg.graph.group_labels);
    }

    if (j.contains("influence")) {
        const json& inf = j.at("influence");
        check_keys(inf, {"mode"}, "influence");
        std::string mode = to_string(cfg.influence_mode);
        get_if(inf, "mode", mode);
        cfg.influence_mode = influence_mode_from_string(mode);
    }

    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        check_keys(s,
                   {"mode", "neighbor_budget", "balance_tolerance", "feature_similarity_weight",
                    "seed"},
                   "sampler");
        std::string mode = to_string(cfg.sampler.mode);
        get_if(s, "mode", mode);
        cfg.sampler.mode = sampler_mode_from_string(mode);
        get_if(s, "neighbor_budget", cfg.sampler.neighbor_budget);
        get_if(s, "balance_tolerance", cfg.sampler.balance_tolerance);
        get_if(s, "feature_similarity_weight", cfg.sampler.feature_similarity_weight);
        get_if(s, "seed", cfg.sampler.seed);
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, {"hidden_dim", "gnn_layers", "output_hidden_dims", "activation"}, "model");
        get_if(m, "hidden_dim", cfg.model.hidden_dim);
        get_if(m, "gnn_layers", cfg.model.gnn_layers);
        get_if(m, "output_hidden_dims", cfg.model.output_hidden_dims);
        std::string act = to_string(cfg.model.activation);
        get_if(m, "activation", act);
        cfg.model.activation = activation_from_string(act);
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t,
                   {"epochs", "batch_nodes", "train_fraction", "seeds", "learning_rate",
                    "patience"},
                   "train");
        get_if(t, "epochs", cfg.train.epochs);
        get_if(t, "batch_nodes", cfg.train.batch_nodes);
        get_if(t, "train_fraction", cfg.train.train_fraction);
        get_if(t, "seeds", cfg.train.seeds);
        get_if(t, "learning_rate", cfg.train.learning_rate);
        get_if(t, "patience", cfg.train.patience);
    }

    if (j.contains("evaluation")) {
        const json& e = j.at("evaluation");
        check_keys(e, {"window_sizes", "window_stride_fraction", "group_rmse"}, "evaluation");
        get_if(e, "window_sizes", cfg.eval.window_sizes);
        get_if(e, "window_stride_fraction", cfg.eval.window_stride_fraction);
        std::string mode = to_string(cfg.eval.group_rmse_mode);
        get_if(e, "group_rmse", mode);
        cfg.eval.group_rmse_mode = group_rmse_mode_from_string(mode);
    }

    if (j.contains("ablation")) {
        const json& a = j.at("ablation");
        check_keys(a, {"modes"}, "ablation");
        if (a.contains("modes")) {
            cfg.ablation_modes.clear();
            for (const auto& m : a.at("modes"))
                cfg.ablation_modes.push_back(sampler_mode_from_string(m.get<std::string>()));
        }
    }

    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("malformed config JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

json RunConfig::to_json() const {
    json j;
    j["schema_version"] = 1;
    j["output_dir"] = output_dir;
    j["basin"] = {{"segment_count", basin.segment_count},
                  {"tree_branching", basin.tree_branching},
                  {"time_steps", basin.time_steps},
                  {"observation_density", basin.observation_density},
                  {"streamflow_observation_density", basin.streamflow_observation_density},
                  {"sensitive_clustering", basin.sensitive_clustering},
                  {"noise_scale", basin.noise_scale},
                  {"seed", basin.seed},
                  {"observation_bias", basin.observation_bias},
                  {"air_relaxation", basin.air_relaxation}};
    j["graph"] = {{"hop_limit", graph.hop_limit},
                  {"group_thresholds", graph.group_thresholds},
                  {"group_labels", graph.group_labels}};
    j["influence"] = {{"mode", to_string(influence_mode)}};
    j["sampler"] = {{"mode", to_string(sampler.mode)},
                    {"neighbor_budget", sampler.neighbor_budget},
                    {"balance_tolerance", sampler.balance_tolerance},
                    {"feature_similarity_weight", sampler.feature_similarity_weight},
                    {"seed", sampler.seed}};
    j["model"] = {{"hidden_dim", model.hidden_dim},
                  {"gnn_layers", model.gnn_layers},
                  {"output_hidden_dims", model.output_hidden_dims},
                  {"activation", to_string(model.activation)}};
    j["train"] = {{"epochs", train.epochs},
                  {"batch_nodes", train.batch_nodes},
                  {"train_fraction", train.train_fraction},
                  {"seeds", train.seeds},
                  {"learning_rate", train.learning_rate},
                  {"patience", train.patience}};
    j["evaluation"] = {{"window_sizes", eval.window_sizes},
                       {"window_stride_fraction", eval.window_stride_fraction},
                       {"group_rmse", to_string(eval.group_rmse_mode)}};
    json modes = json::array();
    for (SamplerMode m : ablation_modes) modes.push_back(to_string(m));
    j["ablation"] = {{"modes", std::move(modes)}};
    return j;
}

ExperimentConfig RunConfig::experiment() const {
    ExperimentConfig e;
    e.graph = graph;
    e.influence_mode = influence_mode;
    e.model = model;
    e.sampler = sampler;
    e.train = train;
    e.eval = eval;
    return e;
}

void RunConfig::validate() const {
    basin.validate();
    sampler.validate();
    train.validate();
    eval.validate();
    if (graph.hop_limit < 0) throw ValidationError("hop_limit must be >= 0");
    for (size_t k = 1; k < graph.group_thresholds.size(); ++k)
        if (!(graph.group_thresholds[k - 1] < graph.group_thresholds[k]))
            throw ValidationError("group_thresholds must be strictly increasing");
    if (!graph.group_labels.empty() &&
        graph.group_labels.size() != graph.group_thresholds.size() + 1)
        throw ValidationError("group_labels must have thresholds + 1 entries");
    if (ablation_modes.empty()) throw ValidationError("ablation needs at least one mode");
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
    // ModelConfig::validate needs feature_dim, which comes from data; check
    // the configurable parts here.
    if (model.hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
    if (model.gnn_layers < 1) throw ValidationError("gnn_layers must be >= 1");
    for (int d : model.output_hidden_dims)
        if (d < 1) throw ValidationError("output head dims must be >= 1");
}

} // namespace fairstream
