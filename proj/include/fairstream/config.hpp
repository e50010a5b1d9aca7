#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "fairstream/train.hpp"

namespace fairstream {

// One configuration document drives every command; unknown keys anywhere in
// the tree are rejected up front.
struct RunConfig {
    std::string output_dir = "out";
    BasinSpec basin;
    GraphConfig graph;
    InfluenceMode influence_mode = InfluenceMode::Averaged;
    SamplerConfig sampler;
    ModelConfig model; // feature_dim comes from the bundle, not the config
    TrainConfig train;
    EvalConfig eval;
    std::vector<SamplerMode> ablation_modes = {
        SamplerMode::Random,
        SamplerMode::FairEdgeAblation,
        SamplerMode::FairAdjAblation,
        SamplerMode::FairDiscrete,
    };

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    ExperimentConfig experiment() const;
    void validate() const;
};

InfluenceMode influence_mode_from_string(const std::string& name);
std::string to_string(InfluenceMode mode);
GroupRmseMode group_rmse_mode_from_string(const std::string& name);
std::string to_string(GroupRmseMode mode);

} // namespace fairstream
