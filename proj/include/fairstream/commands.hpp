#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fairstream/config.hpp"
#include "fairstream/io.hpp"

namespace fairstream {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

struct TrainOptions {
    std::optional<std::string> bundle_dir;         // default: <output_dir>/bundle
    std::optional<std::string> out_dir;            // default: <output_dir>
    std::optional<std::vector<std::uint64_t>> seeds;
    bool single_thread = false;
};

struct EvaluateOptions {
    std::string checkpoint;
    std::string bundle_dir;
    std::optional<std::vector<double>> window_sizes;
    std::optional<std::string> out_dir; // default: directory of the checkpoint
};

int cmd_generate(const RunConfig& cfg, std::ostream& log);
int cmd_train(RunConfig cfg, const TrainOptions& opts, std::ostream& log);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);
int cmd_ablate(RunConfig cfg, const TrainOptions& opts, std::ostream& log);

} // namespace fairstream
