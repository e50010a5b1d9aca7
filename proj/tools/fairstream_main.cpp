#include <CLI11.hpp>
#include <iostream>

#include "fairstream/commands.hpp"

using namespace fairstream;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw ValidationError("empty seed list");
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-guided fair graph learning on synthetic river basins"};
    app.require_subcommand(1);

    std::string config_path;
    std::string bundle_dir, out_dir, seeds_csv, checkpoint_path, windows_csv;
    bool single_thread = false;

    auto* generate = app.add_subcommand("generate", "Write a synthetic basin bundle");
    generate->add_option("--config", config_path, "Run configuration (JSON)")->required();

    auto* train = app.add_subcommand("train", "Train and evaluate with the configured sampler");
    train->add_option("--config", config_path, "Run configuration (JSON)")->required();
    train->add_option("--bundle", bundle_dir, "Bundle directory (default <output_dir>/bundle)");
    train->add_option("--out", out_dir, "Output directory (default <output_dir>)");
    train->add_option("--seeds", seeds_csv, "Comma-separated seed override");
    train->add_flag("--single-thread", single_thread, "Bit-reproducible serial mode");

    auto* evaluate = app.add_subcommand("evaluate", "Recompute test metrics from a checkpoint");
    evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    evaluate->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    evaluate->add_option("--windows", windows_csv, "Comma-separated window sizes override");
    evaluate->add_option("--out", out_dir, "Output directory");

    auto* ablate = app.add_subcommand("ablate", "Run all configured sampler modes side by side");
    ablate->add_option("--config", config_path, "Run configuration (JSON)")->required();
    ablate->add_option("--bundle", bundle_dir, "Bundle directory (default <output_dir>/bundle)");
    ablate->add_option("--out", out_dir, "Output directory (default <output_dir>)");
    ablate->add_option("--seeds", seeds_csv, "Comma-separated seed override");
    ablate->add_flag("--single-thread", single_thread, "Bit-reproducible serial mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitValidation;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(RunConfig::load(config_path), std::cout);
        }
        TrainOptions topts;
        if (!bundle_dir.empty()) topts.bundle_dir = bundle_dir;
        if (!out_dir.empty()) topts.out_dir = out_dir;
        if (!seeds_csv.empty()) topts.seeds = parse_seed_list(seeds_csv);
        topts.single_thread = single_thread;

        if (train->parsed()) return cmd_train(RunConfig::load(config_path), topts, std::cout);
        if (ablate->parsed()) return cmd_ablate(RunConfig::load(config_path), topts, std::cout);
        if (evaluate->parsed()) {
            EvaluateOptions eopts;
            eopts.checkpoint = checkpoint_path;
            eopts.bundle_dir = bundle_dir;
            if (!out_dir.empty()) eopts.out_dir = out_dir;
            if (!windows_csv.empty()) {
                std::vector<double> sizes;
                std::stringstream ss(windows_csv);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) sizes.push_back(std::stod(item));
                eopts.window_sizes = sizes;
            }
            return cmd_evaluate(eopts, std::cout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
