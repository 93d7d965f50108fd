#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "propssl/ltdata.hpp"
#include "propssl/trainer.hpp"

namespace propssl::cli {

// Everything the experiment commands need, with the desk-scale synthetic task
// as the default. File keys live under [section] headers; command-line
// --set overrides accept either the bare key or section.key.
struct ExperimentConfig {
    trainer::DataSpec data;
    ltdata::SplitSpec split;
    trainer::TrainConfig train;

    // Method variants the train command runs side by side.
    std::vector<std::string> variants = {"baseline", "perturbed"};
    // Candidate lambda_prop values for the sweep command.
    std::vector<double> sweep_lambdas = {0.25, 0.5, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::uint64_t seed = 1; // single-seed commands (split, sample-hg)

    // sample-hg debug surface.
    std::vector<std::int64_t> hg_population = {2, 2};
    std::int64_t hg_n = 2;
    std::int64_t hg_draws = 100000;

    std::string out_dir = "out";

    ExperimentConfig() {
        // Desk-scale defaults: 6-class Gaussian task, long tail gamma=10 with
        // beta=4% labeled, proportion loss at 0.5 with perturbed targets.
        split.num_classes = 6;
        split.n1 = 600;
        split.gamma = 10.0;
        split.beta = 0.04;
        split.val_per_class = 50;
        split.test_per_class = 200;
        data.feature_dim = 20;
        data.separation = 3.0;
        train.lambda_prop = 0.5;
        train.perturb_proportions = true;
    }
};

// Defaults, overlaid with the config file (may be empty path = skip), then
// with --set key=value overrides in order. Unknown keys, unparsable values,
// and malformed lines raise config_error naming the key and location.
ExperimentConfig parse_config(const std::string& config_path,
                              const std::vector<std::string>& overrides);

// Sanity of the fully-resolved config (ranges, list contents, referenced
// paths). Throws config_error.
void validate(const ExperimentConfig& config);

// Canonical round-trippable echo of every key; parse_config(write) == config.
std::string render_config(const ExperimentConfig& config);
void write_resolved(const ExperimentConfig& config, const std::string& path);

// baseline -> lambda_prop=0, perturb off; fixed -> config lambda, perturb
// off; perturbed -> config lambda, perturb on.
trainer::TrainConfig variant_config(const ExperimentConfig& config, const std::string& variant);

} // namespace propssl::cli
