#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "propssl/config.hpp"

namespace propssl::cli {

// Long-tailed split written as partition CSVs + manifest under out_dir.
void cmd_split(const ExperimentConfig& config);

// Runs every configured variant across the seed list; per-seed metrics,
// summaries, and checkpoints under out_dir/runs/<variant>/seed_<s>, plus
// aggregate.csv (per seed) and aggregate_table.csv (mean +/- std per variant).
void cmd_train(const ExperimentConfig& config);

// Trains each sweep lambda across the seeds, picks the lambda with the best
// mean validation accuracy, and reports test accuracy at that lambda only.
void cmd_sweep(const ExperimentConfig& config);

// Reads run directories produced by train/sweep (a directory holding
// metrics.csv, or a parent of seed_* directories) and emits deviation bar
// charts, recall-vs-epoch charts, and the accuracy table as SVG + CSV.
void cmd_report(const ExperimentConfig& config, const std::vector<std::string>& run_dirs);

// Hypergeometric debug surface: raw draws plus empirical-vs-exact moments.
void cmd_sample_hg(const ExperimentConfig& config);

// Index into mean_val_accs of the sweep winner: maximal mean validation
// accuracy, ties resolved to the earliest list position.
std::size_t select_lambda(const std::vector<double>& mean_val_accs);

// Full command-line entry point; maps errors to exit codes (0 ok, 2 config,
// 3 data, 4 numeric).
int run_cli(int argc, const char* const* argv);

} // namespace propssl::cli
