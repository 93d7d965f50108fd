#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "propssl/hypergeom.hpp"
#include "propssl/ltdata.hpp"
#include "propssl/matrix.hpp"
#include "propssl/nn.hpp"
#include "propssl/rng.hpp"

namespace propssl::trainer {

struct TrainConfig {
    int epochs = 60;
    int iters_per_epoch = 50;
    int labeled_batch = 16;
    int mu = 7; // unlabeled batch = mu * labeled_batch
    int hidden = 64;
    double lr0 = 0.03;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double tau = 0.95;
    double lambda_u = 1.0;
    double lambda_prop = 0.0;
    bool perturb_proportions = false;
    double weak_noise_sigma = 0.1;
    double strong_noise_sigma = 0.5;
    // Heavier dropout blunts pseudo-label confidence across the board and the
    // confidence-gated recall diagnostics with it; 0.05 keeps the strong view
    // clearly harsher than the weak one without washing out the gap.
    double strong_dropout_rate = 0.05;
    double prop_epsilon = 1e-8;
    // Compute the proportion loss on the strong view instead of the weak one.
    bool prop_on_strong = false;
    std::uint64_t seed = 1;
};

// Throws config_error describing the first offending field.
void validate_config(const TrainConfig& config);

struct MetricsRecord {
    int epoch = 0;
    // Mean over the epoch's iterations of the raw per-iteration values (no
    // smoothing); zero for the pre-training record.
    double loss_sup = 0.0;
    double loss_cons = 0.0;
    double loss_prop = 0.0;
    double mask_rate = 0.0;
    double lr = 0.0; // lr used at the epoch's last iteration
    double val_balanced_accuracy = 0.0;
    double test_balanced_accuracy = 0.0;
    std::vector<double> test_per_class_recall;
    ProportionVector estimated_unlabeled_proportions; // mean softmax, full unlabeled set
    ProportionVector argmax_proportions;              // normalized argmax histogram
    std::vector<double> pseudo_label_recall;          // per class, see pseudo_label_recall()
};

struct RunResult {
    int best_epoch = 0; // maximal validation accuracy, ties -> earliest
    double best_validation_accuracy = 0.0;
    double test_accuracy_at_best = 0.0;
    std::vector<MetricsRecord> history; // records 0..epochs; history[0] is pre-training
    nn::ModelParams best_params;
    nn::ModelParams final_params;
    TrainConfig config; // resolved echo
    ProportionVector true_unlabeled_proportions;
};

// Adds i.i.d. Gaussian noise with std sigma to every feature.
Matrix augment_weak(const Matrix& batch, double sigma, Rng& rng);

// Gaussian noise plus independent per-feature zeroing with the given rate.
Matrix augment_strong(const Matrix& batch, double sigma, double dropout_rate, Rng& rng);

// The Eq.-3 target: with perturb, a fresh draw of batch_size items without
// replacement from the integer population that follows q_hat, returned as
// proportions; otherwise q_hat itself. Consumes rng only when perturb.
ProportionVector proportion_target(const ProportionVector& q_hat, std::int64_t m,
                                   std::int64_t batch_size, bool perturb, Rng& rng);

struct EvalResult {
    double balanced_accuracy = 0.0; // mean recall over classes present in the set
    std::vector<double> per_class_recall;
    ProportionVector mean_softmax;
    ProportionVector argmax_proportions;
};

// Clean-feature (no augmentation) evaluation of labeled samples.
EvalResult evaluate(const nn::ModelParams& params, const std::vector<ltdata::Sample>& samples);

// recall_c = #(confident AND argmax-correct among true class c) / #(true
// class c), computed on clean features; `samples` carry ground truth.
std::vector<double> pseudo_label_recall(const nn::ModelParams& params,
                                        const std::vector<ltdata::Sample>& samples, double tau);

// The full loop: per iteration, supervised CE on a cycled labeled batch,
// consistency between weak/strong views of a cycled unlabeled batch, and —
// only when lambda_prop != 0 — the proportion loss against
// proportion_target(q_hat from labeled counts, M = unlabeled-pool size).
// One SGD step per iteration under the cosine schedule. Per epoch, appends a
// MetricsRecord and tracks the best-validation checkpoint.
RunResult train(const ltdata::DatasetSplit& split, const TrainConfig& config);

// The identical loop with the proportion branch removed at compile time;
// exists so tests can prove the lambda_prop=0 runtime path is bit-identical
// to a build without the branch.
RunResult train_proportion_branch_compiled_out(const ltdata::DatasetSplit& split,
                                               const TrainConfig& config);

// Where the samples come from when a split must be rebuilt per seed.
struct DataSpec {
    enum class Source { synthetic, csv };
    Source source = Source::synthetic;
    // synthetic
    int feature_dim = 20;
    double separation = 3.0;
    int pool_per_class = 0; // 0 -> smallest pool the split spec needs
    // csv
    std::string csv_path;
    ltdata::CsvSchema csv_schema;
};

// Pools seeded with mix_seed(spec.seed, 0), split with mix_seed(spec.seed, 1)
// — the one derivation shared by every command, so a split regenerated
// anywhere from the same spec is identical.
ltdata::DatasetSplit build_split(const DataSpec& data, const ltdata::SplitSpec& spec);

// Best-checkpoint metrics of one seeded run, plus the derived quantities the
// acceptance comparisons are stated in.
struct SeedSummary {
    std::uint64_t seed = 0;
    double best_validation_accuracy = 0.0;
    double test_accuracy_at_best = 0.0;
    double proportion_l1_deviation = 0.0; // |est - true|_1 at best checkpoint
    double minor_signed_deviation = 0.0;  // est - true for the most minor class
    double minor_pl_recall = 0.0;         // most minor class, at best checkpoint
    double major_pl_recall = 0.0;         // most major class, at best checkpoint
};

struct Aggregate {
    std::vector<SeedSummary> per_seed;
    SeedSummary mean;  // seed field unused
    SeedSummary stdev; // population convention (divide by N); seed field unused
};

using RunCallback = std::function<void(std::uint64_t seed, const RunResult&)>;

// Rebuilds pools, split, and model per seed (split_spec.seed and config.seed
// both set to the run's seed) and aggregates best-checkpoint metrics.
Aggregate run_seeds(const DataSpec& data, const ltdata::SplitSpec& split_spec,
                    const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                    const RunCallback& on_run = nullptr);

// Fixed-schema per-epoch CSV: epoch, loss_sup, loss_cons, loss_prop,
// mask_rate, lr, val_bal_acc, test_bal_acc, est_prop_1..K, pl_recall_1..K.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& history);

// Plain-text key=value run summary (best checkpoint, per-class truth and
// deviations); the report command reads true proportions back from it.
void write_run_summary(const std::string& path, const RunResult& result);

} // namespace propssl::trainer
