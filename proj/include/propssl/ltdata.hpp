#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "propssl/hypergeom.hpp"
#include "propssl/rng.hpp"

namespace propssl::ltdata {

struct SplitSpec {
    int num_classes = 2;        // K
    std::int64_t n1 = 100;      // largest-class size
    double gamma = 1.0;         // imbalance ratio N_1/N_K, >= 1
    double beta = 1.0;          // labeled ratio, in (0, 1]
    int val_per_class = 0;
    int test_per_class = 0;
    std::uint64_t seed = 1;
};

struct Sample {
    std::vector<double> features;
    int label = -1; // 0-based class index; -1 = absent
};

using ClassPools = std::vector<std::vector<Sample>>;

// Per-class sizes N_k = round(N_1 * gamma^(-(k-1)/(K-1))), round-half-up.
// Throws config_error if the minor class rounds to zero.
ClassCounts longtail_counts(const SplitSpec& spec);

class DatasetSplit {
public:
    DatasetSplit() = default;
    DatasetSplit(std::vector<Sample> labeled, std::vector<Sample> unlabeled_features,
                 std::vector<int> unlabeled_truth, std::vector<Sample> validation,
                 std::vector<Sample> test, ClassCounts counts_total, ClassCounts counts_labeled);

    const std::vector<Sample>& labeled() const { return labeled_; }
    // Label-stripped view (every label is -1); this is all the training loss
    // path is allowed to see.
    const std::vector<Sample>& unlabeled() const { return unlabeled_; }
    const std::vector<Sample>& validation() const { return validation_; }
    const std::vector<Sample>& test() const { return test_; }

    const ClassCounts& class_counts_total() const { return counts_total_; }
    const ClassCounts& class_counts_labeled() const { return counts_labeled_; }

    int num_classes() const { return static_cast<int>(counts_total_.num_classes()); }
    int feature_dim() const;

    // Held-back ground truth of the unlabeled pool, for evaluation and
    // diagnostics only.
    const std::vector<int>& unlabeled_truth() const { return unlabeled_truth_; }
    std::vector<Sample> unlabeled_with_truth() const;
    void set_unlabeled_truth(std::vector<int> truth);
    void set_test(std::vector<Sample> test) { test_ = std::move(test); }

private:
    std::vector<Sample> labeled_;
    std::vector<Sample> unlabeled_;
    std::vector<int> unlabeled_truth_;
    std::vector<Sample> validation_;
    std::vector<Sample> test_;
    ClassCounts counts_total_;
    ClassCounts counts_labeled_;
};

// Long-tailed labeled/unlabeled/validation/test partition. Per class k: N_k
// training samples, of which max(1, round(beta*N_k)) are labeled; validation
// and test are class-balanced and drawn disjointly from the leftover pool.
DatasetSplit make_split(const ClassPools& pools, const SplitSpec& spec, Rng& rng);

// Isotropic unit-variance Gaussian pools: class k centered at
// separation * e_k when K <= d, otherwise on a circle in the first two
// feature dimensions.
ClassPools synth_gaussian_mixture(int num_classes, int feature_dim, double separation,
                                  int per_class, Rng& rng);

struct CsvSchema {
    std::vector<std::string> feature_columns;
    std::string label_column = "label";
    int num_classes = 0; // labels must be in [1 .. num_classes]
};

// Reads comma-delimited UTF-8 rows into per-class pools. Malformed cells and
// out-of-range labels raise data_error with the offending line number.
ClassPools load_csv(const std::string& path, const CsvSchema& schema);

// One CSV per partition (with a constant `partition` column) plus a
// split_manifest.txt of key=value pairs. Unlabeled rows carry no label.
void export_split(const DatasetSplit& split, const SplitSpec& spec, const std::string& dir);

} // namespace propssl::ltdata
