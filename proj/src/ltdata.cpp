#include "propssl/ltdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "propssl/csv.hpp"
#include "propssl/errors.hpp"

namespace propssl::ltdata {

namespace {

std::int64_t round_half_up(double x) {
    return static_cast<std::int64_t>(std::floor(x + 0.5));
}

void validate_spec(const SplitSpec& spec) {
    if (spec.num_classes < 2) throw config_error("split spec: K must be >= 2");
    if (spec.n1 < 1) throw config_error("split spec: N_1 must be >= 1");
    if (spec.gamma < 1.0) throw config_error("split spec: gamma must be >= 1");
    if (!(spec.beta > 0.0 && spec.beta <= 1.0))
        throw config_error("split spec: beta must be in (0, 1]");
    if (spec.val_per_class < 0) throw config_error("split spec: val_per_class must be >= 0");
    if (spec.test_per_class < 0) throw config_error("split spec: test_per_class must be >= 0");
}

} // namespace

ClassCounts longtail_counts(const SplitSpec& spec) {
    validate_spec(spec);
    const int k_classes = spec.num_classes;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k_classes));
    for (int k = 0; k < k_classes; ++k) {
        const double exponent = -static_cast<double>(k) / static_cast<double>(k_classes - 1);
        counts[static_cast<std::size_t>(k)] =
            round_half_up(static_cast<double>(spec.n1) * std::pow(spec.gamma, exponent));
    }
    if (counts.back() == 0)
        throw config_error("longtail_counts: minor class size rounds to zero (N_1 = " +
                           std::to_string(spec.n1) + ", gamma = " + std::to_string(spec.gamma) +
                           ")");
    return ClassCounts(std::move(counts));
}

DatasetSplit::DatasetSplit(std::vector<Sample> labeled, std::vector<Sample> unlabeled_features,
                           std::vector<int> unlabeled_truth, std::vector<Sample> validation,
                           std::vector<Sample> test, ClassCounts counts_total,
                           ClassCounts counts_labeled)
    : labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled_features)),
      unlabeled_truth_(std::move(unlabeled_truth)),
      validation_(std::move(validation)),
      test_(std::move(test)),
      counts_total_(std::move(counts_total)),
      counts_labeled_(std::move(counts_labeled)) {
    if (unlabeled_.size() != unlabeled_truth_.size())
        throw std::invalid_argument("DatasetSplit: truth size mismatch");
    for (auto& s : unlabeled_) s.label = -1;
}

int DatasetSplit::feature_dim() const {
    if (!labeled_.empty()) return static_cast<int>(labeled_[0].features.size());
    if (!unlabeled_.empty()) return static_cast<int>(unlabeled_[0].features.size());
    return 0;
}

std::vector<Sample> DatasetSplit::unlabeled_with_truth() const {
    std::vector<Sample> out = unlabeled_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].label = unlabeled_truth_[i];
    return out;
}

void DatasetSplit::set_unlabeled_truth(std::vector<int> truth) {
    if (truth.size() != unlabeled_.size())
        throw std::invalid_argument("set_unlabeled_truth: size mismatch");
    unlabeled_truth_ = std::move(truth);
}

DatasetSplit make_split(const ClassPools& pools, const SplitSpec& spec, Rng& rng) {
    const ClassCounts totals = longtail_counts(spec);
    const std::size_t k_classes = static_cast<std::size_t>(spec.num_classes);
    if (pools.size() != k_classes)
        throw config_error("make_split: expected " + std::to_string(k_classes) +
                           " class pools, got " + std::to_string(pools.size()));

    std::vector<Sample> labeled, unlabeled, validation, test;
    std::vector<int> truth;
    std::vector<std::int64_t> labeled_counts(k_classes);

    for (std::size_t k = 0; k < k_classes; ++k) {
        const std::int64_t n_k = totals[k];
        const std::int64_t need =
            n_k + spec.val_per_class + spec.test_per_class;
        if (static_cast<std::int64_t>(pools[k].size()) < need)
            throw config_error("make_split: class " + std::to_string(k + 1) + " pool has " +
                               std::to_string(pools[k].size()) + " samples, needs " +
                               std::to_string(need));

        std::vector<std::size_t> idx(pools[k].size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        shuffle(idx, rng);

        const std::int64_t n_labeled =
            std::max<std::int64_t>(1, round_half_up(spec.beta * static_cast<double>(n_k)));
        labeled_counts[k] = n_labeled;

        std::size_t pos = 0;
        for (std::int64_t i = 0; i < n_labeled; ++i, ++pos) {
            Sample s = pools[k][idx[pos]];
            s.label = static_cast<int>(k);
            labeled.push_back(std::move(s));
        }
        for (std::int64_t i = n_labeled; i < n_k; ++i, ++pos) {
            Sample s = pools[k][idx[pos]];
            s.label = -1;
            unlabeled.push_back(std::move(s));
            truth.push_back(static_cast<int>(k));
        }
        for (int i = 0; i < spec.val_per_class; ++i, ++pos) {
            Sample s = pools[k][idx[pos]];
            s.label = static_cast<int>(k);
            validation.push_back(std::move(s));
        }
        for (int i = 0; i < spec.test_per_class; ++i, ++pos) {
            Sample s = pools[k][idx[pos]];
            s.label = static_cast<int>(k);
            test.push_back(std::move(s));
        }
    }

    return DatasetSplit(std::move(labeled), std::move(unlabeled), std::move(truth),
                        std::move(validation), std::move(test), totals,
                        ClassCounts(std::move(labeled_counts)));
}

ClassPools synth_gaussian_mixture(int num_classes, int feature_dim, double separation,
                                  int per_class, Rng& rng) {
    if (num_classes < 2) throw std::invalid_argument("synth_gaussian_mixture: K must be >= 2");
    if (feature_dim < 2) throw std::invalid_argument("synth_gaussian_mixture: d must be >= 2");
    if (separation < 0.0)
        throw std::invalid_argument("synth_gaussian_mixture: separation must be >= 0");
    if (per_class < 0) throw std::invalid_argument("synth_gaussian_mixture: per_class must be >= 0");

    // Class centers: scaled basis vectors when they fit (a regular simplex,
    // all pairwise distances separation*sqrt(2)); otherwise a circle in the
    // first two feature dimensions.
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes),
                                             std::vector<double>(static_cast<std::size_t>(feature_dim), 0.0));
    if (num_classes <= feature_dim) {
        for (int k = 0; k < num_classes; ++k)
            centers[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = separation;
    } else {
        for (int k = 0; k < num_classes; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                                 static_cast<double>(num_classes);
            centers[static_cast<std::size_t>(k)][0] = separation * std::cos(angle);
            centers[static_cast<std::size_t>(k)][1] = separation * std::sin(angle);
        }
    }

    ClassPools pools(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
        auto& pool = pools[static_cast<std::size_t>(k)];
        pool.reserve(static_cast<std::size_t>(per_class));
        for (int i = 0; i < per_class; ++i) {
            Sample s;
            s.features.resize(static_cast<std::size_t>(feature_dim));
            for (int j = 0; j < feature_dim; ++j)
                s.features[static_cast<std::size_t>(j)] =
                    centers[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] +
                    rng.gaussian();
            s.label = k;
            pool.push_back(std::move(s));
        }
    }
    return pools;
}

ClassPools load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.num_classes < 1) throw config_error("csv schema: num_classes must be >= 1");
    if (schema.feature_columns.empty())
        throw config_error("csv schema: at least one feature column required");

    const csv::Table table = csv::read(path);
    const std::size_t label_col = table.column(schema.label_column, path);
    std::vector<std::size_t> feature_cols;
    feature_cols.reserve(schema.feature_columns.size());
    for (const auto& name : schema.feature_columns)
        feature_cols.push_back(table.column(name, path));

    ClassPools pools(static_cast<std::size_t>(schema.num_classes));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + " line " + std::to_string(r + 2);
        if (row.size() != table.header.size())
            throw data_error(where + ": expected " + std::to_string(table.header.size()) +
                             " fields, got " + std::to_string(row.size()));

        Sample s;
        s.features.reserve(feature_cols.size());
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            s.features.push_back(csv::parse_double(
                row[feature_cols[j]], where + " column '" + schema.feature_columns[j] + "'"));

        const std::int64_t label =
            csv::parse_int(row[label_col], where + " column '" + schema.label_column + "'");
        if (label < 1 || label > schema.num_classes)
            throw data_error(where + ": unknown label " + std::to_string(label) +
                             ", expected 1.." + std::to_string(schema.num_classes));
        s.label = static_cast<int>(label - 1);
        pools[static_cast<std::size_t>(s.label)].push_back(std::move(s));
    }

    if (table.rows.empty())
        std::cerr << "warning: " << path << " contains a header but no data rows\n";
    return pools;
}

namespace {

void write_partition_csv(const std::string& path, const std::string& partition,
                         const std::vector<Sample>& samples, int feature_dim) {
    csv::Table table;
    table.header.push_back("partition");
    table.header.push_back("label");
    for (int j = 0; j < feature_dim; ++j) table.header.push_back("f" + std::to_string(j + 1));
    for (const auto& s : samples) {
        std::vector<std::string> row;
        row.reserve(2 + s.features.size());
        row.push_back(partition);
        row.push_back(s.label >= 0 ? std::to_string(s.label + 1) : "");
        for (double v : s.features) row.push_back(csv::format_double(v));
        table.rows.push_back(std::move(row));
    }
    csv::write(path, table);
}

} // namespace

void export_split(const DatasetSplit& split, const SplitSpec& spec, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const int d = split.feature_dim();
    write_partition_csv(dir + "/labeled.csv", "labeled", split.labeled(), d);
    write_partition_csv(dir + "/unlabeled.csv", "unlabeled", split.unlabeled(), d);
    write_partition_csv(dir + "/validation.csv", "validation", split.validation(), d);
    write_partition_csv(dir + "/test.csv", "test", split.test(), d);

    std::ofstream manifest(dir + "/split_manifest.txt");
    if (!manifest) throw data_error(dir + "/split_manifest.txt: cannot open for writing");
    manifest << "k=" << spec.num_classes << '\n'
             << "n1=" << spec.n1 << '\n'
             << "gamma=" << csv::format_double(spec.gamma) << '\n'
             << "beta=" << csv::format_double(spec.beta) << '\n'
             << "val_per_class=" << spec.val_per_class << '\n'
             << "test_per_class=" << spec.test_per_class << '\n'
             << "seed=" << spec.seed << '\n';
    for (std::size_t k = 0; k < split.class_counts_total().num_classes(); ++k)
        manifest << "count_total_" << (k + 1) << '=' << split.class_counts_total()[k] << '\n';
    for (std::size_t k = 0; k < split.class_counts_labeled().num_classes(); ++k)
        manifest << "count_labeled_" << (k + 1) << '=' << split.class_counts_labeled()[k] << '\n';
}

} // namespace propssl::ltdata
