#include "propssl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "propssl/csv.hpp"
#include "propssl/errors.hpp"
#include "propssl/nn.hpp"
#include "propssl/svg.hpp"

namespace propssl::cli {

namespace fs = std::filesystem;

namespace {

std::string fd(double v) { return csv::format_double(v); }

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (const double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (const double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / n)}; // population convention
}

void prepare_out_dir(const ExperimentConfig& config) {
    validate(config);
    fs::create_directories(config.out_dir);
    write_resolved(config, config.out_dir + "/config_resolved.txt");
}

} // namespace

void cmd_split(const ExperimentConfig& config) {
    prepare_out_dir(config);
    ltdata::SplitSpec spec = config.split;
    spec.seed = config.seed;
    const ltdata::DatasetSplit split = trainer::build_split(config.data, spec);
    ltdata::export_split(split, spec, config.out_dir);
    std::cout << "split: " << split.labeled().size() << " labeled, " << split.unlabeled().size()
              << " unlabeled, " << split.validation().size() << " validation, "
              << split.test().size() << " test -> " << config.out_dir << '\n';
}

void cmd_train(const ExperimentConfig& config) {
    prepare_out_dir(config);

    csv::Table per_seed;
    per_seed.header = {"variant",           "seed",
                       "best_val_acc",      "test_acc_at_best",
                       "prop_l1_deviation", "minor_signed_deviation",
                       "minor_pl_recall",   "major_pl_recall"};
    csv::Table table;
    table.header = {"variant",
                    "gamma",
                    "beta",
                    "num_seeds",
                    "val_acc_mean",
                    "val_acc_std",
                    "test_acc_mean",
                    "test_acc_std",
                    "prop_l1_mean",
                    "prop_l1_std",
                    "minor_signed_dev_mean",
                    "minor_signed_dev_std",
                    "minor_pl_recall_mean",
                    "minor_pl_recall_std",
                    "major_pl_recall_mean",
                    "major_pl_recall_std"};

    for (const std::string& variant : config.variants) {
        const trainer::TrainConfig tcfg = variant_config(config, variant);
        const std::string vdir = config.out_dir + "/runs/" + variant;
        const trainer::Aggregate agg = trainer::run_seeds(
            config.data, config.split, tcfg, config.seeds,
            [&](std::uint64_t seed, const trainer::RunResult& result) {
                const std::string sdir = vdir + "/seed_" + std::to_string(seed);
                fs::create_directories(sdir);
                trainer::write_metrics_csv(sdir + "/metrics.csv", result.history);
                trainer::write_run_summary(sdir + "/summary.txt", result);
                const auto iters = static_cast<std::int64_t>(result.config.iters_per_epoch);
                nn::save_checkpoint(sdir + "/checkpoint_best.txt", result.best_params, seed,
                                    result.best_epoch * iters);
                nn::save_checkpoint(sdir + "/checkpoint_final.txt", result.final_params, seed,
                                    static_cast<std::int64_t>(result.config.epochs) * iters);
                std::cout << "train " << variant << " seed " << seed << ": best epoch "
                          << result.best_epoch << ", val " << fixed4(result.best_validation_accuracy)
                          << ", test " << fixed4(result.test_accuracy_at_best) << '\n';
            });

        for (const trainer::SeedSummary& s : agg.per_seed)
            per_seed.rows.push_back({variant, std::to_string(s.seed),
                                     fd(s.best_validation_accuracy), fd(s.test_accuracy_at_best),
                                     fd(s.proportion_l1_deviation), fd(s.minor_signed_deviation),
                                     fd(s.minor_pl_recall), fd(s.major_pl_recall)});
        table.rows.push_back(
            {variant, fd(config.split.gamma), fd(config.split.beta),
             std::to_string(config.seeds.size()), fd(agg.mean.best_validation_accuracy),
             fd(agg.stdev.best_validation_accuracy), fd(agg.mean.test_accuracy_at_best),
             fd(agg.stdev.test_accuracy_at_best), fd(agg.mean.proportion_l1_deviation),
             fd(agg.stdev.proportion_l1_deviation), fd(agg.mean.minor_signed_deviation),
             fd(agg.stdev.minor_signed_deviation), fd(agg.mean.minor_pl_recall),
             fd(agg.stdev.minor_pl_recall), fd(agg.mean.major_pl_recall),
             fd(agg.stdev.major_pl_recall)});
    }

    csv::write(config.out_dir + "/aggregate.csv", per_seed);
    csv::write(config.out_dir + "/aggregate_table.csv", table);
    std::cout << "train: wrote " << config.out_dir << "/aggregate_table.csv\n";
}

std::size_t select_lambda(const std::vector<double>& mean_val_accs) {
    if (mean_val_accs.empty())
        throw std::invalid_argument("select_lambda: empty candidate list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < mean_val_accs.size(); ++i)
        if (mean_val_accs[i] > mean_val_accs[best]) best = i;
    return best;
}

void cmd_sweep(const ExperimentConfig& config) {
    prepare_out_dir(config);

    std::vector<trainer::Aggregate> aggs;
    for (const double lambda : config.sweep_lambdas) {
        trainer::TrainConfig tcfg = config.train;
        tcfg.lambda_prop = lambda;
        if (lambda == 0.0) tcfg.perturb_proportions = false; // plain baseline
        const std::string ldir = config.out_dir + "/sweep/lambda_" + fd(lambda);
        aggs.push_back(trainer::run_seeds(
            config.data, config.split, tcfg, config.seeds,
            [&](std::uint64_t seed, const trainer::RunResult& result) {
                const std::string sdir = ldir + "/seed_" + std::to_string(seed);
                fs::create_directories(sdir);
                trainer::write_metrics_csv(sdir + "/metrics.csv", result.history);
                trainer::write_run_summary(sdir + "/summary.txt", result);
            }));
        std::cout << "sweep lambda " << fd(lambda) << ": mean val "
                  << fixed4(aggs.back().mean.best_validation_accuracy) << '\n';
    }

    std::vector<double> mean_vals;
    mean_vals.reserve(aggs.size());
    for (const trainer::Aggregate& a : aggs) mean_vals.push_back(a.mean.best_validation_accuracy);
    const std::size_t best = select_lambda(mean_vals);

    // Selection sees validation only; test accuracy appears solely for the
    // winning lambda.
    csv::Table results;
    results.header = {"lambda", "num_seeds", "val_acc_mean", "val_acc_std", "selected"};
    for (std::size_t i = 0; i < aggs.size(); ++i)
        results.rows.push_back({fd(config.sweep_lambdas[i]), std::to_string(config.seeds.size()),
                                fd(aggs[i].mean.best_validation_accuracy),
                                fd(aggs[i].stdev.best_validation_accuracy),
                                i == best ? "1" : "0"});
    csv::write(config.out_dir + "/sweep_results.csv", results);

    std::ofstream sel(config.out_dir + "/selection.txt", std::ios::binary);
    if (!sel) throw data_error(config.out_dir + "/selection.txt: cannot open for writing");
    sel << "selected_lambda=" << fd(config.sweep_lambdas[best]) << '\n'
        << "val_acc_mean=" << fd(aggs[best].mean.best_validation_accuracy) << '\n'
        << "val_acc_std=" << fd(aggs[best].stdev.best_validation_accuracy) << '\n'
        << "test_acc_mean=" << fd(aggs[best].mean.test_accuracy_at_best) << '\n'
        << "test_acc_std=" << fd(aggs[best].stdev.test_accuracy_at_best) << '\n';
    for (const trainer::SeedSummary& s : aggs[best].per_seed)
        sel << "test_acc_seed_" << s.seed << '=' << fd(s.test_accuracy_at_best) << '\n';
    std::cout << "sweep: selected lambda " << fd(config.sweep_lambdas[best]) << ", test "
              << fixed4(aggs[best].mean.test_accuracy_at_best) << " +/- "
              << fixed4(aggs[best].stdev.test_accuracy_at_best) << '\n';
}

namespace {

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error(path + ": cannot open");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw data_error(path + " line " + std::to_string(lineno) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw data_error(path + ": missing key '" + key + "'");
    return csv::parse_double(it->second, path + " key " + key);
}

struct LoadedRun {
    csv::Table metrics;
    std::map<std::string, std::string> summary;
    std::string metrics_path;
    std::string summary_path;
};

struct VariantRuns {
    std::string name;
    std::vector<LoadedRun> runs;
};

LoadedRun load_run(const std::string& dir) {
    LoadedRun run;
    run.metrics_path = dir + "/metrics.csv";
    run.summary_path = dir + "/summary.txt";
    run.metrics = csv::read(run.metrics_path);
    run.summary = read_kv_file(run.summary_path);
    return run;
}

std::vector<VariantRuns> discover_runs(const std::vector<std::string>& run_dirs) {
    std::vector<VariantRuns> variants;
    for (const std::string& dir : run_dirs) {
        VariantRuns v;
        v.name = fs::path(dir).lexically_normal().filename().string();
        if (v.name.empty()) v.name = dir;
        if (fs::exists(dir + "/metrics.csv")) {
            v.runs.push_back(load_run(dir));
        } else {
            std::vector<std::pair<std::uint64_t, std::string>> seed_dirs;
            if (fs::is_directory(dir))
                for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
                    if (!entry.is_directory()) continue;
                    const std::string name = entry.path().filename().string();
                    if (name.rfind("seed_", 0) != 0) continue;
                    std::uint64_t seed = 0;
                    try {
                        seed = static_cast<std::uint64_t>(
                            csv::parse_int(name.substr(5), entry.path().string()));
                    } catch (const data_error&) {
                        continue;
                    }
                    seed_dirs.emplace_back(seed, entry.path().string());
                }
            std::sort(seed_dirs.begin(), seed_dirs.end());
            for (const auto& [seed, path] : seed_dirs) {
                (void)seed;
                v.runs.push_back(load_run(path));
            }
            if (v.runs.empty())
                throw data_error(dir + ": no metrics.csv (and no seed_*/metrics.csv) found");
        }
        variants.push_back(std::move(v));
    }
    return variants;
}

bool has_column(const csv::Table& table, const std::string& name) {
    return std::find(table.header.begin(), table.header.end(), name) != table.header.end();
}

// Number of per-class columns with the given prefix; at least one required.
std::size_t class_count(const csv::Table& table, const std::string& prefix,
                        const std::string& file) {
    table.column(prefix + "1", file); // throws naming file and column if absent
    std::size_t k = 1;
    while (has_column(table, prefix + std::to_string(k + 1))) ++k;
    return k;
}

// The metrics row holding the run's best epoch.
std::size_t best_epoch_row(const LoadedRun& run) {
    const auto best_epoch = static_cast<std::int64_t>(
        kv_double(run.summary, "best_epoch", run.summary_path));
    const std::size_t epoch_col = run.metrics.column("epoch", run.metrics_path);
    for (std::size_t r = 0; r < run.metrics.rows.size(); ++r)
        if (csv::parse_int(run.metrics.rows[r][epoch_col],
                           run.metrics_path + " column epoch") == best_epoch)
            return r;
    throw data_error(run.metrics_path + ": no row for best epoch " + std::to_string(best_epoch));
}

} // namespace

void cmd_report(const ExperimentConfig& config, const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) throw config_error("report: at least one run directory is required");
    prepare_out_dir(config);

    const std::vector<VariantRuns> variants = discover_runs(run_dirs);

    // Every run must agree on the class count.
    const std::size_t k =
        class_count(variants[0].runs[0].metrics, "est_prop_", variants[0].runs[0].metrics_path);
    for (const VariantRuns& v : variants)
        for (const LoadedRun& run : v.runs) {
            if (class_count(run.metrics, "est_prop_", run.metrics_path) != k)
                throw data_error(run.metrics_path + ": est_prop_* class count differs from " +
                                 std::to_string(k));
            if (class_count(run.metrics, "pl_recall_", run.metrics_path) != k)
                throw data_error(run.metrics_path + ": pl_recall_* class count differs from " +
                                 std::to_string(k));
        }

    // (a) Signed deviation bars (estimated - true at the best checkpoint),
    // one chart per variant, averaged over its runs.
    for (const VariantRuns& v : variants) {
        std::vector<double> mean_true(k, 0.0), mean_est(k, 0.0);
        for (const LoadedRun& run : v.runs) {
            const std::size_t row = best_epoch_row(run);
            for (std::size_t c = 0; c < k; ++c) {
                const std::string col = "est_prop_" + std::to_string(c + 1);
                mean_est[c] += csv::parse_double(
                    run.metrics.rows[row][run.metrics.column(col, run.metrics_path)],
                    run.metrics_path + " column " + col);
                mean_true[c] +=
                    kv_double(run.summary, "true_prop_" + std::to_string(c + 1), run.summary_path);
            }
        }
        csv::Table dev;
        dev.header = {"class", "true_prop", "est_prop", "deviation"};
        std::vector<std::string> labels;
        std::vector<double> values;
        for (std::size_t c = 0; c < k; ++c) {
            mean_true[c] /= static_cast<double>(v.runs.size());
            mean_est[c] /= static_cast<double>(v.runs.size());
            dev.rows.push_back({std::to_string(c + 1), fd(mean_true[c]), fd(mean_est[c]),
                                fd(mean_est[c] - mean_true[c])});
            labels.push_back("class " + std::to_string(c + 1));
            values.push_back(mean_est[c] - mean_true[c]);
        }
        csv::write(config.out_dir + "/deviation_" + v.name + ".csv", dev);
        svg::write_file(config.out_dir + "/deviation_" + v.name + ".svg",
                        svg::signed_bar_chart("Estimated - true unlabeled proportion (" + v.name +
                                                  "), red = over, blue = under",
                                              labels, values));
    }

    // (b) Pseudo-label recall vs epoch for the most major and most minor
    // class, one series per variant (mean over that variant's runs).
    const auto recall_outputs = {std::make_pair(std::string("recall_major"), std::size_t{1}),
                                 std::make_pair(std::string("recall_minor"), k)};
    for (const auto& [stem, class_index] : recall_outputs) {
        const std::string col_name = "pl_recall_" + std::to_string(class_index);
        csv::Table long_form;
        long_form.header = {"variant", "epoch", "recall"};
        std::vector<svg::Series> series;
        for (const VariantRuns& v : variants) {
            // Runs within a variant must cover identical epochs.
            const LoadedRun& first = v.runs[0];
            const std::size_t epoch_col = first.metrics.column("epoch", first.metrics_path);
            std::vector<double> epochs, sums(first.metrics.rows.size(), 0.0);
            for (const auto& row : first.metrics.rows)
                epochs.push_back(static_cast<double>(
                    csv::parse_int(row[epoch_col], first.metrics_path + " column epoch")));
            for (const LoadedRun& run : v.runs) {
                if (run.metrics.rows.size() != epochs.size())
                    throw data_error(run.metrics_path + ": epoch count differs from " +
                                     first.metrics_path);
                const std::size_t col = run.metrics.column(col_name, run.metrics_path);
                for (std::size_t r = 0; r < run.metrics.rows.size(); ++r)
                    sums[r] += csv::parse_double(run.metrics.rows[r][col],
                                                 run.metrics_path + " column " + col_name);
            }
            svg::Series s;
            s.label = v.name;
            s.x = epochs;
            for (std::size_t r = 0; r < sums.size(); ++r) {
                s.y.push_back(sums[r] / static_cast<double>(v.runs.size()));
                long_form.rows.push_back(
                    {v.name, fd(epochs[r]), fd(s.y.back())});
            }
            series.push_back(std::move(s));
        }
        csv::write(config.out_dir + "/" + stem + ".csv", long_form);
        const std::string which = class_index == 1 ? "most major" : "most minor";
        svg::write_file(config.out_dir + "/" + stem + ".svg",
                        svg::line_chart("Pseudo-label recall, " + which + " class", "epoch",
                                        "recall", series));
    }

    // (c) Accuracy table from the run summaries.
    csv::Table acc;
    acc.header = {"variant", "runs", "val_acc_mean", "val_acc_std", "test_acc_mean",
                  "test_acc_std"};
    std::vector<std::vector<std::string>> display_rows;
    for (const VariantRuns& v : variants) {
        std::vector<double> vals, tests;
        for (const LoadedRun& run : v.runs) {
            vals.push_back(kv_double(run.summary, "best_validation_accuracy", run.summary_path));
            tests.push_back(kv_double(run.summary, "test_accuracy_at_best", run.summary_path));
        }
        const auto [val_mean, val_std] = mean_and_std(vals);
        const auto [test_mean, test_std] = mean_and_std(tests);
        acc.rows.push_back({v.name, std::to_string(v.runs.size()), fd(val_mean), fd(val_std),
                            fd(test_mean), fd(test_std)});
        display_rows.push_back({v.name, std::to_string(v.runs.size()),
                                fixed4(val_mean) + " +/- " + fixed4(val_std),
                                fixed4(test_mean) + " +/- " + fixed4(test_std)});
    }
    csv::write(config.out_dir + "/accuracy_table.csv", acc);
    svg::write_file(config.out_dir + "/accuracy_table.svg",
                    svg::table_chart("Balanced accuracy at the best-validation checkpoint",
                                     {"variant", "runs", "validation", "test"}, display_rows));
    std::cout << "report: wrote charts for " << variants.size() << " variant(s) to "
              << config.out_dir << '\n';
}

void cmd_sample_hg(const ExperimentConfig& config) {
    prepare_out_dir(config);
    const ClassCounts population(config.hg_population);
    const std::size_t k = population.num_classes();
    Rng rng(mix_seed(config.seed, 4));

    csv::Table draws;
    draws.header = {"draw"};
    for (std::size_t c = 1; c <= k; ++c) draws.header.push_back("count_" + std::to_string(c));

    std::vector<double> sums(k, 0.0);
    Matrix cross(k, k);
    for (std::int64_t d = 0; d < config.hg_draws; ++d) {
        const ClassCounts draw = hypergeom::sample(population, config.hg_n, rng);
        std::vector<std::string> row;
        row.reserve(k + 1);
        row.push_back(std::to_string(d));
        for (std::size_t c = 0; c < k; ++c) {
            row.push_back(std::to_string(draw[c]));
            sums[c] += static_cast<double>(draw[c]);
            for (std::size_t m = 0; m < k; ++m)
                cross(c, m) += static_cast<double>(draw[c]) * static_cast<double>(draw[m]);
        }
        draws.rows.push_back(std::move(row));
    }
    csv::write(config.out_dir + "/draws.csv", draws);

    csv::Table moments;
    moments.header = {"statistic", "class_i", "class_j", "exact", "empirical"};
    if (config.hg_draws > 0) {
        const hypergeom::Moments exact = hypergeom::mean_and_covariance(population, config.hg_n);
        const auto d = static_cast<double>(config.hg_draws);
        std::vector<double> mean_emp(k);
        for (std::size_t c = 0; c < k; ++c) mean_emp[c] = sums[c] / d;
        for (std::size_t c = 0; c < k; ++c)
            moments.rows.push_back({"mean", std::to_string(c + 1), std::to_string(c + 1),
                                    fd(exact.mean[c]), fd(mean_emp[c])});
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t m = 0; m < k; ++m)
                moments.rows.push_back({"cov", std::to_string(c + 1), std::to_string(m + 1),
                                        fd(exact.covariance(c, m)),
                                        fd(cross(c, m) / d - mean_emp[c] * mean_emp[m])});
    }
    csv::write(config.out_dir + "/moments.csv", moments);
    std::cout << "sample-hg: " << config.hg_draws << " draws of n=" << config.hg_n << " -> "
              << config.out_dir << '\n';
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Proportion-loss-regularized class-imbalanced semi-supervised learning"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_arg;
    std::vector<std::string> overrides, run_dirs;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "config file (key=value with [section] headers)");
        cmd->add_option("--set", overrides, "override a config key, e.g. --set lambda_prop=1.0")
            ->type_size(1);
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seeds", seeds_arg, "comma-separated seed list, e.g. 1,2,3");
    };

    CLI::App* split = app.add_subcommand("split", "generate and export a long-tailed split");
    CLI::App* train = app.add_subcommand("train", "train configured variants across seeds");
    CLI::App* sweep = app.add_subcommand("sweep", "tune lambda_prop on validation accuracy");
    CLI::App* report = app.add_subcommand("report", "charts and tables from finished runs");
    CLI::App* sample = app.add_subcommand("sample-hg", "multivariate hypergeometric debug draws");
    for (CLI::App* cmd : {split, train, sweep, report, sample}) add_common(cmd);
    report->add_option("dirs", run_dirs, "run directories (from train or sweep)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        // Precedence: defaults < file < --set < --seeds/--out.
        if (!seeds_arg.empty()) overrides.push_back("run.seeds=" + seeds_arg);
        ExperimentConfig config = parse_config(config_path, overrides);
        if (!out_dir.empty()) config.out_dir = out_dir;

        if (split->parsed())
            cmd_split(config);
        else if (train->parsed())
            cmd_train(config);
        else if (sweep->parsed())
            cmd_sweep(config);
        else if (report->parsed())
            cmd_report(config, run_dirs);
        else
            cmd_sample_hg(config);
        return 0;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace propssl::cli
