#include "propssl/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "propssl/csv.hpp"
#include "propssl/errors.hpp"
#include "propssl/ssl_losses.hpp"

namespace propssl::trainer {

void validate_config(const TrainConfig& config) {
    if (config.epochs < 0) throw config_error("train config: epochs must be >= 0");
    if (config.iters_per_epoch < 1)
        throw config_error("train config: iters_per_epoch must be >= 1");
    if (config.labeled_batch < 1) throw config_error("train config: labeled_batch must be >= 1");
    if (config.mu < 1) throw config_error("train config: mu must be >= 1");
    if (config.hidden < 1) throw config_error("train config: hidden must be >= 1");
    if (!(config.lr0 >= 0.0)) throw config_error("train config: lr0 must be >= 0");
    if (!(config.momentum >= 0.0 && config.momentum < 1.0))
        throw config_error("train config: momentum must be in [0, 1)");
    if (!(config.weight_decay >= 0.0)) throw config_error("train config: weight_decay must be >= 0");
    if (!(config.tau >= 0.0 && config.tau <= 1.0))
        throw config_error("train config: tau must be in [0, 1]");
    if (!(config.lambda_u >= 0.0)) throw config_error("train config: lambda_u must be >= 0");
    if (!(config.lambda_prop >= 0.0)) throw config_error("train config: lambda_prop must be >= 0");
    if (!(config.weak_noise_sigma >= 0.0))
        throw config_error("train config: weak_noise_sigma must be >= 0");
    if (!(config.strong_noise_sigma >= 0.0))
        throw config_error("train config: strong_noise_sigma must be >= 0");
    if (!(config.strong_dropout_rate >= 0.0 && config.strong_dropout_rate < 1.0))
        throw config_error("train config: strong_dropout_rate must be in [0, 1)");
    if (!(config.prop_epsilon >= 0.0)) throw config_error("train config: prop_epsilon must be >= 0");
}

Matrix augment_weak(const Matrix& batch, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("augment_weak: sigma must be >= 0");
    Matrix out = batch;
    if (sigma == 0.0) return out;
    for (double& v : out.data()) v += sigma * rng.gaussian();
    return out;
}

Matrix augment_strong(const Matrix& batch, double sigma, double dropout_rate, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("augment_strong: sigma must be >= 0");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("augment_strong: dropout_rate must be in [0, 1)");
    Matrix out = batch;
    if (sigma > 0.0)
        for (double& v : out.data()) v += sigma * rng.gaussian();
    if (dropout_rate > 0.0)
        for (double& v : out.data())
            if (rng.uniform() < dropout_rate) v = 0.0;
    return out;
}

ProportionVector proportion_target(const ProportionVector& q_hat, std::int64_t m,
                                   std::int64_t batch_size, bool perturb, Rng& rng) {
    if (!perturb) return q_hat;
    if (batch_size < 1) throw std::invalid_argument("proportion_target: batch_size must be >= 1");
    if (batch_size > m)
        throw config_error("proportion_target: batch size " + std::to_string(batch_size) +
                           " exceeds population size M=" + std::to_string(m));
    const ClassCounts population = hypergeom::population_from_proportions(q_hat, m);
    const ClassCounts draw = hypergeom::sample(population, batch_size, rng);
    std::vector<double> probs(draw.num_classes());
    for (std::size_t l = 0; l < probs.size(); ++l)
        probs[l] = static_cast<double>(draw[l]) / static_cast<double>(batch_size);
    return ProportionVector(std::move(probs));
}

namespace {

constexpr std::size_t kEvalChunk = 8192;

Matrix features_of(const std::vector<ltdata::Sample>& samples, std::size_t begin,
                   std::size_t end) {
    const std::size_t d = samples.empty() ? 0 : samples[0].features.size();
    Matrix x(end - begin, d);
    for (std::size_t i = begin; i < end; ++i) {
        if (samples[i].features.size() != d)
            throw std::invalid_argument("inconsistent feature dimension within a sample set");
        for (std::size_t j = 0; j < d; ++j) x(i - begin, j) = samples[i].features[j];
    }
    return x;
}

Matrix features_of(const std::vector<ltdata::Sample>& samples) {
    return features_of(samples, 0, samples.size());
}

std::size_t argmax_row(const Matrix& probs, std::size_t i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
        if (probs(i, j) > probs(i, best)) best = j;
    return best;
}

} // namespace

EvalResult evaluate(const nn::ModelParams& params, const std::vector<ltdata::Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
    const auto k = static_cast<std::size_t>(params.num_classes());

    std::vector<double> softmax_sum(k, 0.0);
    std::vector<std::int64_t> argmax_counts(k, 0), per_class(k, 0), correct(k, 0);

    for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
        const Matrix probs = nn::softmax(nn::forward(params, features_of(samples, begin, end)).logits);
        if (!all_finite(probs))
            throw numeric_error("evaluate: non-finite class probabilities; model has diverged");
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            const int label = samples[begin + i].label;
            if (label < 0 || static_cast<std::size_t>(label) >= k)
                throw std::invalid_argument("evaluate: sample " + std::to_string(begin + i) +
                                            " has no valid label");
            for (std::size_t j = 0; j < k; ++j) softmax_sum[j] += probs(i, j);
            const std::size_t pred = argmax_row(probs, i);
            ++argmax_counts[pred];
            ++per_class[static_cast<std::size_t>(label)];
            if (pred == static_cast<std::size_t>(label)) ++correct[static_cast<std::size_t>(label)];
        }
    }

    EvalResult out;
    out.per_class_recall.assign(k, 0.0);
    double recall_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (per_class[c] == 0) continue; // absent classes excluded from the mean
        out.per_class_recall[c] =
            static_cast<double>(correct[c]) / static_cast<double>(per_class[c]);
        recall_sum += out.per_class_recall[c];
        ++present;
    }
    out.balanced_accuracy = recall_sum / static_cast<double>(present);

    const auto n = static_cast<double>(samples.size());
    std::vector<double> mean_softmax(k), argmax_props(k);
    for (std::size_t c = 0; c < k; ++c) {
        mean_softmax[c] = softmax_sum[c] / n;
        argmax_props[c] = static_cast<double>(argmax_counts[c]) / n;
    }
    out.mean_softmax = ProportionVector(std::move(mean_softmax));
    out.argmax_proportions = ProportionVector(std::move(argmax_props));
    return out;
}

std::vector<double> pseudo_label_recall(const nn::ModelParams& params,
                                        const std::vector<ltdata::Sample>& samples, double tau) {
    if (samples.empty()) throw std::invalid_argument("pseudo_label_recall: empty sample set");
    const auto k = static_cast<std::size_t>(params.num_classes());
    std::vector<std::int64_t> per_class(k, 0), confident_correct(k, 0);

    for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
        const Matrix probs = nn::softmax(nn::forward(params, features_of(samples, begin, end)).logits);
        if (!all_finite(probs))
            throw numeric_error(
                "pseudo_label_recall: non-finite class probabilities; model has diverged");
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            const int label = samples[begin + i].label;
            if (label < 0 || static_cast<std::size_t>(label) >= k)
                throw std::invalid_argument("pseudo_label_recall: sample " +
                                            std::to_string(begin + i) + " has no valid label");
            ++per_class[static_cast<std::size_t>(label)];
            const std::size_t pred = argmax_row(probs, i);
            if (probs(i, pred) >= tau && pred == static_cast<std::size_t>(label))
                ++confident_correct[static_cast<std::size_t>(label)];
        }
    }

    std::vector<double> recall(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        if (per_class[c] > 0)
            recall[c] = static_cast<double>(confident_correct[c]) /
                        static_cast<double>(per_class[c]);
    return recall;
}

namespace {

// Shuffled cycling over [0, n): every element is visited once per pass, and a
// batch may span the reshuffle boundary.
class IndexCycler {
public:
    IndexCycler(std::size_t n, Rng& rng) : order_(n), rng_(&rng) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        shuffle(order_, *rng_);
    }

    std::size_t next() {
        if (pos_ == order_.size()) {
            shuffle(order_, *rng_);
            pos_ = 0;
        }
        return order_[pos_++];
    }

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    Rng* rng_;
};

Matrix gather_rows(const Matrix& source, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), source.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < source.cols(); ++j) out(i, j) = source(idx[i], j);
    return out;
}

std::string join_indices(const std::vector<std::size_t>& idx) {
    std::string out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(idx[i]);
    }
    return out;
}

ProportionVector proportions_from_labels(const std::vector<int>& labels, std::size_t k) {
    std::vector<double> p(k, 0.0);
    for (int label : labels) p[static_cast<std::size_t>(label)] += 1.0;
    for (double& v : p) v /= static_cast<double>(labels.size());
    return ProportionVector(std::move(p));
}

template <bool WithProportion>
RunResult train_impl(const ltdata::DatasetSplit& split, const TrainConfig& config) {
    validate_config(config);
    const int k = split.num_classes();
    if (k < 2) throw config_error("train: split must have at least 2 classes");
    for (std::size_t c = 0; c < split.class_counts_labeled().num_classes(); ++c)
        if (split.class_counts_labeled()[c] < 1)
            throw config_error("train: degenerate split, class " + std::to_string(c + 1) +
                               " has no labeled sample");
    if (split.unlabeled().empty()) throw config_error("train: unlabeled pool is empty");
    if (split.validation().empty()) throw config_error("train: validation set is empty");
    if (split.test().empty()) throw config_error("train: test set is empty");

    const Matrix x_labeled = features_of(split.labeled());
    std::vector<int> y_labeled(split.labeled().size());
    for (std::size_t i = 0; i < y_labeled.size(); ++i) y_labeled[i] = split.labeled()[i].label;
    // The loss path sees only this label-stripped view of the unlabeled pool.
    const Matrix x_unlabeled = features_of(split.unlabeled());
    const auto m_unlabeled = static_cast<std::int64_t>(x_unlabeled.rows());

    const ProportionVector q_hat = ProportionVector::from_counts(split.class_counts_labeled());

    RunResult result;
    result.config = config;
    result.true_unlabeled_proportions =
        proportions_from_labels(split.unlabeled_truth(), static_cast<std::size_t>(k));

    Rng init_rng(mix_seed(config.seed, 2));
    nn::ModelParams params =
        nn::init_params(split.feature_dim(), config.hidden, k, init_rng);

    Rng rng(mix_seed(config.seed, 3));
    IndexCycler labeled_cycler(x_labeled.rows(), rng);
    IndexCycler unlabeled_cycler(x_unlabeled.rows(), rng);

    const std::int64_t total_steps =
        static_cast<std::int64_t>(config.epochs) * config.iters_per_epoch;
    const std::size_t batch_u =
        static_cast<std::size_t>(config.labeled_batch) * static_cast<std::size_t>(config.mu);

    const auto record_epoch = [&](int epoch, double sup, double cons, double prop, double mask,
                                  double lr) {
        MetricsRecord rec;
        rec.epoch = epoch;
        rec.loss_sup = sup;
        rec.loss_cons = cons;
        rec.loss_prop = prop;
        rec.mask_rate = mask;
        rec.lr = lr;
        const EvalResult val = evaluate(params, split.validation());
        const EvalResult test = evaluate(params, split.test());
        const std::vector<ltdata::Sample> with_truth = split.unlabeled_with_truth();
        const EvalResult unlabeled = evaluate(params, with_truth);
        rec.val_balanced_accuracy = val.balanced_accuracy;
        rec.test_balanced_accuracy = test.balanced_accuracy;
        rec.test_per_class_recall = test.per_class_recall;
        rec.estimated_unlabeled_proportions = unlabeled.mean_softmax;
        rec.argmax_proportions = unlabeled.argmax_proportions;
        rec.pseudo_label_recall = pseudo_label_recall(params, with_truth, config.tau);
        result.history.push_back(std::move(rec));
    };

    record_epoch(0, 0.0, 0.0, 0.0, 0.0, config.lr0);
    result.best_epoch = 0;
    result.best_validation_accuracy = result.history[0].val_balanced_accuracy;
    result.best_params = params;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double sum_sup = 0.0, sum_cons = 0.0, sum_prop = 0.0, sum_mask = 0.0;
        double last_lr = config.lr0;
        for (int it = 0; it < config.iters_per_epoch; ++it) {
            const std::int64_t step =
                static_cast<std::int64_t>(epoch - 1) * config.iters_per_epoch + it;
            const double lr = nn::cosine_lr(step, total_steps, config.lr0);
            last_lr = lr;

            std::vector<std::size_t> idx_l(static_cast<std::size_t>(config.labeled_batch));
            for (auto& i : idx_l) i = labeled_cycler.next();
            std::vector<std::size_t> idx_u(batch_u);
            for (auto& i : idx_u) i = unlabeled_cycler.next();

            const Matrix xb_labeled = gather_rows(x_labeled, idx_l);
            std::vector<int> yb_labeled(idx_l.size());
            for (std::size_t i = 0; i < idx_l.size(); ++i)
                yb_labeled[i] = y_labeled[idx_l[i]];
            const Matrix xb_unlabeled = gather_rows(x_unlabeled, idx_u);

            const Matrix x_weak = augment_weak(xb_unlabeled, config.weak_noise_sigma, rng);
            const Matrix x_strong = augment_strong(xb_unlabeled, config.strong_noise_sigma,
                                                   config.strong_dropout_rate, rng);

            // The proportion branch; inactive runs must not touch the rng or
            // the hypergeometric machinery so they match a build without it.
            bool prop_active = false;
            ProportionVector target;
            if constexpr (WithProportion) {
                if (config.lambda_prop != 0.0) {
                    target = proportion_target(q_hat, m_unlabeled,
                                               static_cast<std::int64_t>(batch_u),
                                               config.perturb_proportions, rng);
                    prop_active = true;
                }
            }

            const nn::ForwardCache fwd_labeled = nn::forward(params, xb_labeled);
            const nn::ForwardCache fwd_weak = nn::forward(params, x_weak);
            const nn::ForwardCache fwd_strong = nn::forward(params, x_strong);

            const losses::LossOutput sup = losses::supervised_ce(fwd_labeled.logits, yb_labeled);
            const losses::LossOutput cons =
                losses::consistency_loss(fwd_weak.logits, fwd_strong.logits, config.tau);
            losses::LossOutput prop;
            if (prop_active)
                prop = losses::proportion_loss(
                    config.prop_on_strong ? fwd_strong.logits : fwd_weak.logits, target,
                    config.prop_epsilon);

            const losses::CombinedLoss combined =
                losses::combined_loss(sup, cons, prop, config.lambda_u,
                                      prop_active ? config.lambda_prop : 0.0,
                                      config.prop_on_strong);

            const auto state_dump = [&] {
                return " at epoch " + std::to_string(epoch) + " iter " + std::to_string(it) +
                       " (step " + std::to_string(step) + ", lr " + csv::format_double(lr) +
                       "); components sup=" + csv::format_double(sup.value) +
                       " cons=" + csv::format_double(cons.value) +
                       " prop=" + csv::format_double(prop.value) + "; labeled batch [" +
                       join_indices(idx_l) + "]; unlabeled batch [" + join_indices(idx_u) + "]";
            };
            if (!std::isfinite(combined.value))
                throw numeric_error("train: non-finite loss" + state_dump());

            nn::Gradients grads = nn::zero_gradients(params);
            nn::backward(params, fwd_labeled, combined.grad_labeled, grads);
            nn::backward(params, fwd_strong, combined.grad_strong, grads);
            if (prop_active && !config.prop_on_strong)
                nn::backward(params, fwd_weak, combined.grad_weak, grads);
            nn::sgd_step(params, grads, lr, config.momentum, config.weight_decay);
            // A finite loss does not guarantee the update stayed finite (the
            // step itself can overflow); catch that here rather than letting
            // the garbage propagate silently into evaluation.
            if (!all_finite(params.w1) || !all_finite(params.b1) || !all_finite(params.w2) ||
                !all_finite(params.b2))
                throw numeric_error("train: non-finite parameters after update" + state_dump());

            sum_sup += sup.value;
            sum_cons += cons.value;
            sum_prop += prop.value;
            sum_mask += cons.mask_rate;
        }

        const auto iters = static_cast<double>(config.iters_per_epoch);
        record_epoch(epoch, sum_sup / iters, sum_cons / iters, sum_prop / iters,
                     sum_mask / iters, last_lr);
        const MetricsRecord& rec = result.history.back();
        if (rec.val_balanced_accuracy > result.best_validation_accuracy) {
            result.best_epoch = epoch;
            result.best_validation_accuracy = rec.val_balanced_accuracy;
            result.best_params = params;
        }
    }

    result.final_params = std::move(params);
    result.test_accuracy_at_best =
        result.history[static_cast<std::size_t>(result.best_epoch)].test_balanced_accuracy;
    return result;
}

} // namespace

RunResult train(const ltdata::DatasetSplit& split, const TrainConfig& config) {
    return train_impl<true>(split, config);
}

RunResult train_proportion_branch_compiled_out(const ltdata::DatasetSplit& split,
                                               const TrainConfig& config) {
    return train_impl<false>(split, config);
}

ltdata::DatasetSplit build_split(const DataSpec& data, const ltdata::SplitSpec& spec) {
    ltdata::ClassPools pools;
    if (data.source == DataSpec::Source::synthetic) {
        const ClassCounts totals = ltdata::longtail_counts(spec);
        std::int64_t per_class = data.pool_per_class;
        if (per_class == 0)
            per_class = totals[0] + spec.val_per_class + spec.test_per_class;
        Rng pool_rng(mix_seed(spec.seed, 0));
        pools = ltdata::synth_gaussian_mixture(spec.num_classes, data.feature_dim,
                                               data.separation, static_cast<int>(per_class),
                                               pool_rng);
    } else {
        if (data.csv_schema.num_classes != spec.num_classes)
            throw config_error("build_split: csv schema declares " +
                               std::to_string(data.csv_schema.num_classes) +
                               " classes, split spec " + std::to_string(spec.num_classes));
        pools = ltdata::load_csv(data.csv_path, data.csv_schema);
    }
    Rng split_rng(mix_seed(spec.seed, 1));
    return ltdata::make_split(pools, spec, split_rng);
}

namespace {

SeedSummary summarize_run(const RunResult& result) {
    SeedSummary s;
    s.seed = result.config.seed;
    s.best_validation_accuracy = result.best_validation_accuracy;
    s.test_accuracy_at_best = result.test_accuracy_at_best;

    const MetricsRecord& best = result.history[static_cast<std::size_t>(result.best_epoch)];
    const ProportionVector& est = best.estimated_unlabeled_proportions;
    const ProportionVector& truth = result.true_unlabeled_proportions;
    const std::size_t k = truth.num_classes();
    for (std::size_t c = 0; c < k; ++c)
        s.proportion_l1_deviation += std::abs(est[c] - truth[c]);
    // Classes are ordered by construction: 0 is the most major, K-1 the most
    // minor.
    s.minor_signed_deviation = est[k - 1] - truth[k - 1];
    s.minor_pl_recall = best.pseudo_label_recall[k - 1];
    s.major_pl_recall = best.pseudo_label_recall[0];
    return s;
}

} // namespace

Aggregate run_seeds(const DataSpec& data, const ltdata::SplitSpec& split_spec,
                    const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                    const RunCallback& on_run) {
    if (seeds.empty()) throw config_error("run_seeds: at least one seed is required");

    Aggregate agg;
    for (const std::uint64_t seed : seeds) {
        ltdata::SplitSpec spec = split_spec;
        spec.seed = seed;
        TrainConfig cfg = config;
        cfg.seed = seed;
        const ltdata::DatasetSplit split = build_split(data, spec);
        const RunResult result = train(split, cfg);
        agg.per_seed.push_back(summarize_run(result));
        if (on_run) on_run(seed, result);
    }

    const auto n = static_cast<double>(agg.per_seed.size());
    const auto fields = {&SeedSummary::best_validation_accuracy,
                         &SeedSummary::test_accuracy_at_best,
                         &SeedSummary::proportion_l1_deviation,
                         &SeedSummary::minor_signed_deviation, &SeedSummary::minor_pl_recall,
                         &SeedSummary::major_pl_recall};
    for (const auto field : fields) {
        double mean = 0.0;
        for (const SeedSummary& s : agg.per_seed) mean += s.*field;
        mean /= n;
        double var = 0.0;
        for (const SeedSummary& s : agg.per_seed) {
            const double d = s.*field - mean;
            var += d * d;
        }
        agg.mean.*field = mean;
        agg.stdev.*field = std::sqrt(var / n); // population convention
    }
    return agg;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& history) {
    if (history.empty()) throw std::invalid_argument("write_metrics_csv: empty history");
    const std::size_t k = history[0].estimated_unlabeled_proportions.num_classes();

    csv::Table table;
    table.header = {"epoch",     "loss_sup", "loss_cons",   "loss_prop",
                    "mask_rate", "lr",       "val_bal_acc", "test_bal_acc"};
    for (std::size_t c = 1; c <= k; ++c) table.header.push_back("est_prop_" + std::to_string(c));
    for (std::size_t c = 1; c <= k; ++c) table.header.push_back("pl_recall_" + std::to_string(c));

    for (const MetricsRecord& rec : history) {
        std::vector<std::string> row;
        row.reserve(table.header.size());
        row.push_back(std::to_string(rec.epoch));
        row.push_back(csv::format_double(rec.loss_sup));
        row.push_back(csv::format_double(rec.loss_cons));
        row.push_back(csv::format_double(rec.loss_prop));
        row.push_back(csv::format_double(rec.mask_rate));
        row.push_back(csv::format_double(rec.lr));
        row.push_back(csv::format_double(rec.val_balanced_accuracy));
        row.push_back(csv::format_double(rec.test_balanced_accuracy));
        for (std::size_t c = 0; c < k; ++c)
            row.push_back(csv::format_double(rec.estimated_unlabeled_proportions[c]));
        for (std::size_t c = 0; c < k; ++c)
            row.push_back(csv::format_double(rec.pseudo_label_recall[c]));
        table.rows.push_back(std::move(row));
    }
    csv::write(path, table);
}

void write_run_summary(const std::string& path, const RunResult& result) {
    const SeedSummary s = summarize_run(result);
    const MetricsRecord& best = result.history[static_cast<std::size_t>(result.best_epoch)];
    const std::size_t k = result.true_unlabeled_proportions.num_classes();

    std::ofstream os(path);
    if (!os) throw data_error(path + ": cannot open for writing");
    os << "seed=" << result.config.seed << '\n'
       << "epochs=" << result.config.epochs << '\n'
       << "lambda_prop=" << csv::format_double(result.config.lambda_prop) << '\n'
       << "perturb_proportions=" << (result.config.perturb_proportions ? 1 : 0) << '\n'
       << "best_epoch=" << result.best_epoch << '\n'
       << "best_validation_accuracy=" << csv::format_double(result.best_validation_accuracy)
       << '\n'
       << "test_accuracy_at_best=" << csv::format_double(result.test_accuracy_at_best) << '\n'
       << "final_validation_accuracy="
       << csv::format_double(result.history.back().val_balanced_accuracy) << '\n'
       << "final_test_accuracy="
       << csv::format_double(result.history.back().test_balanced_accuracy) << '\n'
       << "prop_l1_deviation_at_best=" << csv::format_double(s.proportion_l1_deviation) << '\n'
       << "minor_signed_deviation_at_best=" << csv::format_double(s.minor_signed_deviation)
       << '\n'
       << "minor_pl_recall_at_best=" << csv::format_double(s.minor_pl_recall) << '\n'
       << "major_pl_recall_at_best=" << csv::format_double(s.major_pl_recall) << '\n';
    for (std::size_t c = 0; c < k; ++c)
        os << "true_prop_" << (c + 1) << '='
           << csv::format_double(result.true_unlabeled_proportions[c]) << '\n';
    for (std::size_t c = 0; c < k; ++c)
        os << "est_prop_best_" << (c + 1) << '='
           << csv::format_double(best.estimated_unlabeled_proportions[c]) << '\n';
    if (!os) throw data_error(path + ": write failed");
}

} // namespace propssl::trainer
