#include "propssl/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "propssl/csv.hpp"
#include "propssl/errors.hpp"

namespace propssl::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

double to_double(const std::string& v, const std::string& where) {
    if (v.empty()) throw config_error(where + ": expected a number, got an empty value");
    errno = 0;
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (errno != 0 || end != v.c_str() + v.size())
        throw config_error(where + ": '" + v + "' is not a number");
    return parsed;
}

std::int64_t to_int(const std::string& v, const std::string& where) {
    if (v.empty()) throw config_error(where + ": expected an integer, got an empty value");
    errno = 0;
    char* end = nullptr;
    const long long parsed = std::strtoll(v.c_str(), &end, 10);
    if (errno != 0 || end != v.c_str() + v.size())
        throw config_error(where + ": '" + v + "' is not an integer");
    return parsed;
}

std::uint64_t to_uint(const std::string& v, const std::string& where) {
    const std::int64_t parsed = to_int(v, where);
    if (parsed < 0) throw config_error(where + ": '" + v + "' must be nonnegative");
    return static_cast<std::uint64_t>(parsed);
}

bool to_bool(const std::string& v, const std::string& where) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw config_error(where + ": '" + v + "' is not a boolean (use 0/1/true/false)");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

using Setter =
    std::function<void(ExperimentConfig&, const std::string& value, const std::string& where)>;

const std::map<std::string, Setter>& registry() {
    static const std::map<std::string, Setter> keys = {
        {"data.source",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             if (v == "synthetic")
                 c.data.source = trainer::DataSpec::Source::synthetic;
             else if (v == "csv")
                 c.data.source = trainer::DataSpec::Source::csv;
             else
                 throw config_error(w + ": source must be 'synthetic' or 'csv', got '" + v + "'");
         }},
        {"data.classes",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.split.num_classes = static_cast<int>(to_int(v, w));
         }},
        {"data.feature_dim",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.data.feature_dim = static_cast<int>(to_int(v, w));
         }},
        {"data.separation",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.data.separation = to_double(v, w);
         }},
        {"data.pool_per_class",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.data.pool_per_class = static_cast<int>(to_int(v, w));
         }},
        {"data.csv_path",
         [](ExperimentConfig& c, const std::string& v, const std::string&) {
             c.data.csv_path = v;
         }},
        {"data.csv_label_column",
         [](ExperimentConfig& c, const std::string& v, const std::string&) {
             c.data.csv_schema.label_column = v;
         }},
        {"data.csv_feature_columns",
         [](ExperimentConfig& c, const std::string& v, const std::string&) {
             c.data.csv_schema.feature_columns = split_list(v);
         }},
        {"data.n1",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.split.n1 = to_int(v, w);
         }},
        {"data.gamma",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.split.gamma = to_double(v, w);
         }},
        {"data.beta",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.split.beta = to_double(v, w);
         }},
        {"data.val_per_class",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.split.val_per_class = static_cast<int>(to_int(v, w));
         }},
        {"data.test_per_class",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.split.test_per_class = static_cast<int>(to_int(v, w));
         }},
        {"model.hidden",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.hidden = static_cast<int>(to_int(v, w));
         }},
        {"train.epochs",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.epochs = static_cast<int>(to_int(v, w));
         }},
        {"train.iters_per_epoch",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.iters_per_epoch = static_cast<int>(to_int(v, w));
         }},
        {"train.labeled_batch",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.labeled_batch = static_cast<int>(to_int(v, w));
         }},
        {"train.mu",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.mu = static_cast<int>(to_int(v, w));
         }},
        {"train.lr0",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.lr0 = to_double(v, w);
         }},
        {"train.momentum",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.momentum = to_double(v, w);
         }},
        {"train.weight_decay",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.weight_decay = to_double(v, w);
         }},
        {"train.tau",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.tau = to_double(v, w);
         }},
        {"train.lambda_u",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.lambda_u = to_double(v, w);
         }},
        {"train.lambda_prop",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.lambda_prop = to_double(v, w);
         }},
        {"train.perturb_proportions",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.perturb_proportions = to_bool(v, w);
         }},
        {"train.weak_noise_sigma",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.weak_noise_sigma = to_double(v, w);
         }},
        {"train.strong_noise_sigma",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.strong_noise_sigma = to_double(v, w);
         }},
        {"train.strong_dropout_rate",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.strong_dropout_rate = to_double(v, w);
         }},
        {"train.prop_epsilon",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.prop_epsilon = to_double(v, w);
         }},
        {"train.prop_on_strong",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.prop_on_strong = to_bool(v, w);
         }},
        {"train.variants",
         [](ExperimentConfig& c, const std::string& v, const std::string&) {
             c.variants = split_list(v);
         }},
        {"sweep.lambdas",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.sweep_lambdas.clear();
             for (const std::string& item : split_list(v))
                 c.sweep_lambdas.push_back(to_double(item, w));
         }},
        {"run.seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.seed = to_uint(v, w);
         }},
        {"run.seeds",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.seeds.clear();
             for (const std::string& item : split_list(v)) c.seeds.push_back(to_uint(item, w));
         }},
        {"run.out",
         [](ExperimentConfig& c, const std::string& v, const std::string&) { c.out_dir = v; }},
        {"sample_hg.population",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.hg_population.clear();
             for (const std::string& item : split_list(v))
                 c.hg_population.push_back(to_int(item, w));
         }},
        {"sample_hg.n",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.hg_n = to_int(v, w);
         }},
        {"sample_hg.draws",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.hg_draws = to_int(v, w);
         }},
    };
    return keys;
}

// A key given without a section ("lambda_prop") resolves against the
// registry by suffix; every key's bare name is unique by construction.
std::string resolve_key(const std::string& key, const std::string& where) {
    if (registry().count(key)) return key;
    std::string match;
    for (const auto& [qualified, setter] : registry()) {
        (void)setter;
        const std::size_t dot = qualified.find('.');
        if (qualified.substr(dot + 1) == key) {
            if (!match.empty())
                throw config_error(where + ": key '" + key + "' is ambiguous (" + match +
                                   " vs " + qualified + ")");
            match = qualified;
        }
    }
    if (match.empty()) throw config_error(where + ": unknown key '" + key + "'");
    return match;
}

void apply_key(ExperimentConfig& config, const std::string& section, const std::string& key,
               const std::string& value, const std::string& where) {
    const std::string qualified =
        section.empty() ? resolve_key(key, where) : section + "." + key;
    const auto it = registry().find(qualified);
    if (it == registry().end()) throw config_error(where + ": unknown key '" + qualified + "'");
    it->second(config, value, where);
}

void apply_file(ExperimentConfig& config, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error(path + ": cannot open config file");

    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = path + " line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(where + ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> kSections = {"data",  "model",    "train",
                                                            "sweep", "run", "sample_hg"};
            if (!kSections.count(section))
                throw config_error(where + ": unknown section '[" + section + "]'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(where + ": expected key=value, got '" + line + "'");
        apply_key(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
}

template <typename T>
std::string join_list(const std::vector<T>& items,
                      const std::function<std::string(const T&)>& render) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        out += render(items[i]);
    }
    return out;
}

} // namespace

ExperimentConfig parse_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
    ExperimentConfig config;
    if (!config_path.empty()) apply_file(config, config_path);
    for (const std::string& item : overrides) {
        const std::string where = "--set " + item;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw config_error(where + ": expected key=value");
        std::string key = trim(item.substr(0, eq));
        const std::string value = trim(item.substr(eq + 1));
        // Accept section.key as well as the bare key.
        const std::size_t dot = key.find('.');
        if (dot == std::string::npos)
            apply_key(config, "", key, value, where);
        else
            apply_key(config, key.substr(0, dot), key.substr(dot + 1), value, where);
    }
    return config;
}

void validate(const ExperimentConfig& config) {
    ltdata::longtail_counts(config.split); // range checks + N_K >= 1
    trainer::validate_config(config.train);

    if (config.data.source == trainer::DataSpec::Source::synthetic) {
        if (config.data.feature_dim < 2)
            throw config_error("config: feature_dim must be >= 2 for synthetic data");
        if (config.data.separation < 0.0)
            throw config_error("config: separation must be >= 0");
        if (config.data.pool_per_class < 0)
            throw config_error("config: pool_per_class must be >= 0");
    } else {
        if (config.data.csv_path.empty())
            throw config_error("config: source=csv requires csv_path");
        if (!std::filesystem::exists(config.data.csv_path))
            throw config_error("config: csv_path '" + config.data.csv_path + "' does not exist");
        if (config.data.csv_schema.feature_columns.empty())
            throw config_error("config: source=csv requires csv_feature_columns");
    }

    if (config.variants.empty()) throw config_error("config: variants must be non-empty");
    std::set<std::string> seen;
    for (const std::string& v : config.variants) {
        if (v != "baseline" && v != "fixed" && v != "perturbed")
            throw config_error("config: unknown variant '" + v +
                               "' (expected baseline, fixed, or perturbed)");
        if (!seen.insert(v).second)
            throw config_error("config: variant '" + v + "' listed twice");
        if (v != "baseline" && config.train.lambda_prop <= 0.0)
            throw config_error("config: variant '" + v + "' requires lambda_prop > 0");
    }

    if (config.sweep_lambdas.empty()) throw config_error("config: sweep lambdas must be non-empty");
    for (const double l : config.sweep_lambdas)
        if (l < 0.0) throw config_error("config: sweep lambdas must be >= 0");

    if (config.seeds.empty()) throw config_error("config: seeds must be non-empty");

    if (config.hg_population.empty())
        throw config_error("config: sample_hg population must be non-empty");
    std::int64_t total = 0;
    for (const std::int64_t c : config.hg_population) {
        if (c < 0) throw config_error("config: sample_hg population counts must be >= 0");
        total += c;
    }
    if (config.hg_n < 0 || config.hg_n > total)
        throw config_error("config: sample_hg n must be in [0, population total]");
    if (config.hg_draws < 0) throw config_error("config: sample_hg draws must be >= 0");
}

std::string render_config(const ExperimentConfig& config) {
    const auto fd = [](double v) { return csv::format_double(v); };
    std::ostringstream os;
    os << "[data]\n"
       << "source=" << (config.data.source == trainer::DataSpec::Source::synthetic ? "synthetic"
                                                                                   : "csv")
       << '\n'
       << "classes=" << config.split.num_classes << '\n'
       << "feature_dim=" << config.data.feature_dim << '\n'
       << "separation=" << fd(config.data.separation) << '\n'
       << "pool_per_class=" << config.data.pool_per_class << '\n'
       << "csv_path=" << config.data.csv_path << '\n'
       << "csv_label_column=" << config.data.csv_schema.label_column << '\n'
       << "csv_feature_columns="
       << join_list<std::string>(config.data.csv_schema.feature_columns,
                                 [](const std::string& s) { return s; })
       << '\n'
       << "n1=" << config.split.n1 << '\n'
       << "gamma=" << fd(config.split.gamma) << '\n'
       << "beta=" << fd(config.split.beta) << '\n'
       << "val_per_class=" << config.split.val_per_class << '\n'
       << "test_per_class=" << config.split.test_per_class << '\n'
       << "\n[model]\n"
       << "hidden=" << config.train.hidden << '\n'
       << "\n[train]\n"
       << "epochs=" << config.train.epochs << '\n'
       << "iters_per_epoch=" << config.train.iters_per_epoch << '\n'
       << "labeled_batch=" << config.train.labeled_batch << '\n'
       << "mu=" << config.train.mu << '\n'
       << "lr0=" << fd(config.train.lr0) << '\n'
       << "momentum=" << fd(config.train.momentum) << '\n'
       << "weight_decay=" << fd(config.train.weight_decay) << '\n'
       << "tau=" << fd(config.train.tau) << '\n'
       << "lambda_u=" << fd(config.train.lambda_u) << '\n'
       << "lambda_prop=" << fd(config.train.lambda_prop) << '\n'
       << "perturb_proportions=" << (config.train.perturb_proportions ? 1 : 0) << '\n'
       << "weak_noise_sigma=" << fd(config.train.weak_noise_sigma) << '\n'
       << "strong_noise_sigma=" << fd(config.train.strong_noise_sigma) << '\n'
       << "strong_dropout_rate=" << fd(config.train.strong_dropout_rate) << '\n'
       << "prop_epsilon=" << fd(config.train.prop_epsilon) << '\n'
       << "prop_on_strong=" << (config.train.prop_on_strong ? 1 : 0) << '\n'
       << "variants="
       << join_list<std::string>(config.variants, [](const std::string& s) { return s; }) << '\n'
       << "\n[sweep]\n"
       << "lambdas=" << join_list<double>(config.sweep_lambdas, fd) << '\n'
       << "\n[run]\n"
       << "seed=" << config.seed << '\n'
       << "seeds="
       << join_list<std::uint64_t>(config.seeds,
                                   [](const std::uint64_t& s) { return std::to_string(s); })
       << '\n'
       << "out=" << config.out_dir << '\n'
       << "\n[sample_hg]\n"
       << "population="
       << join_list<std::int64_t>(config.hg_population,
                                  [](const std::int64_t& c) { return std::to_string(c); })
       << '\n'
       << "n=" << config.hg_n << '\n'
       << "draws=" << config.hg_draws << '\n';
    return os.str();
}

void write_resolved(const ExperimentConfig& config, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error(path + ": cannot open for writing");
    os << render_config(config);
    if (!os) throw data_error(path + ": write failed");
}

trainer::TrainConfig variant_config(const ExperimentConfig& config, const std::string& variant) {
    trainer::TrainConfig out = config.train;
    if (variant == "baseline") {
        out.lambda_prop = 0.0;
        out.perturb_proportions = false;
    } else if (variant == "fixed") {
        out.perturb_proportions = false;
    } else if (variant == "perturbed") {
        out.perturb_proportions = true;
    } else {
        throw config_error("unknown variant '" + variant + "'");
    }
    return out;
}

} // namespace propssl::cli
