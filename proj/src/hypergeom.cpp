#include "propssl/hypergeom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace propssl {

ClassCounts::ClassCounts(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    for (std::size_t k = 0; k < counts_.size(); ++k) {
        if (counts_[k] < 0)
            throw std::invalid_argument("ClassCounts: negative count at class " +
                                        std::to_string(k + 1));
    }
}

std::int64_t ClassCounts::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

ProportionVector::ProportionVector(std::vector<double> probs) : probs_(std::move(probs)) {
    double sum = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
        const double p = probs_[k];
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("ProportionVector: entry " + std::to_string(k + 1) +
                                        " = " + std::to_string(p) + " outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("ProportionVector: entries sum to " + std::to_string(sum) +
                                    ", not 1");
}

ProportionVector ProportionVector::from_counts(const ClassCounts& counts) {
    const std::int64_t total = counts.total();
    if (total <= 0)
        throw std::invalid_argument("ProportionVector::from_counts: total count must be positive");
    std::vector<double> probs(counts.num_classes());
    for (std::size_t k = 0; k < probs.size(); ++k)
        probs[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    return ProportionVector(std::move(probs));
}

namespace hypergeom {

double log_choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) throw std::invalid_argument("log_choose: k outside [0, n]");
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

ClassCounts population_from_proportions(const ProportionVector& q, std::int64_t m) {
    if (m < 0) throw std::invalid_argument("population_from_proportions: M must be nonnegative");
    const std::size_t k_classes = q.num_classes();
    if (k_classes == 0)
        throw std::invalid_argument("population_from_proportions: empty proportion vector");

    std::vector<std::int64_t> counts(k_classes);
    std::vector<double> fractional(k_classes);
    std::int64_t assigned = 0;
    for (std::size_t k = 0; k < k_classes; ++k) {
        const double exact = static_cast<double>(m) * q[k];
        counts[k] = static_cast<std::int64_t>(std::floor(exact));
        fractional[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }

    // Distribute the leftover units to the largest fractional parts,
    // ties broken by lower class index.
    std::vector<std::size_t> order(k_classes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fractional[a] > fractional[b];
    });
    for (std::int64_t r = 0; r < m - assigned; ++r)
        ++counts[order[static_cast<std::size_t>(r) % k_classes]];

    return ClassCounts(std::move(counts));
}

namespace {

// Count of "marked" items when drawing n from marked + other without
// replacement. Inverse CDF: walk the support from its lower end,
// accumulating PMF values anchored at a log-gamma evaluation.
std::int64_t draw_univariate(std::int64_t marked, std::int64_t other, std::int64_t n, Rng& rng) {
    const std::int64_t lo = std::max<std::int64_t>(0, n - other);
    const std::int64_t hi = std::min(marked, n);
    const double u = rng.uniform(); // consumed even for degenerate supports to keep the stream uniform
    if (lo >= hi) return lo;

    const double log_denom = log_choose(marked + other, n);
    double p = std::exp(log_choose(marked, lo) + log_choose(other, n - lo) - log_denom);
    double cum = p;
    std::int64_t x = lo;
    while (u > cum && x < hi) {
        // pmf(x+1)/pmf(x) for the univariate hypergeometric
        p *= static_cast<double>(marked - x) * static_cast<double>(n - x) /
             (static_cast<double>(x + 1) * static_cast<double>(other - n + x + 1));
        ++x;
        cum += p;
    }
    return x;
}

} // namespace

ClassCounts sample(const ClassCounts& population, std::int64_t n, Rng& rng) {
    const std::int64_t total = population.total();
    if (n < 0 || n > total)
        throw std::invalid_argument("hypergeom::sample: n = " + std::to_string(n) +
                                    " outside [0, " + std::to_string(total) + "]");

    std::vector<std::int64_t> out(population.num_classes(), 0);
    std::int64_t remaining_draw = n;
    std::int64_t remaining_other = total;
    for (std::size_t k = 0; k < population.num_classes(); ++k) {
        remaining_other -= population[k];
        const std::int64_t x = draw_univariate(population[k], remaining_other, remaining_draw, rng);
        out[k] = x;
        remaining_draw -= x;
    }
    return ClassCounts(std::move(out));
}

double pmf(const ClassCounts& population, const ClassCounts& draw) {
    if (population.num_classes() != draw.num_classes())
        throw std::invalid_argument("hypergeom::pmf: class count mismatch");
    for (std::size_t k = 0; k < draw.num_classes(); ++k) {
        if (draw[k] > population[k])
            throw std::invalid_argument("hypergeom::pmf: draw exceeds population at class " +
                                        std::to_string(k + 1));
    }
    const std::int64_t n = draw.total();
    double log_p = -log_choose(population.total(), n);
    for (std::size_t k = 0; k < population.num_classes(); ++k)
        log_p += log_choose(population[k], draw[k]);
    return std::exp(log_p);
}

Moments mean_and_covariance(const ClassCounts& population, std::int64_t n) {
    const std::int64_t m = population.total();
    if (n < 0 || n > m)
        throw std::invalid_argument("hypergeom::mean_and_covariance: n outside [0, M]");

    const std::size_t k_classes = population.num_classes();
    Moments out;
    out.mean.assign(k_classes, 0.0);
    out.covariance = Matrix(k_classes, k_classes, 0.0);
    if (m == 0) return out;

    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k < k_classes; ++k)
        out.mean[k] = dn * static_cast<double>(population[k]) / dm;
    if (m <= 1) return out;

    const double correction = (dm - dn) / (dm - 1.0);
    for (std::size_t l = 0; l < k_classes; ++l) {
        const double pl = static_cast<double>(population[l]) / dm;
        for (std::size_t j = 0; j < k_classes; ++j) {
            const double pj = static_cast<double>(population[j]) / dm;
            const double delta = (l == j) ? 1.0 : 0.0;
            out.covariance(l, j) = dn * pl * (delta - pj) * correction;
        }
    }
    return out;
}

} // namespace hypergeom
} // namespace propssl
