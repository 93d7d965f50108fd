#pragma once

#include <cstdint>
#include <vector>

#include "propssl/matrix.hpp"
#include "propssl/rng.hpp"

namespace propssl {

// Nonnegative per-class sample counts.
class ClassCounts {
public:
    ClassCounts() = default;
    explicit ClassCounts(std::vector<std::int64_t> counts);

    std::size_t num_classes() const { return counts_.size(); }
    std::int64_t operator[](std::size_t k) const { return counts_[k]; }
    std::int64_t total() const;
    const std::vector<std::int64_t>& counts() const { return counts_; }

private:
    std::vector<std::int64_t> counts_;
};

// Point on the (K-1)-simplex: entries in [0,1] summing to 1 within 1e-9.
class ProportionVector {
public:
    ProportionVector() = default;
    explicit ProportionVector(std::vector<double> probs);

    // counts normalized by their total; total must be positive.
    static ProportionVector from_counts(const ClassCounts& counts);

    std::size_t num_classes() const { return probs_.size(); }
    double operator[](std::size_t k) const { return probs_[k]; }
    const std::vector<double>& probs() const { return probs_; }

private:
    std::vector<double> probs_;
};

namespace hypergeom {

// Integer population of size M whose composition follows q: largest-remainder
// rounding of M*q_l, remaining units to the largest fractional parts, ties to
// the lower class index. Counts sum to M exactly.
ClassCounts population_from_proportions(const ProportionVector& q, std::int64_t m);

// Draw n items without replacement; exact multivariate hypergeometric via
// sequential conditional univariate draws (inverse CDF over log-PMF).
ClassCounts sample(const ClassCounts& population, std::int64_t n, Rng& rng);

// P(draw | population, n = draw.total()) = prod_l C(c_l, k_l) / C(M, n),
// evaluated in log space.
double pmf(const ClassCounts& population, const ClassCounts& draw);

struct Moments {
    std::vector<double> mean;
    Matrix covariance;
};

// Closed-form moments of the n-draw count vector. Covariance is all-zero for
// populations of size <= 1.
Moments mean_and_covariance(const ClassCounts& population, std::int64_t n);

// log C(n, k) via lgamma; requires 0 <= k <= n.
double log_choose(std::int64_t n, std::int64_t k);

} // namespace hypergeom
} // namespace propssl
