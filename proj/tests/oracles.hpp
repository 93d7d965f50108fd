#pragma once

// Test oracles, deliberately independent of the library implementations they
// check: Pascal-triangle binomials, exhaustive hypergeometric enumeration,
// central finite differences, a small dense linear solver, and file helpers
// for byte-identity assertions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

// C(n, k) by Pascal's triangle; exact in double for the small n used in tests.
inline double choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    std::vector<double> row{1.0};
    for (std::int64_t i = 1; i <= n; ++i) {
        std::vector<double> next(static_cast<std::size_t>(i) + 1, 1.0);
        for (std::int64_t j = 1; j < i; ++j)
            next[static_cast<std::size_t>(j)] =
                row[static_cast<std::size_t>(j - 1)] + row[static_cast<std::size_t>(j)];
        row = std::move(next);
    }
    return row[static_cast<std::size_t>(k)];
}

// Every per-class count vector that takes exactly n items from the population.
inline std::vector<std::vector<std::int64_t>> enumerate_draws(
    const std::vector<std::int64_t>& population, std::int64_t n) {
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> cur;
    const std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t idx,
                                                                   std::int64_t left) {
        if (idx == population.size()) {
            if (left == 0) out.push_back(cur);
            return;
        }
        for (std::int64_t c = 0; c <= std::min(population[idx], left); ++c) {
            cur.push_back(c);
            rec(idx + 1, left - c);
            cur.pop_back();
        }
    };
    rec(0, n);
    return out;
}

// Multivariate hypergeometric pmf straight from the definition.
inline double hypergeom_pmf(const std::vector<std::int64_t>& population,
                            const std::vector<std::int64_t>& draw) {
    std::int64_t m = 0, n = 0;
    double numerator = 1.0;
    for (std::size_t i = 0; i < population.size(); ++i) {
        m += population[i];
        n += draw[i];
        numerator *= choose(population[i], draw[i]);
    }
    return numerator / choose(m, n);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Gaussian elimination with partial pivoting, for tiny well-posed systems.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (std::abs(a[col][col]) < 1e-12) throw std::runtime_error("oracle::solve: singular");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("oracle::read_file: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

// A clean per-test scratch directory under the system temp root.
inline std::string fresh_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("propssl_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

} // namespace oracle
