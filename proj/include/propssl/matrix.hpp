#pragma once

#include <cstddef>
#include <vector>

namespace propssl {

// Dense row-major matrix of doubles. Just enough linear algebra for a small
// MLP; no views, no expression templates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// a(m,k) * b(k,n)
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a)(k,m) * b(k,n) -> (m,n)
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// a(m,k) * transpose(b)(k,n) -> (m,n), b given as (n,k)
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

std::vector<double> column_sums(const Matrix& a);

void add_in_place(Matrix& a, const Matrix& b);
void scale_in_place(Matrix& a, double s);
bool all_finite(const Matrix& a);

} // namespace propssl
