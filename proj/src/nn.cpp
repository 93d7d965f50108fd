#include "propssl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "propssl/csv.hpp"
#include "propssl/errors.hpp"

namespace propssl::nn {

namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (double& v : m.data()) v = a * (2.0 * rng.uniform() - 1.0);
    return m;
}

} // namespace

ModelParams init_params(int feature_dim, int hidden, int num_classes, Rng& rng) {
    if (feature_dim < 1 || hidden < 1 || num_classes < 2)
        throw std::invalid_argument("init_params: need d >= 1, h >= 1, K >= 2");
    const auto d = static_cast<std::size_t>(feature_dim);
    const auto h = static_cast<std::size_t>(hidden);
    const auto k = static_cast<std::size_t>(num_classes);

    ModelParams p;
    p.w1 = uniform_init(d, h, rng);
    p.b1 = Matrix(1, h);
    p.w2 = uniform_init(h, k, rng);
    p.b2 = Matrix(1, k);
    p.vw1 = Matrix(d, h);
    p.vb1 = Matrix(1, h);
    p.vw2 = Matrix(h, k);
    p.vb2 = Matrix(1, k);
    return p;
}

ForwardCache forward(const ModelParams& params, const Matrix& input) {
    if (input.cols() != params.w1.rows())
        throw std::invalid_argument("forward: input has " + std::to_string(input.cols()) +
                                    " features, model expects " +
                                    std::to_string(params.w1.rows()));

    ForwardCache cache;
    cache.input = input;

    cache.hidden = matmul(input, params.w1);
    for (std::size_t i = 0; i < cache.hidden.rows(); ++i)
        for (std::size_t j = 0; j < cache.hidden.cols(); ++j) {
            double z = cache.hidden(i, j) + params.b1(0, j);
            cache.hidden(i, j) = z > 0.0 ? z : 0.0;
        }

    cache.logits = matmul(cache.hidden, params.w2);
    for (std::size_t i = 0; i < cache.logits.rows(); ++i)
        for (std::size_t j = 0; j < cache.logits.cols(); ++j)
            cache.logits(i, j) += params.b2(0, j);

    return cache;
}

Matrix softmax(const Matrix& logits) {
    Matrix probs(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < logits.cols(); ++j) max = std::max(max, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            probs(i, j) = std::exp(logits(i, j) - max);
            sum += probs(i, j);
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) probs(i, j) /= sum;
    }
    return probs;
}

Gradients zero_gradients(const ModelParams& params) {
    Gradients g;
    g.w1 = Matrix(params.w1.rows(), params.w1.cols());
    g.b1 = Matrix(1, params.b1.cols());
    g.w2 = Matrix(params.w2.rows(), params.w2.cols());
    g.b2 = Matrix(1, params.b2.cols());
    return g;
}

void backward(const ModelParams& params, const ForwardCache& cache, const Matrix& grad_logits,
              Gradients& out) {
    if (!grad_logits.same_shape(cache.logits))
        throw std::invalid_argument("backward: grad_logits shape mismatch");

    // Output layer.
    add_in_place(out.w2, matmul_at_b(cache.hidden, grad_logits));
    const std::vector<double> gb2 = column_sums(grad_logits);
    for (std::size_t j = 0; j < gb2.size(); ++j) out.b2(0, j) += gb2[j];

    // Through the rectifier: hidden > 0 <=> pre-activation > 0.
    Matrix grad_hidden = matmul_a_bt(grad_logits, params.w2);
    for (std::size_t i = 0; i < grad_hidden.rows(); ++i)
        for (std::size_t j = 0; j < grad_hidden.cols(); ++j)
            if (cache.hidden(i, j) <= 0.0) grad_hidden(i, j) = 0.0;

    add_in_place(out.w1, matmul_at_b(cache.input, grad_hidden));
    const std::vector<double> gb1 = column_sums(grad_hidden);
    for (std::size_t j = 0; j < gb1.size(); ++j) out.b1(0, j) += gb1[j];
}

namespace {

void sgd_update(Matrix& param, Matrix& buffer, const Matrix& grad, double lr, double momentum,
                double weight_decay) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double d = grad.data()[i] + weight_decay * param.data()[i];
        buffer.data()[i] = momentum * buffer.data()[i] + d;
        param.data()[i] -= lr * buffer.data()[i];
    }
}

} // namespace

void sgd_step(ModelParams& params, const Gradients& grads, double lr, double momentum,
              double weight_decay) {
    sgd_update(params.w1, params.vw1, grads.w1, lr, momentum, weight_decay);
    sgd_update(params.b1, params.vb1, grads.b1, lr, momentum, 0.0);
    sgd_update(params.w2, params.vw2, grads.w2, lr, momentum, weight_decay);
    sgd_update(params.b2, params.vb2, grads.b2, lr, momentum, 0.0);
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0) {
    if (total_steps < 1) throw std::invalid_argument("cosine_lr: total_steps must be >= 1");
    if (step < 0 || step > total_steps)
        throw std::invalid_argument("cosine_lr: step out of [0, total_steps]");
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

constexpr const char* kMagic = "propssl checkpoint v1";

void write_tensor(std::ostream& os, const char* name, const Matrix& m) {
    os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0) os << ' ';
            os << csv::format_double(m(i, j));
        }
        os << '\n';
    }
}

std::int64_t read_kv(std::istream& is, const std::string& key, const std::string& path) {
    std::string line;
    if (!std::getline(is, line))
        throw data_error(path + ": truncated checkpoint, expected '" + key + "='");
    const std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0)
        throw data_error(path + ": expected '" + key + "=', got '" + line + "'");
    return csv::parse_int(line.substr(prefix.size()), path + " key " + key);
}

Matrix read_tensor(std::istream& is, const std::string& name, const std::string& path) {
    std::string line;
    if (!std::getline(is, line))
        throw data_error(path + ": truncated checkpoint, expected tensor " + name);
    std::istringstream header(line);
    std::string word, got_name;
    std::size_t rows = 0, cols = 0;
    if (!(header >> word >> got_name >> rows >> cols) || word != "tensor" || got_name != name)
        throw data_error(path + ": expected 'tensor " + name + " <rows> <cols>', got '" + line +
                         "'");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(is, line))
            throw data_error(path + ": truncated tensor " + name);
        std::istringstream row(line);
        std::string cell;
        for (std::size_t j = 0; j < cols; ++j) {
            if (!(row >> cell))
                throw data_error(path + ": tensor " + name + " row " + std::to_string(i) +
                                 " has fewer than " + std::to_string(cols) + " values");
            m(i, j) = csv::parse_double(cell, path + " tensor " + name);
        }
        if (row >> cell)
            throw data_error(path + ": tensor " + name + " row " + std::to_string(i) +
                             " has more than " + std::to_string(cols) + " values");
    }
    return m;
}

} // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, std::uint64_t seed,
                     std::int64_t step) {
    std::ofstream os(path);
    if (!os) throw data_error(path + ": cannot open for writing");
    os << kMagic << '\n'
       << "feature_dim=" << params.feature_dim() << '\n'
       << "hidden=" << params.hidden() << '\n'
       << "classes=" << params.num_classes() << '\n'
       << "seed=" << seed << '\n'
       << "step=" << step << '\n';
    write_tensor(os, "w1", params.w1);
    write_tensor(os, "b1", params.b1);
    write_tensor(os, "w2", params.w2);
    write_tensor(os, "b2", params.b2);
    write_tensor(os, "vw1", params.vw1);
    write_tensor(os, "vb1", params.vb1);
    write_tensor(os, "vw2", params.vw2);
    write_tensor(os, "vb2", params.vb2);
    if (!os) throw data_error(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error(path + ": cannot open checkpoint");
    std::string line;
    if (!std::getline(is, line) || line != kMagic)
        throw data_error(path + ": not a checkpoint file (bad magic line)");

    const std::int64_t d = read_kv(is, "feature_dim", path);
    const std::int64_t h = read_kv(is, "hidden", path);
    const std::int64_t k = read_kv(is, "classes", path);
    Checkpoint ckpt;
    ckpt.seed = static_cast<std::uint64_t>(read_kv(is, "seed", path));
    ckpt.step = read_kv(is, "step", path);

    auto expect_shape = [&](const Matrix& m, std::size_t rows, std::size_t cols,
                            const char* name) {
        if (m.rows() != rows || m.cols() != cols)
            throw data_error(path + ": tensor " + name + " shape disagrees with manifest");
    };
    const auto du = static_cast<std::size_t>(d);
    const auto hu = static_cast<std::size_t>(h);
    const auto ku = static_cast<std::size_t>(k);

    ckpt.params.w1 = read_tensor(is, "w1", path);
    ckpt.params.b1 = read_tensor(is, "b1", path);
    ckpt.params.w2 = read_tensor(is, "w2", path);
    ckpt.params.b2 = read_tensor(is, "b2", path);
    ckpt.params.vw1 = read_tensor(is, "vw1", path);
    ckpt.params.vb1 = read_tensor(is, "vb1", path);
    ckpt.params.vw2 = read_tensor(is, "vw2", path);
    ckpt.params.vb2 = read_tensor(is, "vb2", path);

    expect_shape(ckpt.params.w1, du, hu, "w1");
    expect_shape(ckpt.params.b1, 1, hu, "b1");
    expect_shape(ckpt.params.w2, hu, ku, "w2");
    expect_shape(ckpt.params.b2, 1, ku, "b2");
    expect_shape(ckpt.params.vw1, du, hu, "vw1");
    expect_shape(ckpt.params.vb1, 1, hu, "vb1");
    expect_shape(ckpt.params.vw2, hu, ku, "vw2");
    expect_shape(ckpt.params.vb2, 1, ku, "vb2");
    return ckpt;
}

} // namespace propssl::nn
