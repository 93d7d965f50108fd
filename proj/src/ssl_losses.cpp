#include "propssl/ssl_losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "propssl/nn.hpp"

namespace propssl::losses {

LossOutput proportion_loss(const Matrix& logits, const ProportionVector& target, double epsilon) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    if (n == 0) throw std::invalid_argument("proportion_loss: empty batch");
    if (target.num_classes() != k)
        throw std::invalid_argument("proportion_loss: target has " +
                                    std::to_string(target.num_classes()) + " classes, logits " +
                                    std::to_string(k));
    if (epsilon < 0.0) throw std::invalid_argument("proportion_loss: epsilon must be >= 0");

    const Matrix probs = nn::softmax(logits);
    std::vector<double> p_hat(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) p_hat[j] += probs(i, j);
    for (double& v : p_hat) v /= static_cast<double>(n);

    LossOutput out;
    // g_l = dL/dp_hat_l = -q_l / (p_hat_l + eps); classes with q_l = 0 drop
    // out of both the value and the gradient.
    std::vector<double> g(k, 0.0);
    for (std::size_t l = 0; l < k; ++l) {
        if (target[l] == 0.0) continue;
        out.value -= target[l] * std::log(p_hat[l] + epsilon);
        g[l] = -target[l] / (p_hat[l] + epsilon);
    }

    // dL/dz_ij = (1/n) * p_ij * (g_j - <g, p_i>), the softmax Jacobian
    // applied to g.
    out.grad_logits = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t l = 0; l < k; ++l) dot += g[l] * probs(i, l);
        for (std::size_t j = 0; j < k; ++j)
            out.grad_logits(i, j) = probs(i, j) * (g[j] - dot) / static_cast<double>(n);
    }
    return out;
}

LossOutput supervised_ce(const Matrix& logits, const std::vector<int>& labels) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    if (n == 0) throw std::invalid_argument("supervised_ce: empty batch");
    if (labels.size() != n)
        throw std::invalid_argument("supervised_ce: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(n) + " rows");

    const Matrix probs = nn::softmax(logits);
    LossOutput out;
    out.grad_logits = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw std::invalid_argument("supervised_ce: label " + std::to_string(y) +
                                        " out of range for K=" + std::to_string(k));
        // -log softmax(z)[y], recomputed stably from the logits.
        double max = logits(i, 0);
        for (std::size_t j = 1; j < k; ++j) max = std::max(max, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(logits(i, j) - max);
        out.value += std::log(sum) - (logits(i, static_cast<std::size_t>(y)) - max);

        for (std::size_t j = 0; j < k; ++j)
            out.grad_logits(i, j) =
                (probs(i, j) - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) /
                static_cast<double>(n);
    }
    out.value /= static_cast<double>(n);
    return out;
}

LossOutput consistency_loss(const Matrix& logits_weak, const Matrix& logits_strong, double tau) {
    const std::size_t n = logits_weak.rows();
    const std::size_t k = logits_weak.cols();
    if (!logits_weak.same_shape(logits_strong))
        throw std::invalid_argument("consistency_loss: weak/strong shape mismatch");
    if (n == 0) throw std::invalid_argument("consistency_loss: empty batch");

    const Matrix probs_weak = nn::softmax(logits_weak);
    const Matrix probs_strong = nn::softmax(logits_strong);

    LossOutput out;
    out.grad_logits = Matrix(n, k);
    out.pseudo_label_counts.assign(k, 0);
    std::size_t masked_in = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t y_hat = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (probs_weak(i, j) > probs_weak(i, y_hat)) y_hat = j;
        if (probs_weak(i, y_hat) < tau) continue; // below threshold: no contribution

        ++masked_in;
        ++out.pseudo_label_counts[y_hat];
        double max = logits_strong(i, 0);
        for (std::size_t j = 1; j < k; ++j) max = std::max(max, logits_strong(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(logits_strong(i, j) - max);
        out.value += std::log(sum) - (logits_strong(i, y_hat) - max);

        for (std::size_t j = 0; j < k; ++j)
            out.grad_logits(i, j) =
                (probs_strong(i, j) - (j == y_hat ? 1.0 : 0.0)) / static_cast<double>(n);
    }
    out.value /= static_cast<double>(n);
    out.mask_rate = static_cast<double>(masked_in) / static_cast<double>(n);
    return out;
}

CombinedLoss combined_loss(const LossOutput& sup, const LossOutput& cons, const LossOutput& prop,
                           double lambda_u, double lambda_prop, bool prop_on_strong) {
    CombinedLoss out;
    out.value = sup.value + lambda_u * cons.value + lambda_prop * prop.value;

    out.grad_labeled = sup.grad_logits;

    out.grad_strong = cons.grad_logits;
    scale_in_place(out.grad_strong, lambda_u);

    Matrix prop_grad = prop.grad_logits;
    scale_in_place(prop_grad, lambda_prop);
    if (prop_on_strong && !prop_grad.empty()) {
        add_in_place(out.grad_strong, prop_grad);
        out.grad_weak = Matrix(cons.grad_logits.rows(), cons.grad_logits.cols());
    } else {
        out.grad_weak = std::move(prop_grad);
    }
    return out;
}

} // namespace propssl::losses
