#pragma once

#include <cstdint>
#include <vector>

#include "propssl/hypergeom.hpp"
#include "propssl/matrix.hpp"

namespace propssl::losses {

// A scalar loss with its analytic gradient wrt the logits it was fed, plus
// whatever diagnostics the loss naturally produces.
struct LossOutput {
    double value = 0.0;
    Matrix grad_logits;                          // same shape as the input logits
    double mask_rate = 0.0;                      // consistency loss only
    std::vector<std::int64_t> pseudo_label_counts; // consistency loss only
};

// Proportion loss: value = -sum_l q_l * log(p_hat_l + epsilon), where p_hat
// is the batch-mean softmax of `logits`. Zero-probability target classes
// contribute nothing. Throws on an empty batch.
LossOutput proportion_loss(const Matrix& logits, const ProportionVector& target, double epsilon);

// Mean cross-entropy of softmax(logits) against 0-based labels.
LossOutput supervised_ce(const Matrix& logits, const std::vector<int>& labels);

// FixMatch-style consistency: hard pseudo-labels from the weak branch
// (argmax, ties to the lowest class index, no gradient through weak), samples
// below confidence tau masked out, mean over the FULL batch size n (not the
// masked count). grad_logits is wrt the strong branch; the weak-branch
// gradient is identically zero by the stop-gradient contract.
LossOutput consistency_loss(const Matrix& logits_weak, const Matrix& logits_strong, double tau);

// value = sup + lambda_u * cons + lambda_prop * prop, gradients scaled per
// branch with the same coefficients. `grad_weak` carries the proportion-loss
// gradient when that loss was computed on the weak branch (the default
// routing); callers that routed it to the strong branch pass prop_on_strong.
struct CombinedLoss {
    double value = 0.0;
    Matrix grad_labeled;
    Matrix grad_strong;
    Matrix grad_weak;
};

CombinedLoss combined_loss(const LossOutput& sup, const LossOutput& cons, const LossOutput& prop,
                           double lambda_u, double lambda_prop, bool prop_on_strong = false);

} // namespace propssl::losses
