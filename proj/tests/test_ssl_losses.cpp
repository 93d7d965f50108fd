#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "oracles.hpp"
#include "propssl/hypergeom.hpp"
#include "propssl/nn.hpp"
#include "propssl/rng.hpp"
#include "propssl/ssl_losses.hpp"

using namespace propssl;
using losses::LossOutput;

namespace {

// Logit rows whose softmax equals the given probability rows.
Matrix logits_for(const std::vector<std::vector<double>>& probs) {
    Matrix z(probs.size(), probs[0].size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (std::size_t j = 0; j < probs[i].size(); ++j) z(i, j) = std::log(probs[i][j]);
    return z;
}

Matrix random_logits(std::size_t n, std::size_t k, Rng& rng, double scale = 2.0) {
    Matrix z(n, k);
    for (double& v : z.data()) v = rng.gaussian() * scale;
    return z;
}

void check_grad_matches_fd(Matrix& logits, const Matrix& analytic,
                           const std::function<double()>& value) {
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            const double fd = oracle::central_diff(
                [&](double v) {
                    const double orig = logits(i, j);
                    logits(i, j) = v;
                    const double out = value();
                    logits(i, j) = orig;
                    return out;
                },
                logits(i, j));
            CHECK(oracle::rel_err(fd, analytic(i, j)) < 1e-4);
        }
}

} // namespace

TEST_CASE("proportion_loss values") {
    SUBCASE("perfect one-hot match is zero") {
        Matrix z(3, 2);
        for (std::size_t i = 0; i < 3; ++i) z(i, 0) = 50.0; // softmax ~ (1, 2e-22)
        const LossOutput out =
            losses::proportion_loss(z, ProportionVector({1.0, 0.0}), 0.0);
        CHECK(out.value == doctest::Approx(0.0));
    }
    SUBCASE("uniform everything is ln K") {
        const Matrix z(4, 10); // all-zero logits: uniform softmax
        const LossOutput out = losses::proportion_loss(
            z, ProportionVector(std::vector<double>(10, 0.1)), 0.0);
        CHECK(out.value == doctest::Approx(2.302585092994046).epsilon(1e-12));
    }
    SUBCASE("frozen two-sample case") {
        // batch probs {(0.9,0.1),(0.5,0.5)} -> p_hat = (0.7, 0.3)
        Matrix z = logits_for({{0.9, 0.1}, {0.5, 0.5}});
        const LossOutput out =
            losses::proportion_loss(z, ProportionVector({0.7, 0.3}), 0.0);
        CHECK(out.value == doctest::Approx(0.6108643020548935).epsilon(1e-12));
    }
    SUBCASE("zero-probability target classes contribute nothing") {
        Matrix z = logits_for({{0.25, 0.25, 0.5}});
        const LossOutput with_zero =
            losses::proportion_loss(z, ProportionVector({1.0, 0.0, 0.0}), 0.0);
        CHECK(with_zero.value == doctest::Approx(-std::log(0.25)).epsilon(1e-12));
        // the p_hat entries of the zero-target classes never enter the value
        Matrix z2 = logits_for({{0.25, 0.5, 0.25}});
        const LossOutput other =
            losses::proportion_loss(z2, ProportionVector({1.0, 0.0, 0.0}), 0.0);
        CHECK(other.value == doctest::Approx(with_zero.value).epsilon(1e-12));
    }
    SUBCASE("empty batch rejected") {
        CHECK_THROWS_AS(
            losses::proportion_loss(Matrix(0, 2), ProportionVector({0.5, 0.5}), 1e-8),
            std::invalid_argument);
    }
}

TEST_CASE("proportion_loss is bounded below by the target entropy") {
    Rng rng(31);
    const double eps = 1e-8;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.uniform_int(4);
        std::vector<double> q(k);
        double total = 0.0;
        for (double& v : q) {
            v = rng.uniform() + 0.05;
            total += v;
        }
        for (double& v : q) v /= total;
        const ProportionVector target(q);

        double entropy = 0.0;
        for (const double v : q) entropy -= v * std::log(v + eps);

        // random predictions never beat the entropy (Gibbs), ...
        Matrix z = random_logits(1 + rng.uniform_int(8), k, rng);
        const LossOutput random_out = losses::proportion_loss(z, target, eps);
        CHECK(random_out.value >= entropy - 1e-6);

        // ... and predictions matching the target attain it
        std::vector<std::vector<double>> exact_rows(3, q);
        Matrix zq = logits_for(exact_rows);
        const LossOutput at_target = losses::proportion_loss(zq, target, eps);
        CHECK(at_target.value == doctest::Approx(entropy).epsilon(1e-9));
    }
}

TEST_CASE("proportion_loss gradient") {
    Rng rng(32);
    SUBCASE("matches finite differences") {
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t k = 2 + rng.uniform_int(4);   // K <= 5
            const std::size_t n = 1 + rng.uniform_int(8);   // batch <= 8
            std::vector<double> q(k);
            double total = 0.0;
            for (double& v : q) {
                v = rng.uniform() + 0.02;
                total += v;
            }
            for (double& v : q) v /= total;
            if (trial % 3 == 0) { // exercise the q_l = 0 skip path
                const double removed = q[k - 1];
                q[k - 1] = 0.0;
                for (std::size_t c = 0; c + 1 < k; ++c) q[c] /= 1.0 - removed;
            }
            const ProportionVector target(q);
            Matrix z = random_logits(n, k, rng);
            const LossOutput out = losses::proportion_loss(z, target, 1e-8);
            check_grad_matches_fd(z, out.grad_logits,
                                  [&]() { return losses::proportion_loss(z, target, 1e-8).value; });
        }
    }
    SUBCASE("zero-target classes with finite differences") {
        Matrix z = random_logits(4, 3, rng);
        const ProportionVector target({0.6, 0.4, 0.0});
        const LossOutput out = losses::proportion_loss(z, target, 1e-8);
        check_grad_matches_fd(z, out.grad_logits,
                              [&]() { return losses::proportion_loss(z, target, 1e-8).value; });
    }
    SUBCASE("invariant under batch permutation") {
        Matrix z = random_logits(5, 3, rng);
        Matrix perm(5, 3);
        const std::size_t order[5] = {3, 0, 4, 1, 2};
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 3; ++j) perm(i, j) = z(order[i], j);
        const ProportionVector target({0.2, 0.5, 0.3});
        const LossOutput a = losses::proportion_loss(z, target, 1e-8);
        const LossOutput b = losses::proportion_loss(perm, target, 1e-8);
        CHECK(a.value == doctest::Approx(b.value).epsilon(1e-14));
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(a.grad_logits(order[i], j) ==
                      doctest::Approx(b.grad_logits(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("supervised_ce") {
    SUBCASE("uniform logits give ln K") {
        const Matrix z(3, 4);
        const LossOutput out = losses::supervised_ce(z, {0, 1, 3});
        CHECK(out.value == doctest::Approx(1.3862943611198906).epsilon(1e-12));
    }
    SUBCASE("saturated correct logit drives the loss to zero") {
        Matrix z(1, 3);
        z(0, 1) = 50.0;
        const LossOutput out = losses::supervised_ce(z, {1});
        CHECK(out.value < 1e-12);
    }
    SUBCASE("frozen two-sample case") {
        Matrix z(2, 2);
        z(0, 0) = 1.0;
        z(0, 1) = 2.0; // -log softmax(1,2)[1] = 0.31326168751822286
        const LossOutput out = losses::supervised_ce(z, {1, 0});
        CHECK(out.value == doctest::Approx(0.5032044340390841).epsilon(1e-12));
    }
    SUBCASE("gradient is (p - onehot)/n and matches finite differences") {
        Rng rng(33);
        Matrix z = random_logits(4, 3, rng);
        const std::vector<int> labels = {2, 0, 1, 0};
        const LossOutput out = losses::supervised_ce(z, labels);
        const Matrix probs = nn::softmax(z);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                const double expected =
                    (probs(i, j) - (static_cast<int>(j) == labels[i] ? 1.0 : 0.0)) / 4.0;
                CHECK(out.grad_logits(i, j) == doctest::Approx(expected).epsilon(1e-12));
            }
        check_grad_matches_fd(z, out.grad_logits,
                              [&]() { return losses::supervised_ce(z, labels).value; });
    }
    SUBCASE("bad input rejected") {
        CHECK_THROWS_AS(losses::supervised_ce(Matrix(0, 2), {}), std::invalid_argument);
        CHECK_THROWS_AS(losses::supervised_ce(Matrix(2, 2), {0}), std::invalid_argument);
        CHECK_THROWS_AS(losses::supervised_ce(Matrix(1, 2), {2}), std::invalid_argument);
        CHECK_THROWS_AS(losses::supervised_ce(Matrix(1, 2), {-1}), std::invalid_argument);
    }
}

TEST_CASE("consistency_loss") {
    SUBCASE("tau above one masks everything") {
        Rng rng(34);
        Matrix weak = random_logits(4, 3, rng);
        Matrix strong = random_logits(4, 3, rng);
        const LossOutput out = losses::consistency_loss(weak, strong, 1.01);
        CHECK(out.value == 0.0);
        CHECK(out.mask_rate == 0.0);
        double grad_abs = 0.0;
        for (const double v : out.grad_logits.data()) grad_abs += std::abs(v);
        CHECK(grad_abs == 0.0);
        for (const std::int64_t c : out.pseudo_label_counts) CHECK(c == 0);
    }
    SUBCASE("self-consistency still penalizes soft predictions") {
        Matrix z = logits_for({{0.96, 0.04}});
        const LossOutput out = losses::consistency_loss(z, z, 0.95);
        CHECK(out.value == doctest::Approx(-std::log(0.96)).epsilon(1e-12));
        CHECK(out.value > 0.0);
        CHECK(out.mask_rate == 1.0);
    }
    SUBCASE("frozen half-masked case uses the full-batch denominator") {
        // row 0: weak max prob 0.9526 >= 0.9 -> pseudo-label 0
        // row 1: weak max prob 0.5498 <  0.9 -> masked out
        Matrix weak(2, 2);
        weak(0, 0) = 3.0;
        weak(1, 0) = 0.2;
        Matrix strong(2, 2);
        strong(0, 0) = 1.0;
        strong(0, 1) = 2.0;
        const LossOutput out = losses::consistency_loss(weak, strong, 0.9);
        // CE(strong row 0 vs class 0) = 1.3132616875182228, divided by n = 2
        CHECK(out.value == doctest::Approx(0.6566308437591114).epsilon(1e-12));
        CHECK(out.mask_rate == doctest::Approx(0.5));
        REQUIRE(out.pseudo_label_counts.size() == 2);
        CHECK(out.pseudo_label_counts[0] == 1);
        CHECK(out.pseudo_label_counts[1] == 0);
        // masked row's gradient is zero
        CHECK(out.grad_logits(1, 0) == 0.0);
        CHECK(out.grad_logits(1, 1) == 0.0);
    }
    SUBCASE("argmax ties break to the lowest class index") {
        Matrix weak(1, 2);
        weak(0, 0) = 2.0;
        weak(0, 1) = 2.0;
        Matrix strong(1, 2);
        strong(0, 1) = 5.0;
        const LossOutput out = losses::consistency_loss(weak, strong, 0.0);
        // pseudo-label 0, so the strong row pays the big cross-entropy
        CHECK(out.value == doctest::Approx(std::log(1.0 + std::exp(5.0))).epsilon(1e-12));
        CHECK(out.pseudo_label_counts[0] == 1);
        CHECK(out.pseudo_label_counts[1] == 0);
    }
    SUBCASE("strong-branch gradient matches finite differences") {
        Rng rng(35);
        Matrix weak = random_logits(6, 4, rng);
        Matrix strong = random_logits(6, 4, rng);
        const LossOutput out = losses::consistency_loss(weak, strong, 0.5);
        CHECK(out.mask_rate > 0.0); // make sure the case is non-trivial
        check_grad_matches_fd(strong, out.grad_logits, [&]() {
            return losses::consistency_loss(weak, strong, 0.5).value;
        });
    }
    SUBCASE("weak branch is stop-gradient") {
        // finite differences through the weak branch must vanish: the value
        // depends on weak only via the discrete argmax/mask
        Rng rng(36);
        Matrix weak = random_logits(5, 3, rng);
        Matrix strong = random_logits(5, 3, rng);
        for (std::size_t i = 0; i < weak.rows(); ++i)
            for (std::size_t j = 0; j < weak.cols(); ++j) {
                const double fd = oracle::central_diff(
                    [&](double v) {
                        const double orig = weak(i, j);
                        weak(i, j) = v;
                        const double out = losses::consistency_loss(weak, strong, 0.5).value;
                        weak(i, j) = orig;
                        return out;
                    },
                    weak(i, j), 1e-7);
                CHECK(fd == 0.0);
            }
    }
    SUBCASE("mask rate equals the confident fraction") {
        Rng rng(37);
        Matrix weak = random_logits(40, 4, rng);
        Matrix strong = random_logits(40, 4, rng);
        const double tau = 0.6;
        const Matrix probs = nn::softmax(weak);
        int confident = 0;
        for (std::size_t i = 0; i < 40; ++i) {
            double best = 0.0;
            for (std::size_t j = 0; j < 4; ++j) best = std::max(best, probs(i, j));
            if (best >= tau) ++confident;
        }
        const LossOutput out = losses::consistency_loss(weak, strong, tau);
        CHECK(out.mask_rate == doctest::Approx(confident / 40.0).epsilon(1e-12));
    }
    SUBCASE("paired-row permutation invariance") {
        Rng rng(38);
        Matrix weak = random_logits(5, 3, rng);
        Matrix strong = random_logits(5, 3, rng);
        const std::size_t order[5] = {4, 2, 0, 3, 1};
        Matrix pweak(5, 3), pstrong(5, 3);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                pweak(i, j) = weak(order[i], j);
                pstrong(i, j) = strong(order[i], j);
            }
        const LossOutput a = losses::consistency_loss(weak, strong, 0.5);
        const LossOutput b = losses::consistency_loss(pweak, pstrong, 0.5);
        CHECK(a.value == doctest::Approx(b.value).epsilon(1e-14));
        CHECK(a.mask_rate == b.mask_rate);
    }
    SUBCASE("shape mismatch and empty batch rejected") {
        CHECK_THROWS_AS(losses::consistency_loss(Matrix(2, 3), Matrix(3, 3), 0.5),
                        std::invalid_argument);
        CHECK_THROWS_AS(losses::consistency_loss(Matrix(0, 3), Matrix(0, 3), 0.5),
                        std::invalid_argument);
    }
}

TEST_CASE("combined_loss") {
    Rng rng(39);
    Matrix labeled = random_logits(3, 3, rng);
    Matrix weak = random_logits(6, 3, rng);
    Matrix strong = random_logits(6, 3, rng);
    const ProportionVector target({0.5, 0.3, 0.2});
    const LossOutput sup = losses::supervised_ce(labeled, {0, 1, 2});
    const LossOutput cons = losses::consistency_loss(weak, strong, 0.5);
    const LossOutput prop = losses::proportion_loss(weak, target, 1e-8);

    SUBCASE("value is the weighted sum") {
        const losses::CombinedLoss out = losses::combined_loss(sup, cons, prop, 1.0, 0.5);
        CHECK(out.value ==
              doctest::Approx(sup.value + cons.value + 0.5 * prop.value).epsilon(1e-14));
        LossOutput unit_sup, unit_cons, unit_prop;
        unit_sup.value = unit_cons.value = unit_prop.value = 1.0;
        CHECK(losses::combined_loss(unit_sup, unit_cons, unit_prop, 1.0, 0.5).value ==
              doctest::Approx(2.5).epsilon(1e-15));
    }
    SUBCASE("lambda_prop = 0 recovers the baseline objective") {
        const losses::CombinedLoss out = losses::combined_loss(sup, cons, prop, 1.0, 0.0);
        CHECK(out.value == doctest::Approx(sup.value + cons.value).epsilon(1e-14));
        for (const double v : out.grad_weak.data()) CHECK(v == 0.0);
    }
    SUBCASE("lambda_u = 0 and lambda_prop = 0 is supervised-only") {
        const losses::CombinedLoss out = losses::combined_loss(sup, cons, prop, 0.0, 0.0);
        CHECK(out.value == doctest::Approx(sup.value).epsilon(1e-14));
        for (const double v : out.grad_strong.data()) CHECK(v == 0.0);
    }
    SUBCASE("prop-branch gradient is linear in lambda_prop") {
        const losses::CombinedLoss a = losses::combined_loss(sup, cons, prop, 1.0, 0.25);
        const losses::CombinedLoss b = losses::combined_loss(sup, cons, prop, 1.0, 0.75);
        for (std::size_t i = 0; i < a.grad_weak.size(); ++i)
            CHECK(b.grad_weak.data()[i] ==
                  doctest::Approx(3.0 * a.grad_weak.data()[i]).epsilon(1e-12));
    }
    SUBCASE("prop_on_strong routes the proportion gradient to the strong branch") {
        const LossOutput prop_strong = losses::proportion_loss(strong, target, 1e-8);
        const losses::CombinedLoss out =
            losses::combined_loss(sup, cons, prop_strong, 1.0, 0.5, true);
        for (std::size_t i = 0; i < out.grad_strong.rows(); ++i)
            for (std::size_t j = 0; j < out.grad_strong.cols(); ++j)
                CHECK(out.grad_strong(i, j) ==
                      doctest::Approx(cons.grad_logits(i, j) +
                                      0.5 * prop_strong.grad_logits(i, j))
                          .epsilon(1e-12));
        for (const double v : out.grad_weak.data()) CHECK(v == 0.0);
    }
    SUBCASE("inactive proportion branch leaves grad_weak empty") {
        const LossOutput inactive; // value 0, no gradient
        const losses::CombinedLoss out = losses::combined_loss(sup, cons, inactive, 1.0, 0.0);
        CHECK(out.grad_weak.empty());
        const losses::CombinedLoss strong_routed =
            losses::combined_loss(sup, cons, inactive, 1.0, 0.0, true);
        CHECK(strong_routed.grad_strong.rows() == 6); // unchanged by the empty prop grad
    }
}
