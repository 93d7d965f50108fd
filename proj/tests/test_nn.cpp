#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "propssl/errors.hpp"
#include "propssl/nn.hpp"
#include "propssl/rng.hpp"

using namespace propssl;

namespace {

nn::ModelParams tiny_2x2x2() {
    nn::ModelParams p;
    p.w1 = Matrix(2, 2);
    p.w1(0, 0) = 1.0;
    p.w1(1, 1) = 1.0;
    p.b1 = Matrix(1, 2);
    p.b1(0, 0) = 0.5;
    p.b1(0, 1) = -0.5;
    p.w2 = Matrix(2, 2);
    p.w2(0, 0) = 1.0;
    p.w2(0, 1) = 2.0;
    p.w2(1, 0) = 3.0;
    p.w2(1, 1) = 4.0;
    p.b2 = Matrix(1, 2);
    p.b2(0, 0) = 0.1;
    p.b2(0, 1) = 0.2;
    p.vw1 = Matrix(2, 2);
    p.vb1 = Matrix(1, 2);
    p.vw2 = Matrix(2, 2);
    p.vb2 = Matrix(1, 2);
    return p;
}

double total_abs(const Matrix& m) {
    double s = 0.0;
    for (const double v : m.data()) s += std::abs(v);
    return s;
}

} // namespace

TEST_CASE("forward") {
    SUBCASE("zero params give zero logits and uniform softmax") {
        Rng rng(1);
        nn::ModelParams p = nn::init_params(3, 4, 5, rng);
        p.w1 = Matrix(3, 4);
        p.w2 = Matrix(4, 5);
        Matrix x(2, 3);
        x(0, 0) = 1.0;
        x(1, 2) = -2.0;
        const nn::ForwardCache cache = nn::forward(p, x);
        CHECK(total_abs(cache.logits) == 0.0);
        const Matrix probs = nn::softmax(cache.logits);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                CHECK(probs(i, j) == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("empty batch gives empty logits") {
        const nn::ModelParams p = tiny_2x2x2();
        const nn::ForwardCache cache = nn::forward(p, Matrix(0, 2));
        CHECK(cache.logits.rows() == 0);
    }
    SUBCASE("hand-evaluated tiny net") {
        // hidden = relu((1,0) + (0.5,-0.5)) = (1.5, 0)
        // logits = (1.5*1 + 0.1, 1.5*2 + 0.2) = (1.6, 3.2)
        const nn::ModelParams p = tiny_2x2x2();
        Matrix x(1, 2);
        x(0, 0) = 1.0;
        const nn::ForwardCache cache = nn::forward(p, x);
        CHECK(cache.logits(0, 0) == doctest::Approx(1.6).epsilon(1e-15));
        CHECK(cache.logits(0, 1) == doctest::Approx(3.2).epsilon(1e-15));
        CHECK(cache.hidden(0, 0) == doctest::Approx(1.5));
        CHECK(cache.hidden(0, 1) == 0.0);
    }
    SUBCASE("dimension mismatch rejected") {
        const nn::ModelParams p = tiny_2x2x2();
        CHECK_THROWS_AS(nn::forward(p, Matrix(1, 3)), std::invalid_argument);
    }
}

TEST_CASE("softmax") {
    SUBCASE("uniform logits") {
        Matrix z(1, 3);
        const Matrix p = nn::softmax(z);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(p(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
    SUBCASE("large logits do not overflow") {
        Matrix z(1, 2);
        z(0, 0) = 1000.0;
        const Matrix p = nn::softmax(z);
        CHECK(std::isfinite(p(0, 0)));
        CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p(0, 1) >= 0.0);
    }
    SUBCASE("frozen hand case") {
        Matrix z(1, 2);
        z(0, 0) = 1.0;
        z(0, 1) = 2.0;
        const Matrix p = nn::softmax(z);
        CHECK(p(0, 0) == doctest::Approx(0.2689414213699951).epsilon(1e-14));
        CHECK(p(0, 1) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    }
    SUBCASE("rows sum to one up to magnitude 1e3") {
        Rng rng(2);
        Matrix z(50, 6);
        for (double& v : z.data()) v = (rng.uniform() * 2.0 - 1.0) * 1000.0;
        const Matrix p = nn::softmax(z);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) sum += p(i, j);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("backward") {
    SUBCASE("zero upstream gradient gives zero parameter gradients") {
        const nn::ModelParams p = tiny_2x2x2();
        Matrix x(3, 2, 0.7);
        const nn::ForwardCache cache = nn::forward(p, x);
        nn::Gradients g = nn::zero_gradients(p);
        nn::backward(p, cache, Matrix(3, 2), g);
        CHECK(total_abs(g.w1) == 0.0);
        CHECK(total_abs(g.b1) == 0.0);
        CHECK(total_abs(g.w2) == 0.0);
        CHECK(total_abs(g.b2) == 0.0);
    }
    SUBCASE("matches central finite differences") {
        Rng rng(7);
        const int d = 3, h = 4, k = 3, n = 3;
        nn::ModelParams params = nn::init_params(d, h, k, rng);
        Matrix x(n, d);
        for (double& v : x.data()) v = rng.gaussian();
        Matrix weights(n, k); // random linear functional of the logits
        for (double& v : weights.data()) v = rng.gaussian();

        const auto loss = [&]() {
            const nn::ForwardCache cache = nn::forward(params, x);
            double s = 0.0;
            for (std::size_t i = 0; i < cache.logits.rows(); ++i)
                for (std::size_t j = 0; j < cache.logits.cols(); ++j)
                    s += weights(i, j) * cache.logits(i, j);
            return s;
        };

        const nn::ForwardCache cache = nn::forward(params, x);
        nn::Gradients analytic = nn::zero_gradients(params);
        nn::backward(params, cache, weights, analytic);

        const auto check_tensor = [&](Matrix& tensor, const Matrix& grad) {
            for (std::size_t i = 0; i < tensor.rows(); ++i)
                for (std::size_t j = 0; j < tensor.cols(); ++j) {
                    const double fd = oracle::central_diff(
                        [&](double v) {
                            const double orig = tensor(i, j);
                            tensor(i, j) = v;
                            const double out = loss();
                            tensor(i, j) = orig;
                            return out;
                        },
                        tensor(i, j));
                    CHECK(oracle::rel_err(fd, grad(i, j)) < 1e-4);
                }
        };
        check_tensor(params.w1, analytic.w1);
        check_tensor(params.b1, analytic.b1);
        check_tensor(params.w2, analytic.w2);
        check_tensor(params.b2, analytic.b2);
    }
    SUBCASE("duplicated sample doubles its contribution") {
        Rng rng(8);
        nn::ModelParams params = nn::init_params(2, 3, 2, rng);
        Matrix one(1, 2);
        one(0, 0) = 0.3;
        one(0, 1) = -1.1;
        Matrix two(2, 2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) two(i, j) = one(0, j);

        Matrix g1(1, 2);
        g1(0, 0) = 0.25;
        g1(0, 1) = -0.5;
        Matrix g2(2, 2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) g2(i, j) = g1(0, j);

        nn::Gradients a = nn::zero_gradients(params);
        nn::backward(params, nn::forward(params, one), g1, a);
        nn::Gradients b = nn::zero_gradients(params);
        nn::backward(params, nn::forward(params, two), g2, b);
        for (std::size_t i = 0; i < a.w1.size(); ++i)
            CHECK(b.w1.data()[i] == doctest::Approx(2.0 * a.w1.data()[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < a.w2.size(); ++i)
            CHECK(b.w2.data()[i] == doctest::Approx(2.0 * a.w2.data()[i]).epsilon(1e-12));
    }
    SUBCASE("accumulates across calls") {
        Rng rng(9);
        nn::ModelParams params = nn::init_params(2, 3, 2, rng);
        Matrix x(2, 2, 0.4);
        Matrix g(2, 2, 0.1);
        const nn::ForwardCache cache = nn::forward(params, x);
        nn::Gradients once = nn::zero_gradients(params);
        nn::backward(params, cache, g, once);
        nn::Gradients twice = nn::zero_gradients(params);
        nn::backward(params, cache, g, twice);
        nn::backward(params, cache, g, twice);
        for (std::size_t i = 0; i < once.w1.size(); ++i)
            CHECK(twice.w1.data()[i] == doctest::Approx(2.0 * once.w1.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("sgd_step") {
    SUBCASE("lr=0 leaves params bit-identical, buffers updated") {
        nn::ModelParams p = tiny_2x2x2();
        const Matrix w1_before = p.w1;
        nn::Gradients g = nn::zero_gradients(p);
        g.w1(0, 0) = 1.0;
        nn::sgd_step(p, g, 0.0, 0.9, 0.0);
        CHECK(p.w1.data() == w1_before.data());
        CHECK(p.vw1(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("plain gradient descent when momentum and decay are off") {
        nn::ModelParams p = tiny_2x2x2();
        nn::Gradients g = nn::zero_gradients(p);
        g.w2(1, 0) = 2.0;
        g.b2(0, 1) = -1.0;
        nn::sgd_step(p, g, 0.1, 0.0, 0.0);
        CHECK(p.w2(1, 0) == doctest::Approx(3.0 - 0.1 * 2.0).epsilon(1e-15));
        CHECK(p.b2(0, 1) == doctest::Approx(0.2 + 0.1).epsilon(1e-12));
    }
    SUBCASE("momentum unrolls to 1.9x on the second step") {
        nn::ModelParams p = tiny_2x2x2();
        nn::Gradients g = nn::zero_gradients(p);
        g.w1(0, 0) = 1.0;
        const double before = p.w1(0, 0);
        nn::sgd_step(p, g, 0.01, 0.9, 0.0);
        const double after_one = p.w1(0, 0);
        CHECK(before - after_one == doctest::Approx(0.01).epsilon(1e-12));
        nn::sgd_step(p, g, 0.01, 0.9, 0.0);
        CHECK(after_one - p.w1(0, 0) == doctest::Approx(0.01 * 1.9).epsilon(1e-12));
    }
    SUBCASE("weight decay shrinks weights, never biases") {
        nn::ModelParams p = tiny_2x2x2();
        const double w_before = total_abs(p.w1) + total_abs(p.w2);
        const Matrix b1_before = p.b1, b2_before = p.b2;
        const nn::Gradients g = nn::zero_gradients(p);
        nn::sgd_step(p, g, 0.1, 0.0, 0.01);
        CHECK(total_abs(p.w1) + total_abs(p.w2) < w_before);
        CHECK(p.b1.data() == b1_before.data());
        CHECK(p.b2.data() == b2_before.data());
    }
}

TEST_CASE("cosine_lr") {
    CHECK(nn::cosine_lr(0, 100, 0.03) == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(nn::cosine_lr(100, 100, 0.03) == doctest::Approx(0.0));
    CHECK(nn::cosine_lr(50, 100, 0.03) == doctest::Approx(0.015).epsilon(1e-12));
    CHECK_THROWS_AS(nn::cosine_lr(-1, 100, 0.03), std::invalid_argument);
    CHECK_THROWS_AS(nn::cosine_lr(101, 100, 0.03), std::invalid_argument);
    CHECK_THROWS_AS(nn::cosine_lr(0, 0, 0.03), std::invalid_argument);
}

TEST_CASE("init_params") {
    Rng rng(42);
    const nn::ModelParams p = nn::init_params(20, 64, 6, rng);
    const double a1 = std::sqrt(6.0 / (20 + 64));
    const double a2 = std::sqrt(6.0 / (64 + 6));
    for (const double v : p.w1.data()) {
        CHECK(v >= -a1);
        CHECK(v <= a1);
    }
    for (const double v : p.w2.data()) {
        CHECK(v >= -a2);
        CHECK(v <= a2);
    }
    CHECK(total_abs(p.b1) == 0.0);
    CHECK(total_abs(p.b2) == 0.0);
    CHECK(total_abs(p.vw1) == 0.0);

    Rng rng2(42);
    const nn::ModelParams q = nn::init_params(20, 64, 6, rng2);
    CHECK(p.w1.data() == q.w1.data());
    CHECK(p.w2.data() == q.w2.data());

    Rng rng3(43);
    const nn::ModelParams r = nn::init_params(20, 64, 6, rng3);
    CHECK(p.w1.data() != r.w1.data());
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const std::string dir = oracle::fresh_dir("checkpoint");
    Rng rng(5);
    nn::ModelParams p = nn::init_params(4, 3, 2, rng);
    p.vw1(0, 0) = 0.125; // buffers must survive the round trip too
    p.vb2(0, 1) = -3.5e-7;
    const std::string path = dir + "/model.txt";
    nn::save_checkpoint(path, p, 77, 3000);

    const nn::Checkpoint loaded = nn::load_checkpoint(path);
    CHECK(loaded.seed == 77);
    CHECK(loaded.step == 3000);
    CHECK(loaded.params.w1.data() == p.w1.data());
    CHECK(loaded.params.b1.data() == p.b1.data());
    CHECK(loaded.params.w2.data() == p.w2.data());
    CHECK(loaded.params.b2.data() == p.b2.data());
    CHECK(loaded.params.vw1.data() == p.vw1.data());
    CHECK(loaded.params.vb2.data() == p.vb2.data());

    // saving the loaded params reproduces the file byte for byte
    nn::save_checkpoint(dir + "/model2.txt", loaded.params, 77, 3000);
    CHECK(oracle::read_file(dir + "/model2.txt") == oracle::read_file(path));

    SUBCASE("corrupt file rejected") {
        std::ofstream(dir + "/bad.txt") << "not a checkpoint\n";
        CHECK_THROWS_AS(nn::load_checkpoint(dir + "/bad.txt"), data_error);
        CHECK_THROWS_AS(nn::load_checkpoint(dir + "/absent.txt"), data_error);
    }
}
