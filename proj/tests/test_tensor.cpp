// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <doctest.h>

#include "arrivalnet/tensor.hpp"
#include "oracles.hpp"

using namespace arrivalnet;

TEST_CASE("matmul basics") {
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor b = Tensor::from({2, 2}, {5, 6, 7, 8});
    Tensor out = matmul(eye, b);
    CHECK(out.at({0, 0}) == 5);
    CHECK(out.at({0, 1}) == 6);
    CHECK(out.at({1, 0}) == 7);
    CHECK(out.at({1, 1}) == 8);

    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor ones = Tensor::from({2, 1}, {1, 1});
    Tensor prod = matmul(a, ones);
    CHECK(prod.at({0, 0}) == 3);
    CHECK(prod.at({1, 0}) == 7);

    CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
    std::mt19937_64 rng(11);
    Tensor a = Tensor::from({3, 4}, oracles::random_vector(12, rng), true);
    Tensor b = Tensor::from({4, 2}, oracles::random_vector(8, rng), true);
    Tensor loss = sum(matmul(a, b));
    backward(loss);
    auto forward = [&] { return sum(matmul(a, b)).scalar(); };
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double fd = oracles::finite_difference(a, i, forward);
        CHECK(oracles::rel_err(a.grad()[i], fd) < 1e-6);
    }
    for (int64_t i = 0; i < b.numel(); ++i) {
        const double fd = oracles::finite_difference(b, i, forward);
        CHECK(oracles::rel_err(b.grad()[i], fd) < 1e-6);
    }
}

TEST_CASE("softmax values and invariants") {
    Tensor x = Tensor::from({2}, {0, 0});
    Tensor s = softmax(x, 0);
    CHECK(s.at({0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.at({1}) == doctest::Approx(0.5).epsilon(1e-12));

    Tensor y = Tensor::from({2}, {0.0, std::log(3.0)});
    Tensor sy = softmax(y, 0);
    CHECK(sy.at({0}) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sy.at({1}) == doctest::Approx(0.75).epsilon(1e-12));

    // Shift invariance and unit row sums.
    std::mt19937_64 rng(3);
    Tensor z = Tensor::from({4, 5}, oracles::random_vector(20, rng));
    Tensor shifted = add_scalar(z, 17.25);
    Tensor sz = softmax(z, 1);
    Tensor ss = softmax(shifted, 1);
    for (int64_t i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int64_t j = 0; j < 5; ++j) {
            row += sz.at({i, j});
            CHECK(sz.at({i, j}) == doctest::Approx(ss.at({i, j})).epsilon(1e-12));
        }
        CHECK(std::abs(row - 1.0) < 1e-12);
    }
}

TEST_CASE("layer_norm values") {
    Tensor gain = Tensor::full({3}, 1.0);
    Tensor bias = Tensor::zeros({3});
    Tensor constant = Tensor::from({1, 3}, {4, 4, 4});
    Tensor out = layer_norm(constant, gain, bias, 1e-5);
    for (int64_t j = 0; j < 3; ++j) CHECK(std::abs(out.at({0, j})) < 1e-9);

    Tensor g2 = Tensor::full({2}, 1.0);
    Tensor b2 = Tensor::zeros({2});
    Tensor two = Tensor::from({1, 2}, {1, 3});
    Tensor o2 = layer_norm(two, g2, b2, 1e-12);
    CHECK(o2.at({0, 0}) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(o2.at({0, 1}) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("layer_norm gradient vs finite differences") {
    std::mt19937_64 rng(5);
    Tensor x = Tensor::from({3, 4}, oracles::random_vector(12, rng), true);
    Tensor gain = Tensor::from({4}, oracles::random_vector(4, rng, 0.5, 1.5), true);
    Tensor bias = Tensor::from({4}, oracles::random_vector(4, rng), true);
    Tensor w = Tensor::from({3, 4}, oracles::random_vector(12, rng));
    auto run = [&] { return sum(mul(w, layer_norm(x, gain, bias, 1e-5))); };
    backward(run());
    auto forward = [&] { return run().scalar(); };
    for (Tensor leaf : {x, gain, bias}) {
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            const double fd = oracles::finite_difference(leaf, i, forward);
            CHECK(oracles::rel_err(leaf.grad()[i], fd) < 1e-5);
        }
    }
}

TEST_CASE("conv2d_same identity, box sum, shape preservation") {
    std::mt19937_64 rng(7);
    Tensor x = Tensor::from({4, 5, 1}, oracles::random_vector(20, rng));
    Tensor delta = Tensor::from({1, 1, 1, 1}, {1.0});
    Tensor same = conv2d_same(x, delta);
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 5; ++j)
            CHECK(same.at({i, j, 0}) == doctest::Approx(x.at({i, j, 0})).epsilon(1e-12));

    Tensor c = Tensor::full({4, 5, 1}, 2.5);
    Tensor ones = Tensor::full({3, 3, 1, 1}, 1.0);
    Tensor box = conv2d_same(c, ones);
    for (int64_t i = 1; i < 3; ++i)
        for (int64_t j = 1; j < 4; ++j)
            CHECK(box.at({i, j, 0}) == doctest::Approx(9 * 2.5).epsilon(1e-12));

    for (int k : {1, 3, 5}) {
        Tensor kr = Tensor::zeros({k, k, 1, 1});
        Tensor out = conv2d_same(x, kr);
        CHECK(out.dim(0) == 4);
        CHECK(out.dim(1) == 5);
    }
    CHECK_THROWS_AS(conv2d_same(x, Tensor::zeros({2, 2, 1, 1})), ConfigError);
}

TEST_CASE("conv gradients vs finite differences") {
    std::mt19937_64 rng(13);
    Tensor x = Tensor::from({3, 4, 2}, oracles::random_vector(24, rng), true);
    Tensor k = Tensor::from({3, 3, 2, 2}, oracles::random_vector(36, rng), true);
    auto run = [&] { return sum(conv2d_same(x, k)); };
    backward(run());
    auto forward = [&] { return run().scalar(); };
    for (Tensor leaf : {x, k}) {
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            const double fd = oracles::finite_difference(leaf, i, forward);
            CHECK(oracles::rel_err(leaf.grad()[i], fd) < 1e-4);
        }
    }

    Tensor x1 = Tensor::from({5, 3}, oracles::random_vector(15, rng), true);
    Tensor k1 = Tensor::from({3, 3, 2}, oracles::random_vector(18, rng), true);
    auto run1 = [&] { return sum(conv1d_same(x1, k1)); };
    backward(run1());
    auto forward1 = [&] { return run1().scalar(); };
    for (Tensor leaf : {x1, k1}) {
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            const double fd = oracles::finite_difference(leaf, i, forward1);
            CHECK(oracles::rel_err(leaf.grad()[i], fd) < 1e-4);
        }
    }
}

TEST_CASE("gelu values and gradient") {
    Tensor zero = Tensor::from({1}, {0.0});
    CHECK(gelu(zero).at({0}) == 0.0);

    // Bounded below by the known minimum (~-0.17 near x = -0.75), monotone
    // for non-negative inputs, and asymptotically identity / zero.
    double prev = -1e300;
    for (int i = 0; i <= 100; ++i) {
        const double v = -5.0 + 0.1 * i;
        const double g = gelu(Tensor::from({1}, {v})).at({0});
        CHECK(g > -0.2);
        if (v >= 0.0) {
            CHECK(g >= prev - 1e-12);
            prev = g;
        }
    }
    CHECK(gelu(Tensor::from({1}, {8.0})).at({0}) == doctest::Approx(8.0).epsilon(1e-9));
    CHECK(std::abs(gelu(Tensor::from({1}, {-8.0})).at({0})) < 1e-9);

    std::mt19937_64 rng(17);
    Tensor x = Tensor::from({8}, oracles::random_vector(8, rng), true);
    auto run = [&] { return sum(gelu(x)); };
    backward(run());
    auto forward = [&] { return run().scalar(); };
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double fd = oracles::finite_difference(x, i, forward);
        CHECK(oracles::rel_err(x.grad()[i], fd) < 1e-5);
    }
}

TEST_CASE("backward basics") {
    Tensor x = Tensor::from({1}, {3.0}, true);
    Tensor loss = mul(x, x);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));

    // A detached constant receives no gradient.
    Tensor c = Tensor::from({1}, {2.0});
    Tensor y = Tensor::from({1}, {1.0}, true);
    backward(mul(c, y));
    CHECK_FALSE(c.has_grad());
    CHECK(y.grad()[0] == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(backward(Tensor::zeros({2})), ContractError);
}

TEST_CASE("backward on shared subexpressions matches duplicated-subgraph oracle") {
    // loss = f(u) + g(u) with u shared must equal the sum of gradients of the
    // same graph built twice from independent copies of the leaf.
    std::mt19937_64 rng(23);
    auto vals = oracles::random_vector(6, rng);
    Tensor x = Tensor::from({2, 3}, vals, true);
    Tensor u = gelu(x);
    backward(add(sum(mul(u, u)), sum(u)));
    std::vector<double> shared_grad(x.grad().begin(), x.grad().end());

    Tensor x1 = Tensor::from({2, 3}, vals, true);
    Tensor x2 = Tensor::from({2, 3}, vals, true);
    backward(sum(mul(gelu(x1), gelu(x1))));
    backward(sum(gelu(x2)));
    for (int64_t i = 0; i < x.numel(); ++i) {
        CHECK(shared_grad[static_cast<size_t>(i)] ==
              doctest::Approx(x1.grad()[i] + x2.grad()[i]).epsilon(1e-10));
    }
}

TEST_CASE("elementwise ops finite-difference sweep") {
    std::mt19937_64 rng(29);
    Tensor a = Tensor::from({3, 3}, oracles::random_vector(9, rng), true);
    Tensor b = Tensor::from({3, 3}, oracles::random_vector(9, rng), true);
    auto run = [&] {
        Tensor h = elementwise_hypot(a, b);
        Tensor sm = softmax(add(h, mul(a, b)), 1);
        return sum(mul(sm, sub(a, scale(b, 0.5))));
    };
    backward(run());
    auto forward = [&] { return run().scalar(); };
    for (Tensor leaf : {a, b}) {
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            const double fd = oracles::finite_difference(leaf, i, forward);
            CHECK(oracles::rel_err(leaf.grad()[i], fd) < 1e-4);
        }
    }
}

TEST_CASE("take gathers, pads with zeros and scatter-adds backward") {
    Tensor x = Tensor::from({4}, {10, 20, 30, 40}, true);
    Tensor out = take(x, {5}, {3, -1, 0, 0, 2});
    CHECK(out.at({0}) == 40);
    CHECK(out.at({1}) == 0);
    CHECK(out.at({2}) == 10);
    CHECK(out.at({4}) == 30);
    backward(sum(out));
    CHECK(x.grad()[0] == 2.0);  // gathered twice
    CHECK(x.grad()[1] == 0.0);
    CHECK(x.grad()[2] == 1.0);
    CHECK(x.grad()[3] == 1.0);
    CHECK_THROWS_AS(take(x, {2}, {0, 4}), IndexError);
}

TEST_CASE("mean_squared_error and weighted_sum gradients") {
    std::mt19937_64 rng(31);
    Tensor p = Tensor::from({5}, oracles::random_vector(5, rng), true);
    Tensor t = Tensor::from({5}, oracles::random_vector(5, rng));
    backward(mean_squared_error(p, t));
    auto forward = [&] { return mean_squared_error(p, t).scalar(); };
    for (int64_t i = 0; i < 5; ++i) {
        CHECK(oracles::rel_err(p.grad()[i], oracles::finite_difference(p, i, forward)) < 1e-6);
    }

    Tensor y0 = Tensor::from({2, 2}, oracles::random_vector(4, rng), true);
    Tensor y1 = Tensor::from({2, 2}, oracles::random_vector(4, rng), true);
    Tensor w = Tensor::from({2}, {0.25, 0.75}, true);
    std::vector<Tensor> ys{y0, y1};
    auto runw = [&] { return sum(mul(weighted_sum(ys, w), weighted_sum(ys, w))); };
    backward(runw());
    auto forwardw = [&] { return runw().scalar(); };
    for (Tensor leaf : {y0, y1, w}) {
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            const double fd = oracles::finite_difference(leaf, i, forwardw);
            CHECK(oracles::rel_err(leaf.grad()[i], fd) < 1e-5);
        }
    }
}

TEST_CASE("NoGradGuard suppresses tape recording") {
    Tensor x = Tensor::from({1}, {2.0}, true);
    {
        NoGradGuard ng;
        Tensor y = mul(x, x);
        CHECK_FALSE(y.requires_grad());
    }
    Tensor z = mul(x, x);
    CHECK(z.requires_grad());
}
