// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <doctest.h>

#include "arrivalnet/embedding.hpp"
#include "oracles.hpp"

using namespace arrivalnet;

namespace {

EmbeddingParams random_params(int n_past, int n_future, int channels, int d_model,
                              std::mt19937_64& rng) {
    EmbeddingParams p;
    p.value_kernel = Tensor::from({3, channels, d_model},
                                  oracles::random_vector(static_cast<size_t>(3 * channels * d_model),
                                                         rng, -0.5, 0.5),
                                  true);
    const int total = n_past + n_future;
    p.align = Tensor::from({total, n_past},
                           oracles::random_vector(static_cast<size_t>(total * n_past), rng, -0.5,
                                                  0.5),
                           true);
    p.d_model = d_model;
    p.n_past = n_past;
    p.n_future = n_future;
    return p;
}

}  // namespace

TEST_CASE("positional encoding layout") {
    Tensor pe = positional_encoding(10, 16);
    CHECK(pe.dim(0) == 10);
    CHECK(pe.dim(1) == 16);
    // Channel 0 carries sin(pos) since the j=0 wavelength exponent is zero.
    for (int64_t t = 0; t < 10; ++t) {
        CHECK(pe.at({t, 0}) == doctest::Approx(std::sin(static_cast<double>(t + 1))).epsilon(1e-12));
    }
    for (int64_t t = 0; t < 10; ++t)
        for (int64_t c = 0; c < 16; ++c) {
            CHECK(pe.at({t, c}) <= 1.0);
            CHECK(pe.at({t, c}) >= -1.0);
        }
    // Distinct positions get distinct rows (exhaustive pairwise check).
    for (int64_t a = 0; a < 10; ++a)
        for (int64_t b = a + 1; b < 10; ++b) {
            bool differs = false;
            for (int64_t c = 0; c < 16 && !differs; ++c)
                differs = std::abs(pe.at({a, c}) - pe.at({b, c})) > 1e-12;
            CHECK(differs);
        }
    CHECK_THROWS_AS(positional_encoding(10, 15), ConfigError);
}

TEST_CASE("positional encoding is deterministic") {
    Tensor a = positional_encoding(8, 12);
    Tensor b = positional_encoding(8, 12);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("value encoding is an unbiased conv over time") {
    std::mt19937_64 rng(51);
    EmbeddingParams p = random_params(10, 5, 7, 16, rng);
    Tensor zero = Tensor::zeros({10, 7});
    Tensor ve = value_encoding(zero, p);
    CHECK(ve.dim(0) == 10);
    CHECK(ve.dim(1) == 16);
    for (int64_t i = 0; i < ve.numel(); ++i) CHECK(ve.data()[i] == 0.0);

    // Center-tap delta kernel with Cin == Cout reproduces the input.
    EmbeddingParams id;
    id.d_model = 3;
    id.n_past = 6;
    id.n_future = 2;
    std::vector<double> kv(3 * 3 * 3, 0.0);
    for (int c = 0; c < 3; ++c) kv[static_cast<size_t>((1 * 3 + c) * 3 + c)] = 1.0;
    id.value_kernel = Tensor::from({3, 3, 3}, std::move(kv));
    Tensor x = Tensor::from({6, 3}, oracles::random_vector(18, rng));
    Tensor out = value_encoding(x, id);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK(out.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-12));
}

TEST_CASE("embed with block-identity alignment reproduces VE + PE") {
    std::mt19937_64 rng(53);
    const int n_past = 6, n_future = 3, channels = 5, d_model = 8;
    EmbeddingParams p = random_params(n_past, n_future, channels, d_model, rng);
    // align = [I; 0]: first N_p output rows copy the input rows.
    std::vector<double> av(static_cast<size_t>((n_past + n_future) * n_past), 0.0);
    for (int i = 0; i < n_past; ++i) av[static_cast<size_t>(i * n_past + i)] = 1.0;
    p.align = Tensor::from({n_past + n_future, n_past}, std::move(av));

    Tensor window = Tensor::from({n_past, channels},
                                 oracles::random_vector(static_cast<size_t>(n_past * channels), rng));
    Tensor empty_ctx = Tensor::zeros({n_past, 0});
    Tensor out = embed(window, empty_ctx, p);
    CHECK(out.dim(0) == n_past + n_future);
    CHECK(out.dim(1) == d_model);

    Tensor expect = add(value_encoding(window, p), positional_encoding(n_past, d_model));
    for (int64_t t = 0; t < n_past; ++t)
        for (int64_t c = 0; c < d_model; ++c)
            CHECK(out.at({t, c}) == doctest::Approx(expect.at({t, c})).epsilon(1e-10));
    for (int64_t t = n_past; t < n_past + n_future; ++t)
        for (int64_t c = 0; c < d_model; ++c) CHECK(std::abs(out.at({t, c})) < 1e-12);
}

TEST_CASE("embed output shape matches the reference configuration") {
    std::mt19937_64 rng(59);
    EmbeddingParams p = random_params(10, 10, 7, 16, rng);
    Tensor window = Tensor::from({10, 5}, oracles::random_vector(50, rng));
    Tensor ctx = Tensor::from({10, 2}, oracles::random_vector(20, rng));
    Tensor out = embed(window, ctx, p);
    CHECK(out.dim(0) == 20);
    CHECK(out.dim(1) == 16);
}

TEST_CASE("embed is linear in the value input once PE is subtracted") {
    std::mt19937_64 rng(61);
    EmbeddingParams p = random_params(6, 2, 4, 8, rng);
    Tensor ctx = Tensor::zeros({6, 0});
    Tensor pe_term = embed(Tensor::zeros({6, 4}), ctx, p);
    Tensor a = Tensor::from({6, 4}, oracles::random_vector(24, rng));
    Tensor b = Tensor::from({6, 4}, oracles::random_vector(24, rng));
    Tensor lhs = sub(embed(add(a, b), ctx, p), pe_term);
    Tensor rhs = add(sub(embed(a, ctx, p), pe_term), sub(embed(b, ctx, p), pe_term));
    for (int64_t i = 0; i < lhs.numel(); ++i)
        CHECK(lhs.data()[i] == doctest::Approx(rhs.data()[i]).epsilon(1e-9));
}

TEST_CASE("embed gradient matches finite differences") {
    std::mt19937_64 rng(67);
    EmbeddingParams p = random_params(5, 2, 3, 4, rng);
    Tensor window = Tensor::from({5, 3}, oracles::random_vector(15, rng), true);
    Tensor ctx = Tensor::zeros({5, 0});
    auto run = [&] { return sum(mul(embed(window, ctx, p), embed(window, ctx, p))); };
    backward(run());
    auto forward = [&] { return run().scalar(); };
    for (Tensor leaf : {window, p.value_kernel, p.align}) {
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            const double fd = oracles::finite_difference(leaf, i, forward);
            CHECK(oracles::rel_err(leaf.grad()[i], fd) < 1e-4);
        }
    }
}
