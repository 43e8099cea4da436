// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/embedding.hpp"

#include <cmath>

namespace arrivalnet {

Tensor positional_encoding(int n_past, int d_model) {
    if (d_model % 2 != 0) {
        throw ConfigError("positional_encoding: d_model must be even, got " + std::to_string(d_model));
    }
    std::vector<double> out(static_cast<size_t>(n_past) * static_cast<size_t>(d_model));
    const double base = 2.0 * static_cast<double>(n_past);
    for (int p = 0; p < n_past; ++p) {
        const double pos = static_cast<double>(p + 1);
        for (int j = 0; j < d_model / 2; ++j) {
            const double denom = std::pow(base, (2.0 * j) / static_cast<double>(d_model));
            out[static_cast<size_t>(p * d_model + 2 * j)] = std::sin(pos / denom);
            out[static_cast<size_t>(p * d_model + 2 * j + 1)] = std::cos(pos / denom);
        }
    }
    return Tensor::from({n_past, d_model}, std::move(out));
}

Tensor value_encoding(const Tensor& f1d, const EmbeddingParams& params) {
    if (f1d.rank() != 2 || f1d.dim(1) != params.value_kernel.dim(1)) {
        throw DimensionError("value_encoding: input channels " +
                             shape_to_string(f1d.shape()) + " do not match kernel " +
                             shape_to_string(params.value_kernel.shape()));
    }
    return conv1d_same(f1d, params.value_kernel);
}

Tensor embed(const Tensor& window_norm, const Tensor& context, const EmbeddingParams& params) {
    if (window_norm.dim(0) != params.n_past) {
        throw DimensionError("embed: window length " + std::to_string(window_norm.dim(0)) +
                             " != N_p " + std::to_string(params.n_past));
    }
    Tensor f1d = window_norm;
    if (context.defined() && context.dim(1) > 0) {
        if (context.dim(0) != params.n_past) throw DimensionError("embed: context length mismatch");
        f1d = concat_last_axis(window_norm, context);
    }
    Tensor ve = value_encoding(f1d, params);
    Tensor pe = positional_encoding(params.n_past, params.d_model);
    Tensor summed = add(ve, pe);
    // Temporal alignment acts per channel: [T x N_p] * [N_p x d] -> [T x d].
    return matmul(params.align, summed);
}

}  // namespace arrivalnet
