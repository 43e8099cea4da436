// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "arrivalnet/tensor.hpp"

namespace arrivalnet {

/// Parameters of the input embedding: a length-3 conv1d lifting the
/// (C + N_c) input channels to d_model, and a temporal linear map aligning
/// N_p past steps to the full N_p + N_f sequence.
struct EmbeddingParams {
    Tensor value_kernel;  // [3, C + N_c, d_model]
    Tensor align;         // [N_p + N_f, N_p]
    int d_model = 0;
    int n_past = 0;
    int n_future = 0;
};

/// Deterministic sin/cos table, [N_p x d_model]. Positions run 1..N_p;
/// channel pair (2j, 2j+1) uses wavelength base (2 N_p)^(2j / d_model).
Tensor positional_encoding(int n_past, int d_model);

/// Conv1d (length 3, zero same-padding) over the temporal axis.
Tensor value_encoding(const Tensor& f1d, const EmbeddingParams& params);

/// Full embedding: concat(window, context) -> VE, + PE, then the temporal
/// alignment applied per channel. Output [(N_p + N_f) x d_model].
/// `context` may be an empty 0-column tensor when contextual features are
/// disabled.
Tensor embed(const Tensor& window_norm, const Tensor& context, const EmbeddingParams& params);

}  // namespace arrivalnet
