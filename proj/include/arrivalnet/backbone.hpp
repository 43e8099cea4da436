// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "arrivalnet/period.hpp"
#include "arrivalnet/tensor.hpp"

namespace arrivalnet {

/// Two stacked multi-kernel convolution layers. Kernel i has size 2i+1;
/// all kernels of a layer run in parallel and their outputs are summed.
/// Activation sits between the layers only.
struct InceptionParams {
    std::vector<Tensor> layer1;  // each [ks, ks, d, d]
    std::vector<Tensor> layer2;
};

Grid2D inception_forward(const Grid2D& g, const InceptionParams& params);

struct AttentionProjections {
    Tensor wq, wk, wv, wo;  // each [d x d]
};

/// One attention sub-layer: pre-norm attention followed by a pre-norm MLP,
/// both with residual connections.
struct AttentionSublayer {
    Tensor ln_attn_gain, ln_attn_bias;
    AttentionProjections attn;
    Tensor ln_mlp_gain, ln_mlp_bias;
    Tensor mlp_w1, mlp_b1;  // d -> 4d
    Tensor mlp_w2, mlp_b2;  // 4d -> d
};

struct SwinParams {
    AttentionSublayer sublayers[2];  // [0] plain windows, [1] shifted windows
    int window_size = 2;
    int head_count = 1;
    int d_model = 0;
};

/// Additive masks (0 or -1e9) per window of the rolled grid, in row-major
/// window order. Entry (i, j) is open iff pixels i and j came from the same
/// contiguous region of the unshifted grid. rows/cols must be multiples of m.
std::vector<Tensor> build_shift_masks(int rows, int cols, int m);

inline constexpr double kMaskBlocked = -1e9;

/// Windowed self-attention over the grid. Pads the grid with zeros to
/// multiples of the window size, partitions, attends (with the cyclic-roll +
/// mask scheme when shifted), merges and crops back; shape preserving.
Grid2D window_attention(const Grid2D& g, const AttentionProjections& proj, int window_size,
                        int head_count, int d_model, bool shifted);

/// The two-layer block: W-MSA sub-layer then SW-MSA sub-layer, each with a
/// residual MLP. Shape preserving.
Grid2D swin_layer_forward(const Grid2D& g, const SwinParams& params);

}  // namespace arrivalnet
