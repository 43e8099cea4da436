// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arrivalnet/backbone.hpp"
#include "arrivalnet/data.hpp"
#include "arrivalnet/embedding.hpp"
#include "arrivalnet/stationarize.hpp"
#include "arrivalnet/tensor.hpp"

namespace arrivalnet {

enum class Backbone { kInception, kSwin };

struct ModelConfig {
    int d_model = 16;
    int num_blocks = 2;
    int top_k = 3;
    int num_kernels = 6;
    int n_past = 10;
    int n_future = 5;
    int window_size = 2;
    int head_count = 1;
    Backbone backbone = Backbone::kInception;
    double learning_rate = 0.001;
    bool context_enabled = true;

    int total_len() const { return n_past + n_future; }
    int input_channels() const { return kStopChannels + (context_enabled ? kContextChannels : 0); }
    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& json_text);
};

struct BlockParams {
    InceptionParams inception;
    SwinParams swin;
};

struct ModelParams {
    EmbeddingParams embedding;
    std::vector<BlockParams> blocks;
    Tensor head_weight;  // [d_model x 1]
    Tensor head_bias;    // [1]

    /// Stable name -> tensor listing; defines the checkpoint block order.
    std::vector<std::pair<std::string, Tensor>> named() const;
    std::vector<Tensor> all() const;
};

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases, zero
/// output head, unit layer-norm gains; deterministic under seed.
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

/// One residual 2D block: period detection on x, per-period grid reshape,
/// backbone, flatten, amplitude-softmax aggregation, plus the skip path.
Tensor block_forward(const Tensor& x, const ModelConfig& cfg, const BlockParams& params);

/// Forward pass up to (and including) the output head, in normalized space.
/// Returns the [N_f] prediction; `stats_out` (optional) receives the window
/// statistics needed for denormalization.
Tensor model_forward_normalized(const SequenceSample& sample, const ModelConfig& cfg,
                                const ModelParams& params, NormStats* stats_out = nullptr);

/// Predicted delays in seconds, [N_f].
std::vector<double> model_forward(const SequenceSample& sample, const ModelConfig& cfg,
                                  const ModelParams& params);

/// Predicted arrival times in seconds since trip start, [N_f].
std::vector<double> predict_arrivals(const SequenceSample& sample, const ModelConfig& cfg,
                                     const ModelParams& params);

/// Normalized target vector matching model_forward_normalized.
Tensor normalized_target(const SequenceSample& sample, const NormStats& stats);

Tensor past_window_tensor(const SequenceSample& sample);
Tensor context_tensor(const SequenceSample& sample, const ModelConfig& cfg);

}  // namespace arrivalnet
