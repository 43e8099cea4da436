// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "arrivalnet/model.hpp"

namespace arrivalnet {

struct TrainOptions {
    int epochs = 10;
    int batch_size = 32;
    int patience = 3;  // early stop after this many non-improving test epochs
    bool verbose = false;
};

struct TrainResult {
    ModelParams params;  // best-on-test snapshot
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_test_loss;
    double best_test_loss = 0.0;
    size_t train_size = 0;
    size_t test_size = 0;
};

/// Adam optimizer over a flat parameter list.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void zero_grad();
    void step();

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

/// Normalized-space MSE of one sample.
Tensor sample_loss(const SequenceSample& sample, const ModelConfig& cfg, const ModelParams& params);

/// Mean normalized-space MSE over a set (no gradients).
double dataset_loss(const std::vector<SequenceSample>& samples, const ModelConfig& cfg,
                    const ModelParams& params);

/// Seeded 90/10 split, mini-batch Adam on normalized MSE, best-on-test
/// checkpointed. Dataset must contain at least 2 samples.
TrainResult train(const ModelConfig& cfg, const std::vector<SequenceSample>& samples,
                  uint64_t seed, const TrainOptions& opt = {});

/// Deep-copies parameter values (grad state and tape links are not copied).
ModelParams clone_params(const ModelParams& params, const ModelConfig& cfg);

}  // namespace arrivalnet
