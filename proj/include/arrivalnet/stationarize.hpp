// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "arrivalnet/tensor.hpp"

namespace arrivalnet {

/// Per-channel statistics of one past window. sigma carries the epsilon
/// floor so that normalize/denormalize are exact inverses of each other.
struct NormStats {
    std::vector<double> mu;
    std::vector<double> sigma;
    int64_t channel_count() const { return static_cast<int64_t>(mu.size()); }
};

inline constexpr double kNormEps = 1e-5;

/// Standardizes each channel of window [N_p x C] with population statistics
/// over the temporal axis. Requires N_p >= 2.
std::pair<Tensor, NormStats> normalize(const Tensor& window);

/// Inverts the standardization of one channel for an [N_f] prediction.
Tensor denormalize(const Tensor& pred, const NormStats& stats, int64_t channel);

double denormalize_value(double v, const NormStats& stats, int64_t channel);
double normalize_value(double v, const NormStats& stats, int64_t channel);

}  // namespace arrivalnet
