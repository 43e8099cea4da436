// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/stationarize.hpp"

#include <cmath>

namespace arrivalnet {

std::pair<Tensor, NormStats> normalize(const Tensor& window) {
    if (window.rank() != 2) throw DimensionError("normalize: expects [N_p x C]");
    const int64_t n = window.dim(0);
    const int64_t c = window.dim(1);
    if (n < 2) throw ContractError("normalize: window length must be >= 2, got " + std::to_string(n));
    auto xd = window.data();
    NormStats stats;
    stats.mu.assign(static_cast<size_t>(c), 0.0);
    stats.sigma.assign(static_cast<size_t>(c), 0.0);
    for (int64_t t = 0; t < n; ++t)
        for (int64_t j = 0; j < c; ++j)
            stats.mu[static_cast<size_t>(j)] += xd[static_cast<size_t>(t * c + j)];
    for (auto& m : stats.mu) m /= static_cast<double>(n);
    for (int64_t t = 0; t < n; ++t)
        for (int64_t j = 0; j < c; ++j) {
            const double e = xd[static_cast<size_t>(t * c + j)] - stats.mu[static_cast<size_t>(j)];
            stats.sigma[static_cast<size_t>(j)] += e * e;
        }
    for (auto& s : stats.sigma) {
        // Population variance (1/N_p), then the epsilon floor so constant
        // channels normalize to zeros instead of dividing by zero.
        s = std::sqrt(s / static_cast<double>(n));
        if (s < kNormEps) s = kNormEps;
    }
    std::vector<double> out(xd.size());
    for (int64_t t = 0; t < n; ++t)
        for (int64_t j = 0; j < c; ++j)
            out[static_cast<size_t>(t * c + j)] =
                (xd[static_cast<size_t>(t * c + j)] - stats.mu[static_cast<size_t>(j)]) /
                stats.sigma[static_cast<size_t>(j)];
    return {Tensor::from(window.shape(), std::move(out)), std::move(stats)};
}

Tensor denormalize(const Tensor& pred, const NormStats& stats, int64_t channel) {
    if (channel < 0 || channel >= stats.channel_count()) {
        throw IndexError("denormalize: channel " + std::to_string(channel) + " out of range [0, " +
                         std::to_string(stats.channel_count()) + ")");
    }
    return add_scalar(scale(pred, stats.sigma[static_cast<size_t>(channel)]),
                      stats.mu[static_cast<size_t>(channel)]);
}

double denormalize_value(double v, const NormStats& stats, int64_t channel) {
    if (channel < 0 || channel >= stats.channel_count()) throw IndexError("denormalize_value: channel out of range");
    return stats.sigma[static_cast<size_t>(channel)] * v + stats.mu[static_cast<size_t>(channel)];
}

double normalize_value(double v, const NormStats& stats, int64_t channel) {
    if (channel < 0 || channel >= stats.channel_count()) throw IndexError("normalize_value: channel out of range");
    return (v - stats.mu[static_cast<size_t>(channel)]) / stats.sigma[static_cast<size_t>(channel)];
}

}  // namespace arrivalnet
