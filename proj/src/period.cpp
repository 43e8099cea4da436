// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/period.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace arrivalnet {

namespace {

// [2F x T] matrix whose rows are cos/sin DFT basis vectors for bins
// 1..floor(T/2); the amplitude is then an op chain over matmul results.
Tensor dft_basis(int64_t t_len, bool sine) {
    const int64_t f_max = t_len / 2;
    std::vector<double> m(static_cast<size_t>(f_max * t_len));
    for (int64_t f = 1; f <= f_max; ++f) {
        for (int64_t t = 0; t < t_len; ++t) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(f) *
                                 static_cast<double>(t) / static_cast<double>(t_len);
            m[static_cast<size_t>((f - 1) * t_len + t)] = sine ? -std::sin(theta) : std::cos(theta);
        }
    }
    return Tensor::from({f_max, t_len}, std::move(m));
}

}  // namespace

Tensor amplitude_spectrum(const Tensor& x) {
    if (x.rank() != 2) throw DimensionError("amplitude_spectrum: expects [T x d]");
    const int64_t t_len = x.dim(0);
    if (t_len < 4) throw ContractError("amplitude_spectrum: sequence length must be >= 4, got " +
                                       std::to_string(t_len));
    Tensor re = matmul(dft_basis(t_len, false), x);  // [F x d]
    Tensor im = matmul(dft_basis(t_len, true), x);
    return mean_last_axis(elementwise_hypot(re, im));  // [F]
}

PeriodDecomposition detect_periods(const Tensor& x, int k) {
    const int64_t t_len = x.dim(0);
    const int64_t f_max = t_len / 2;
    if (k < 1 || k > f_max) {
        throw ConfigError("detect_periods: k = " + std::to_string(k) +
                          " not in [1, " + std::to_string(f_max) + "]");
    }
    NoGradGuard ng;
    Tensor spec = amplitude_spectrum(x);
    auto amps = spec.data();
    std::vector<int> bins(static_cast<size_t>(f_max));
    for (int64_t i = 0; i < f_max; ++i) bins[static_cast<size_t>(i)] = static_cast<int>(i + 1);
    std::stable_sort(bins.begin(), bins.end(), [&](int a, int b) {
        const double aa = amps[static_cast<size_t>(a - 1)];
        const double ab = amps[static_cast<size_t>(b - 1)];
        if (aa != ab) return aa > ab;
        return a < b;  // ties: longer periods win
    });
    PeriodDecomposition out;
    out.total_len = static_cast<int>(t_len);
    out.entries.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        const int f = bins[static_cast<size_t>(i)];
        out.entries.push_back({f, static_cast<int>(t_len) / f, amps[static_cast<size_t>(f - 1)]});
    }
    return out;
}

Grid2D to_2d(const Tensor& x, int period) {
    if (x.rank() != 2) throw DimensionError("to_2d: expects [T x d]");
    const int64_t t_len = x.dim(0);
    const int64_t d = x.dim(1);
    if (period < 1 || period > t_len) {
        throw ContractError("to_2d: period " + std::to_string(period) + " not in [1, " +
                            std::to_string(t_len) + "]");
    }
    const int64_t rows = (t_len + period - 1) / period;
    const int64_t padded = rows * period;
    std::vector<int64_t> idx(static_cast<size_t>(padded * d));
    for (int64_t t = 0; t < padded; ++t)
        for (int64_t c = 0; c < d; ++c)
            idx[static_cast<size_t>(t * d + c)] = t < t_len ? t * d + c : -1;
    Grid2D g;
    g.rows = static_cast<int>(rows);
    g.cols = period;
    g.pad_len = static_cast<int>(padded - t_len);
    g.data = take(x, {rows, period, d}, std::move(idx));
    return g;
}

Tensor to_1d(const Grid2D& g, int total_len) {
    const int64_t cells = static_cast<int64_t>(g.rows) * g.cols;
    if (total_len > cells) {
        throw ContractError("to_1d: requested length " + std::to_string(total_len) +
                            " exceeds grid cells " + std::to_string(cells));
    }
    const int64_t d = g.data.dim(2);
    std::vector<int64_t> idx(static_cast<size_t>(total_len * d));
    for (int64_t t = 0; t < total_len; ++t)
        for (int64_t c = 0; c < d; ++c) idx[static_cast<size_t>(t * d + c)] = t * d + c;
    return take(g.data, {total_len, d}, std::move(idx));
}

}  // namespace arrivalnet
