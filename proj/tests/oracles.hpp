// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used to cross-check the library.
// Everything here is deliberately naive: direct summation, brute-force
// enumeration, central differences. No production code is reused beyond the
// Tensor container itself.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "arrivalnet/tensor.hpp"

namespace oracles {

/// Central finite differences of a scalar-valued function w.r.t. one entry of
/// a leaf tensor. The function must re-run the full forward pass on each call.
inline double finite_difference(arrivalnet::Tensor leaf, int64_t flat_index,
                                const std::function<double()>& forward, double h = 1e-5) {
    arrivalnet::NoGradGuard ng;
    auto data = leaf.mutable_data();
    const double saved = data[flat_index];
    data[flat_index] = saved + h;
    const double up = forward();
    data[flat_index] = saved - h;
    const double down = forward();
    data[flat_index] = saved;
    return (up - down) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
    return std::abs(got - want) / denom;
}

/// Direct O(T^2) DFT amplitude spectrum: for each bin f in 1..floor(T/2),
/// |sum_t x[t] exp(-2*pi*i*f*t/T)| averaged over the d channels.
inline std::vector<double> dft_spectrum_direct(const std::vector<std::vector<double>>& x) {
    const size_t t_len = x.size();
    const size_t d = x[0].size();
    const size_t bins = t_len / 2;
    std::vector<double> out(bins, 0.0);
    for (size_t f = 1; f <= bins; ++f) {
        double acc = 0.0;
        for (size_t c = 0; c < d; ++c) {
            double re = 0.0, im = 0.0;
            for (size_t t = 0; t < t_len; ++t) {
                const double ang = -2.0 * M_PI * static_cast<double>(f) * static_cast<double>(t) /
                                   static_cast<double>(t_len);
                re += x[t][c] * std::cos(ang);
                im += x[t][c] * std::sin(ang);
            }
            acc += std::sqrt(re * re + im * im);
        }
        out[f - 1] = acc / static_cast<double>(d);
    }
    return out;
}

/// Naive shifted-window attention: works directly on the UNROLLED grid.
/// Pixels are grouped by (shifted-window id, region label); softmax attention
/// runs independently inside every group. Single head, scale 1/sqrt(d_model).
/// x is [rows][cols][d] with rows, cols multiples of m; wq/wk/wv/wo are
/// [d][d] row-major. Mirrors the roll+mask construction from first
/// principles: a pixel at (i, j) lands in rolled cell ((i - s) mod rows,
/// (j - s) mod cols).
inline std::vector<std::vector<std::vector<double>>> naive_shifted_attention(
    const std::vector<std::vector<std::vector<double>>>& x,
    const std::vector<std::vector<double>>& wq, const std::vector<std::vector<double>>& wk,
    const std::vector<std::vector<double>>& wv, const std::vector<std::vector<double>>& wo,
    int64_t m, double scale) {
    const int64_t rows = static_cast<int64_t>(x.size());
    const int64_t cols = static_cast<int64_t>(x[0].size());
    const int64_t d = static_cast<int64_t>(x[0][0].size());
    const int64_t s = m / 2;

    auto project = [&](const std::vector<double>& v, const std::vector<std::vector<double>>& w) {
        std::vector<double> out(static_cast<size_t>(d), 0.0);
        for (int64_t o = 0; o < d; ++o)
            for (int64_t k = 0; k < d; ++k)
                out[static_cast<size_t>(o)] +=
                    v[static_cast<size_t>(k)] * w[static_cast<size_t>(k)][static_cast<size_t>(o)];
        return out;
    };

    // Group pixels: key = (rolled-window id, region label in rolled space).
    std::map<std::pair<int64_t, int>, std::vector<std::pair<int64_t, int64_t>>> groups;
    for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < cols; ++j) {
            const int64_t ri = ((i - s) % rows + rows) % rows;  // rolled coordinates
            const int64_t rj = ((j - s) % cols + cols) % cols;
            const int64_t win = (ri / m) * (cols / m) + (rj / m);
            auto band = [&](int64_t v, int64_t n) { return v < n - m ? 0 : (v < n - s ? 1 : 2); };
            const int label = band(ri, rows) * 3 + band(rj, cols);
            groups[{win, label}].push_back({i, j});
        }
    }

    std::vector<std::vector<std::vector<double>>> out(
        static_cast<size_t>(rows),
        std::vector<std::vector<double>>(static_cast<size_t>(cols),
                                         std::vector<double>(static_cast<size_t>(d), 0.0)));
    for (const auto& [key, pixels] : groups) {
        const size_t n = pixels.size();
        std::vector<std::vector<double>> q(n), k(n), v(n);
        for (size_t a = 0; a < n; ++a) {
            const auto& src = x[static_cast<size_t>(pixels[a].first)]
                               [static_cast<size_t>(pixels[a].second)];
            q[a] = project(src, wq);
            k[a] = project(src, wk);
            v[a] = project(src, wv);
        }
        for (size_t a = 0; a < n; ++a) {
            std::vector<double> logits(n);
            double mx = -1e300;
            for (size_t b = 0; b < n; ++b) {
                double dot = 0.0;
                for (int64_t c = 0; c < d; ++c)
                    dot += q[a][static_cast<size_t>(c)] * k[b][static_cast<size_t>(c)];
                logits[b] = dot * scale;
                mx = std::max(mx, logits[b]);
            }
            double z = 0.0;
            for (size_t b = 0; b < n; ++b) z += std::exp(logits[b] - mx);
            std::vector<double> att(static_cast<size_t>(d), 0.0);
            for (size_t b = 0; b < n; ++b) {
                const double w = std::exp(logits[b] - mx) / z;
                for (int64_t c = 0; c < d; ++c)
                    att[static_cast<size_t>(c)] += w * v[b][static_cast<size_t>(c)];
            }
            const std::vector<double> o = project(att, wo);
            out[static_cast<size_t>(pixels[a].first)][static_cast<size_t>(pixels[a].second)] = o;
        }
    }
    return out;
}

inline std::vector<double> random_vector(size_t n, std::mt19937_64& rng, double lo = -2.0,
                                         double hi = 2.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

}  // namespace oracles
