// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "arrivalnet/tensor.hpp"

namespace arrivalnet {

struct PeriodEntry {
    int frequency = 0;   // cycles per sequence, 1..floor(T/2)
    int period = 0;      // floor(T / frequency), in time steps
    double amplitude = 0.0;
};

struct PeriodDecomposition {
    int total_len = 0;  // T = N_p + N_f
    std::vector<PeriodEntry> entries;  // sorted by descending amplitude
};

/// Period grid: row i holds time steps [i*cols, (i+1)*cols), zero padded at
/// the tail so rows*cols = T + pad_len with pad_len < cols.
struct Grid2D {
    int rows = 0;
    int cols = 0;
    int pad_len = 0;
    Tensor data;  // [rows x cols x d]
};

/// Mean (over channels) DFT magnitude of frequency bins 1..floor(T/2).
/// Differentiable in x; T >= 4 required.
Tensor amplitude_spectrum(const Tensor& x);

/// Top-k frequency bins by amplitude, ties broken toward the lower
/// frequency. Requires k <= floor(T/2).
PeriodDecomposition detect_periods(const Tensor& x, int k);

Grid2D to_2d(const Tensor& x, int period);

Tensor to_1d(const Grid2D& g, int total_len);

}  // namespace arrivalnet
