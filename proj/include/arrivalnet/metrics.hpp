// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "arrivalnet/data.hpp"
#include "arrivalnet/model.hpp"

namespace arrivalnet {

struct StepQuartiles {
    double q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct MetricsReport {
    // Aggregate: per-sample horizon metrics averaged over samples.
    double rmse_s = 0.0;
    double mae_s = 0.0;
    double mape_pct = 0.0;
    size_t sample_count = 0;
    size_t mape_excluded_steps = 0;  // |ground truth| < 1 s guard
    // Per horizon step, across samples.
    std::vector<double> step_rmse_s;
    std::vector<double> step_mae_s;
    std::vector<double> step_mape_pct;
    std::vector<StepQuartiles> step_abs_err_quartiles;

    std::string to_csv() const;
};

/// Metrics over arrival times (predicted delay + schedule) per the horizon
/// averaging convention: within-sample first, then across samples.
MetricsReport evaluate(const ModelConfig& cfg, const ModelParams& params,
                       const std::vector<SequenceSample>& samples);

/// Same report computed from externally supplied predicted arrivals
/// (one vector per sample), used by baselines and oracles.
MetricsReport metrics_from_predictions(const std::vector<SequenceSample>& samples,
                                       const std::vector<std::vector<double>>& pred_arrivals);

/// Persistence baseline: the last observed delay carried to every horizon.
std::vector<std::vector<double>> persistence_predictions(const std::vector<SequenceSample>& samples);

struct LinkDelayRow {
    std::string link_id;
    size_t n = 0;
    double gt_mean_s = 0.0;
    double pred_mean_s = 0.0;
};

/// Per-link mean ground-truth and predicted link delays (successive
/// differences of cumulative delays along the horizon).
std::vector<LinkDelayRow> link_delay_export(const ModelConfig& cfg, const ModelParams& params,
                                            const std::vector<SequenceSample>& samples);

std::string link_delays_to_csv(const std::vector<LinkDelayRow>& rows);

}  // namespace arrivalnet
