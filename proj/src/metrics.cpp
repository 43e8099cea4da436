// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace arrivalnet {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - f) + sorted[hi] * f;
}

}  // namespace

MetricsReport metrics_from_predictions(const std::vector<SequenceSample>& samples,
                                       const std::vector<std::vector<double>>& pred_arrivals) {
    if (samples.size() != pred_arrivals.size()) {
        throw ContractError("metrics: prediction count does not match sample count");
    }
    MetricsReport rep;
    rep.sample_count = samples.size();
    if (samples.empty()) return rep;
    const size_t horizon = samples[0].future_delays.size();
    std::vector<double> step_sq(horizon, 0.0), step_abs(horizon, 0.0), step_ape(horizon, 0.0);
    std::vector<size_t> step_mape_n(horizon, 0);
    std::vector<std::vector<double>> step_errs(horizon);

    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto& pred = pred_arrivals[i];
        if (pred.size() != horizon || s.future_delays.size() != horizon) {
            throw ContractError("metrics: horizon mismatch at sample " + std::to_string(i));
        }
        double sq = 0.0, abs_sum = 0.0, ape_sum = 0.0;
        size_t ape_n = 0;
        for (size_t t = 0; t < horizon; ++t) {
            const double truth = s.future_scheduled[t] + s.future_delays[t];
            const double err = truth - pred[t];
            sq += err * err;
            abs_sum += std::abs(err);
            step_sq[t] += err * err;
            step_abs[t] += std::abs(err);
            step_errs[t].push_back(std::abs(err));
            if (std::abs(truth) >= 1.0) {
                ape_sum += std::abs(err / truth);
                step_ape[t] += std::abs(err / truth);
                ++step_mape_n[t];
                ++ape_n;
            } else {
                ++rep.mape_excluded_steps;
            }
        }
        rep.rmse_s += std::sqrt(sq / static_cast<double>(horizon));
        rep.mae_s += abs_sum / static_cast<double>(horizon);
        if (ape_n > 0) rep.mape_pct += 100.0 * ape_sum / static_cast<double>(ape_n);
    }
    const double n = static_cast<double>(samples.size());
    rep.rmse_s /= n;
    rep.mae_s /= n;
    rep.mape_pct /= n;
    for (size_t t = 0; t < horizon; ++t) {
        rep.step_rmse_s.push_back(std::sqrt(step_sq[t] / n));
        rep.step_mae_s.push_back(step_abs[t] / n);
        rep.step_mape_pct.push_back(step_mape_n[t] ? 100.0 * step_ape[t] / static_cast<double>(step_mape_n[t]) : 0.0);
        std::sort(step_errs[t].begin(), step_errs[t].end());
        rep.step_abs_err_quartiles.push_back({quantile_sorted(step_errs[t], 0.25),
                                              quantile_sorted(step_errs[t], 0.5),
                                              quantile_sorted(step_errs[t], 0.75)});
    }
    if (rep.mae_s > rep.rmse_s + 1e-9) {
        throw Error("metrics: MAE exceeded RMSE, aggregation is broken");
    }
    return rep;
}

MetricsReport evaluate(const ModelConfig& cfg, const ModelParams& params,
                       const std::vector<SequenceSample>& samples) {
    NoGradGuard ng;
    std::vector<std::vector<double>> preds;
    preds.reserve(samples.size());
    for (const auto& s : samples) {
        if (static_cast<int>(s.past.size()) != cfg.n_past ||
            static_cast<int>(s.future_delays.size()) != cfg.n_future) {
            throw ContractError("evaluate: sample window sizes do not match the model config");
        }
        preds.push_back(predict_arrivals(s, cfg, params));
    }
    return metrics_from_predictions(samples, preds);
}

std::vector<std::vector<double>> persistence_predictions(const std::vector<SequenceSample>& samples) {
    std::vector<std::vector<double>> preds;
    preds.reserve(samples.size());
    for (const auto& s : samples) {
        std::vector<double> p(s.future_scheduled.size());
        for (size_t t = 0; t < p.size(); ++t) p[t] = s.future_scheduled[t] + s.last_past_delay;
        preds.push_back(std::move(p));
    }
    return preds;
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << "step,rmse_s,mae_s,mape_pct\n";
    for (size_t t = 0; t < step_rmse_s.size(); ++t) {
        os << (t + 1) << ',' << step_rmse_s[t] << ',' << step_mae_s[t] << ',' << step_mape_pct[t]
           << '\n';
    }
    os << "aggregate," << rmse_s << ',' << mae_s << ',' << mape_pct << '\n';
    return os.str();
}

std::vector<LinkDelayRow> link_delay_export(const ModelConfig& cfg, const ModelParams& params,
                                            const std::vector<SequenceSample>& samples) {
    NoGradGuard ng;
    struct Acc {
        size_t n = 0;
        double gt = 0.0;
        double pred = 0.0;
    };
    std::map<std::string, Acc> acc;
    size_t skipped = 0;
    for (const auto& s : samples) {
        if (s.link_ids.size() != s.future_delays.size()) {
            ++skipped;
            continue;
        }
        std::vector<double> pred = model_forward(s, cfg, params);
        double prev_gt = s.last_past_delay;
        double prev_pred = s.last_past_delay;
        for (size_t t = 0; t < pred.size(); ++t) {
            Acc& a = acc[s.link_ids[t]];
            ++a.n;
            a.gt += s.future_delays[t] - prev_gt;
            a.pred += pred[t] - prev_pred;
            prev_gt = s.future_delays[t];
            prev_pred = pred[t];
        }
    }
    (void)skipped;
    std::vector<LinkDelayRow> rows;
    rows.reserve(acc.size());
    for (const auto& [id, a] : acc) {
        rows.push_back({id, a.n, a.gt / static_cast<double>(a.n), a.pred / static_cast<double>(a.n)});
    }
    return rows;
}

std::string link_delays_to_csv(const std::vector<LinkDelayRow>& rows) {
    std::ostringstream os;
    os << "link_id,n,gt_mean_s,pred_mean_s\n";
    for (const auto& r : rows) {
        os << r.link_id << ',' << r.n << ',' << r.gt_mean_s << ',' << r.pred_mean_s << '\n';
    }
    return os.str();
}

}  // namespace arrivalnet
