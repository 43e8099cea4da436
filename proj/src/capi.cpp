// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "arrivalnet/checkpoint.hpp"
#include "arrivalnet/dataset.hpp"
#include "arrivalnet/metrics.hpp"
#include "arrivalnet/model.hpp"
#include "arrivalnet/period.hpp"
#include "arrivalnet/sim.hpp"
#include "arrivalnet/stationarize.hpp"
#include "arrivalnet/train.hpp"

using nlohmann::json;

namespace an = arrivalnet;

struct an_config {
    an::ModelConfig cfg;
};

struct an_dataset {
    std::vector<an::Trip> trips;
    size_t rejects = 0;
};

struct an_model {
    an::ModelConfig cfg;
    an::ModelParams params;
};

struct an_report {
    an::MetricsReport report;
};

namespace {

thread_local std::string g_last_error = "ok";

an_status fail(an_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

/// Runs `fn` and maps the exception hierarchy onto status codes.
template <typename Fn>
an_status guarded(Fn&& fn) {
    try {
        fn();
        return AN_OK;
    } catch (const an::DimensionError& e) {
        return fail(AN_ERR_DIMENSION, e.what());
    } catch (const an::ContractError& e) {
        return fail(AN_ERR_CONTRACT, e.what());
    } catch (const an::ConfigError& e) {
        return fail(AN_ERR_CONFIG, e.what());
    } catch (const an::IndexError& e) {
        return fail(AN_ERR_INDEX, e.what());
    } catch (const an::IoError& e) {
        return fail(AN_ERR_IO, e.what());
    } catch (const an::FormatError& e) {
        return fail(AN_ERR_FORMAT, e.what());
    } catch (const json::exception& e) {
        return fail(AN_ERR_FORMAT, e.what());
    } catch (const std::exception& e) {
        return fail(AN_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(AN_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

an_status require(bool ok, const char* what) {
    if (ok) return AN_OK;
    return fail(AN_ERR_INVALID_ARGUMENT, std::string("null argument: ") + what);
}

an::SimOptions sim_options_from_json(const char* text) {
    an::SimOptions opt;
    if (text == nullptr) return opt;
    const std::string s(text);
    if (s.empty()) return opt;
    json j = json::parse(s);
    if (!j.is_object()) throw an::ConfigError("simulator options must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        if (key == "n_routes") opt.n_routes = val.get<int>();
        else if (key == "stops_per_route") opt.stops_per_route = val.get<int>();
        else if (key == "days") opt.days = val.get<int>();
        else if (key == "headway_s") opt.headway_s = val.get<double>();
        else if (key == "service_start_s") opt.service_start_s = val.get<double>();
        else if (key == "service_end_s") opt.service_end_s = val.get<double>();
        else if (key == "profile") opt.profile = val.get<std::string>();
        else if (key == "clip_negative") opt.clip_negative = val.get<bool>();
        else if (key == "increment_bias_s") opt.increment_bias_s = val.get<double>();
        else if (key == "increment_sigma_s") opt.increment_sigma_s = val.get<double>();
        else if (key == "signal_extra_mean_s") opt.signal_extra_mean_s = val.get<double>();
        else if (key == "signal_red_prob") opt.signal_red_prob = val.get<double>();
        else if (key == "peak_extra_mean_s") opt.peak_extra_mean_s = val.get<double>();
        else if (key == "recovery_min") opt.recovery_min = val.get<double>();
        else if (key == "recovery_max") opt.recovery_max = val.get<double>();
        else if (key == "skip_stop_prob") opt.skip_stop_prob = val.get<double>();
        else if (key == "late_door_prob") opt.late_door_prob = val.get<double>();
        else if (key == "signal_link_fraction") opt.signal_link_fraction = val.get<double>();
        else throw an::ConfigError("unknown simulator option: " + key);
    }
    return opt;
}

an::TrainOptions train_options_from_json(const char* text) {
    an::TrainOptions opt;
    if (text == nullptr) return opt;
    const std::string s(text);
    if (s.empty()) return opt;
    json j = json::parse(s);
    if (!j.is_object()) throw an::ConfigError("training options must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        if (key == "epochs") opt.epochs = val.get<int>();
        else if (key == "batch_size") opt.batch_size = val.get<int>();
        else if (key == "patience") opt.patience = val.get<int>();
        else if (key == "verbose") opt.verbose = val.get<bool>();
        else throw an::ConfigError("unknown training option: " + key);
    }
    return opt;
}

}  // namespace

extern "C" {

const char* an_last_error(void) { return g_last_error.c_str(); }

void an_string_free(char* s) { std::free(s); }

an_status an_config_create(an_config** out) {
    if (an_status st = require(out != nullptr, "out"); st != AN_OK) return st;
    return guarded([&] { *out = new an_config{}; });
}

an_status an_config_from_json(const char* json_text, an_config** out) {
    if (an_status st = require(json_text && out, "json/out"); st != AN_OK) return st;
    return guarded([&] {
        an::ModelConfig cfg = an::ModelConfig::from_json(json_text);
        cfg.validate();
        *out = new an_config{cfg};
    });
}

an_status an_config_to_json(const an_config* cfg, char** out_json) {
    if (an_status st = require(cfg && out_json, "cfg/out_json"); st != AN_OK) return st;
    return guarded([&] { *out_json = dup_string(cfg->cfg.to_json()); });
}

void an_config_free(an_config* cfg) { delete cfg; }

an_status an_dataset_load(const char* path, an_dataset** out) {
    if (an_status st = require(path && out, "path/out"); st != AN_OK) return st;
    return guarded([&] {
        an::LoadResult r = an::load_dataset(path);
        *out = new an_dataset{std::move(r.trips), r.rejected_lines};
    });
}

an_status an_dataset_save(const an_dataset* ds, const char* path) {
    if (an_status st = require(ds && path, "ds/path"); st != AN_OK) return st;
    return guarded([&] { an::save_dataset(ds->trips, path); });
}

an_status an_dataset_size(const an_dataset* ds, size_t* out_trips) {
    if (an_status st = require(ds && out_trips, "ds/out_trips"); st != AN_OK) return st;
    *out_trips = ds->trips.size();
    return AN_OK;
}

an_status an_dataset_rejects(const an_dataset* ds, size_t* out_rejects) {
    if (an_status st = require(ds && out_rejects, "ds/out_rejects"); st != AN_OK) return st;
    *out_rejects = ds->rejects;
    return AN_OK;
}

void an_dataset_free(an_dataset* ds) { delete ds; }

an_status an_simulate(const char* options_json, uint64_t seed, an_dataset** out) {
    if (an_status st = require(out != nullptr, "out"); st != AN_OK) return st;
    return guarded([&] {
        an::SimOptions opt = sim_options_from_json(options_json);
        *out = new an_dataset{an::simulate_dataset(opt, seed), 0};
    });
}

an_status an_train(const an_config* cfg, const an_dataset* ds, uint64_t seed,
                   const char* train_options_json, an_model** out, char** out_log_json) {
    if (an_status st = require(cfg && ds && out, "cfg/ds/out"); st != AN_OK) return st;
    return guarded([&] {
        an::TrainOptions opt = train_options_from_json(train_options_json);
        std::vector<an::SequenceSample> windows =
            an::build_windows(ds->trips, cfg->cfg.n_past, cfg->cfg.n_future);
        an::TrainResult r = an::train(cfg->cfg, windows, seed, opt);
        if (out_log_json) {
            json log;
            log["epoch_train_mse"] = r.epoch_train_loss;
            log["epoch_test_mse"] = r.epoch_test_loss;
            log["best_test_mse"] = r.best_test_loss;
            log["train_samples"] = r.train_size;
            log["test_samples"] = r.test_size;
            *out_log_json = dup_string(log.dump());
        }
        *out = new an_model{cfg->cfg, std::move(r.params)};
    });
}

an_status an_model_save(const an_model* m, const char* path) {
    if (an_status st = require(m && path, "model/path"); st != AN_OK) return st;
    return guarded([&] { an::save_checkpoint(m->cfg, m->params, path); });
}

an_status an_model_load(const char* path, an_model** out) {
    if (an_status st = require(path && out, "path/out"); st != AN_OK) return st;
    return guarded([&] {
        an::Checkpoint ck = an::load_checkpoint(path);
        *out = new an_model{ck.config, std::move(ck.params)};
    });
}

an_status an_model_config_json(const an_model* m, char** out_json) {
    if (an_status st = require(m && out_json, "model/out_json"); st != AN_OK) return st;
    return guarded([&] { *out_json = dup_string(m->cfg.to_json()); });
}

void an_model_free(an_model* m) { delete m; }

an_status an_predict(const an_model* m, const an_dataset* ds, char** out_json) {
    if (an_status st = require(m && ds && out_json, "model/ds/out_json"); st != AN_OK) return st;
    return guarded([&] {
        an::NoGradGuard ng;
        std::vector<an::SequenceSample> windows =
            an::build_windows(ds->trips, m->cfg.n_past, m->cfg.n_future);
        json out = json::array();
        for (size_t i = 0; i < windows.size(); ++i) {
            const auto& w = windows[i];
            std::vector<double> delays = an::model_forward(w, m->cfg, m->params);
            std::vector<double> arrivals(delays.size());
            for (size_t t = 0; t < delays.size(); ++t) {
                arrivals[t] = w.future_scheduled[t] + delays[t];
            }
            json rec;
            rec["window"] = i;
            rec["link_ids"] = w.link_ids;
            rec["pred_delays_s"] = delays;
            rec["pred_arrivals_s"] = arrivals;
            out.push_back(std::move(rec));
        }
        *out_json = dup_string(out.dump());
    });
}

an_status an_evaluate(const an_model* m, const an_dataset* ds, an_report** out) {
    if (an_status st = require(m && ds && out, "model/ds/out"); st != AN_OK) return st;
    return guarded([&] {
        std::vector<an::SequenceSample> windows =
            an::build_windows(ds->trips, m->cfg.n_past, m->cfg.n_future);
        *out = new an_report{an::evaluate(m->cfg, m->params, windows)};
    });
}

an_status an_evaluate_persistence(const an_config* cfg, const an_dataset* ds, an_report** out) {
    if (an_status st = require(cfg && ds && out, "cfg/ds/out"); st != AN_OK) return st;
    return guarded([&] {
        std::vector<an::SequenceSample> windows =
            an::build_windows(ds->trips, cfg->cfg.n_past, cfg->cfg.n_future);
        *out = new an_report{
            an::metrics_from_predictions(windows, an::persistence_predictions(windows))};
    });
}

an_status an_report_to_csv(const an_report* r, char** out_csv) {
    if (an_status st = require(r && out_csv, "report/out_csv"); st != AN_OK) return st;
    return guarded([&] { *out_csv = dup_string(r->report.to_csv()); });
}

an_status an_report_to_json(const an_report* r, char** out_json) {
    if (an_status st = require(r && out_json, "report/out_json"); st != AN_OK) return st;
    return guarded([&] {
        const an::MetricsReport& rep = r->report;
        json j;
        j["rmse_s"] = rep.rmse_s;
        j["mae_s"] = rep.mae_s;
        j["mape_pct"] = rep.mape_pct;
        j["sample_count"] = rep.sample_count;
        j["mape_excluded_steps"] = rep.mape_excluded_steps;
        j["step_rmse_s"] = rep.step_rmse_s;
        j["step_mae_s"] = rep.step_mae_s;
        j["step_mape_pct"] = rep.step_mape_pct;
        json quartiles = json::array();
        for (const auto& q : rep.step_abs_err_quartiles) {
            quartiles.push_back({{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}});
        }
        j["step_abs_err_quartiles"] = std::move(quartiles);
        *out_json = dup_string(j.dump());
    });
}

void an_report_free(an_report* r) { delete r; }

an_status an_inspect_periods(const an_config* cfg, const an_dataset* ds, size_t window_index,
                             char** out_json) {
    if (an_status st = require(cfg && ds && out_json, "cfg/ds/out_json"); st != AN_OK) return st;
    return guarded([&] {
        an::NoGradGuard ng;
        std::vector<an::SequenceSample> windows =
            an::build_windows(ds->trips, cfg->cfg.n_past, cfg->cfg.n_future);
        if (window_index >= windows.size()) {
            throw an::IndexError("window index " + std::to_string(window_index) +
                                 " out of range (" + std::to_string(windows.size()) + " windows)");
        }
        an::Tensor window = an::past_window_tensor(windows[window_index]);
        auto [norm, stats] = an::normalize(window);
        // Delay channel only: that is the series the forecast targets.
        const int64_t n_past = norm.dim(0);
        std::vector<double> delay(static_cast<size_t>(n_past));
        for (int64_t t = 0; t < n_past; ++t) {
            delay[static_cast<size_t>(t)] = norm.at({t, an::kDelayChannel});
        }
        an::Tensor series = an::Tensor::from({n_past, 1}, std::move(delay));
        const int k = std::min<int>(cfg->cfg.top_k, static_cast<int>(n_past / 2));
        an::PeriodDecomposition dec = an::detect_periods(series, k);
        json j;
        j["total_len"] = dec.total_len;
        json entries = json::array();
        for (const auto& e : dec.entries) {
            entries.push_back(
                {{"frequency", e.frequency}, {"period", e.period}, {"amplitude", e.amplitude}});
        }
        j["entries"] = std::move(entries);
        *out_json = dup_string(j.dump());
    });
}

an_status an_export_link_delays(const an_model* m, const an_dataset* ds, char** out_csv) {
    if (an_status st = require(m && ds && out_csv, "model/ds/out_csv"); st != AN_OK) return st;
    return guarded([&] {
        std::vector<an::SequenceSample> windows =
            an::build_windows(ds->trips, m->cfg.n_past, m->cfg.n_future);
        *out_csv = dup_string(
            an::link_delays_to_csv(an::link_delay_export(m->cfg, m->params, windows)));
    });
}

}  // extern "C"
