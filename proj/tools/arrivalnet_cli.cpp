// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the engine exclusively through the C API.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "arrivalnet.h"

namespace {

[[noreturn]] void die(an_status st, const char* where) {
    std::cerr << "error (" << where << ", status " << static_cast<int>(st)
              << "): " << an_last_error() << "\n";
    std::exit(1);
}

void check(an_status st, const char* where) {
    if (st != AN_OK) die(st, where);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot read " << path << "\n";
        std::exit(1);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& out_path, const char* text) {
    const std::string s(text);
    if (out_path.empty()) {
        std::cout << s;
        if (!s.empty() && s.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        std::exit(1);
    }
    out << s;
}

an_config* make_config(const std::string& config_path) {
    an_config* cfg = nullptr;
    if (config_path.empty()) {
        check(an_config_create(&cfg), "config");
    } else {
        check(an_config_from_json(read_file(config_path).c_str(), &cfg), "config");
    }
    return cfg;
}

an_dataset* load_data(const std::string& path) {
    an_dataset* ds = nullptr;
    check(an_dataset_load(path.c_str(), &ds), "load data");
    size_t rejects = 0;
    an_dataset_rejects(ds, &rejects);
    if (rejects > 0) std::cerr << "warning: " << rejects << " malformed lines rejected\n";
    size_t n = 0;
    an_dataset_size(ds, &n);
    if (n == 0) std::cerr << "warning: dataset is empty\n";
    return ds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transit arrival-time forecasting: simulate, train, evaluate, predict"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    uint64_t seed = 42;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out_path, "output path (default: stdout where applicable)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic delay dataset (JSONL)");

    // train
    auto* train = app.add_subcommand("train", "train a model and save a checkpoint");
    std::string data_path, model_path;
    int epochs = 10, batch_size = 32, patience = 3;
    bool verbose = false;
    train->add_option("--data", data_path, "dataset JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--batch-size", batch_size, "mini-batch size");
    train->add_option("--patience", patience, "early-stop patience (test evaluations)");
    train->add_flag("--verbose", verbose, "log per-epoch losses to stderr");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "metrics CSV for a checkpoint on a dataset");
    eval->add_option("--data", data_path, "dataset JSONL")->required()->check(CLI::ExistingFile);
    eval->add_option("--model", model_path, "checkpoint file")->required()->check(CLI::ExistingFile);
    bool baseline = false;
    eval->add_flag("--baseline", baseline, "also report the persistence baseline to stderr");

    // predict
    auto* predict = app.add_subcommand("predict", "per-window predicted delays/arrivals as JSON");
    predict->add_option("--data", data_path, "dataset JSONL")->required()->check(CLI::ExistingFile);
    predict->add_option("--model", model_path, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);

    // inspect-periods
    auto* inspect = app.add_subcommand("inspect-periods", "dominant periods of one window's delays");
    size_t window_index = 0;
    inspect->add_option("--data", data_path, "dataset JSONL")->required()->check(CLI::ExistingFile);
    inspect->add_option("--window", window_index, "window index (default 0)");

    // export-link-delays
    auto* links = app.add_subcommand("export-link-delays",
                                     "per-link mean ground-truth vs. predicted delay CSV");
    links->add_option("--data", data_path, "dataset JSONL")->required()->check(CLI::ExistingFile);
    links->add_option("--model", model_path, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        const std::string options = config_path.empty() ? "{}" : read_file(config_path);
        an_dataset* ds = nullptr;
        check(an_simulate(options.c_str(), seed, &ds), "simulate");
        if (out_path.empty()) {
            std::cerr << "error: simulate requires --out\n";
            return 1;
        }
        check(an_dataset_save(ds, out_path.c_str()), "save dataset");
        size_t n = 0;
        an_dataset_size(ds, &n);
        std::cerr << "wrote " << n << " trips to " << out_path << "\n";
        an_dataset_free(ds);
        return 0;
    }

    if (train->parsed()) {
        if (out_path.empty()) {
            std::cerr << "error: train requires --out (checkpoint path)\n";
            return 1;
        }
        an_config* cfg = make_config(config_path);
        an_dataset* ds = load_data(data_path);
        std::ostringstream opts;
        opts << "{\"epochs\":" << epochs << ",\"batch_size\":" << batch_size
             << ",\"patience\":" << patience << ",\"verbose\":" << (verbose ? "true" : "false")
             << "}";
        an_model* model = nullptr;
        char* log_json = nullptr;
        check(an_train(cfg, ds, seed, opts.str().c_str(), &model, &log_json), "train");
        check(an_model_save(model, out_path.c_str()), "save model");
        std::cout << log_json << "\n";
        an_string_free(log_json);
        an_model_free(model);
        an_dataset_free(ds);
        an_config_free(cfg);
        return 0;
    }

    if (eval->parsed()) {
        an_model* model = nullptr;
        check(an_model_load(model_path.c_str(), &model), "load model");
        an_dataset* ds = load_data(data_path);
        an_report* rep = nullptr;
        check(an_evaluate(model, ds, &rep), "evaluate");
        char* csv = nullptr;
        check(an_report_to_csv(rep, &csv), "report");
        write_output(out_path, csv);
        an_string_free(csv);
        an_report_free(rep);
        if (baseline) {
            char* cfg_json = nullptr;
            check(an_model_config_json(model, &cfg_json), "model config");
            an_config* cfg = nullptr;
            check(an_config_from_json(cfg_json, &cfg), "config");
            an_string_free(cfg_json);
            an_report* base = nullptr;
            check(an_evaluate_persistence(cfg, ds, &base), "baseline");
            char* base_json = nullptr;
            check(an_report_to_json(base, &base_json), "baseline report");
            std::cerr << "persistence baseline: " << base_json << "\n";
            an_string_free(base_json);
            an_report_free(base);
            an_config_free(cfg);
        }
        an_dataset_free(ds);
        an_model_free(model);
        return 0;
    }

    if (predict->parsed()) {
        an_model* model = nullptr;
        check(an_model_load(model_path.c_str(), &model), "load model");
        an_dataset* ds = load_data(data_path);
        char* json = nullptr;
        check(an_predict(model, ds, &json), "predict");
        write_output(out_path, json);
        an_string_free(json);
        an_dataset_free(ds);
        an_model_free(model);
        return 0;
    }

    if (inspect->parsed()) {
        an_config* cfg = make_config(config_path);
        an_dataset* ds = load_data(data_path);
        char* json = nullptr;
        check(an_inspect_periods(cfg, ds, window_index, &json), "inspect-periods");
        write_output(out_path, json);
        an_string_free(json);
        an_dataset_free(ds);
        an_config_free(cfg);
        return 0;
    }

    if (links->parsed()) {
        an_model* model = nullptr;
        check(an_model_load(model_path.c_str(), &model), "load model");
        an_dataset* ds = load_data(data_path);
        char* csv = nullptr;
        check(an_export_link_delays(model, ds, &csv), "export-link-delays");
        write_output(out_path, csv);
        an_string_free(csv);
        an_dataset_free(ds);
        an_model_free(model);
        return 0;
    }

    return 0;
}
