// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/model.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace arrivalnet {

namespace {

using nlohmann::json;

Tensor uniform_init(Shape shape, int64_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> data(static_cast<size_t>(shape_numel(shape)));
    for (auto& v : data) v = dist(rng);
    return Tensor::from(std::move(shape), std::move(data), /*requires_grad=*/true);
}

AttentionSublayer init_sublayer(int d, std::mt19937_64& rng) {
    AttentionSublayer sl;
    sl.ln_attn_gain = Tensor::full({d}, 1.0, true);
    sl.ln_attn_bias = Tensor::zeros({d}, true);
    sl.attn.wq = uniform_init({d, d}, d, rng);
    sl.attn.wk = uniform_init({d, d}, d, rng);
    sl.attn.wv = uniform_init({d, d}, d, rng);
    sl.attn.wo = uniform_init({d, d}, d, rng);
    sl.ln_mlp_gain = Tensor::full({d}, 1.0, true);
    sl.ln_mlp_bias = Tensor::zeros({d}, true);
    sl.mlp_w1 = uniform_init({d, 4 * d}, d, rng);
    sl.mlp_b1 = Tensor::zeros({4 * d}, true);
    sl.mlp_w2 = uniform_init({4 * d, d}, 4 * d, rng);
    sl.mlp_b2 = Tensor::zeros({d}, true);
    return sl;
}

void collect_sublayer(const std::string& prefix, const AttentionSublayer& sl,
                      std::vector<std::pair<std::string, Tensor>>& out) {
    out.emplace_back(prefix + ".ln_attn.gain", sl.ln_attn_gain);
    out.emplace_back(prefix + ".ln_attn.bias", sl.ln_attn_bias);
    out.emplace_back(prefix + ".attn.wq", sl.attn.wq);
    out.emplace_back(prefix + ".attn.wk", sl.attn.wk);
    out.emplace_back(prefix + ".attn.wv", sl.attn.wv);
    out.emplace_back(prefix + ".attn.wo", sl.attn.wo);
    out.emplace_back(prefix + ".ln_mlp.gain", sl.ln_mlp_gain);
    out.emplace_back(prefix + ".ln_mlp.bias", sl.ln_mlp_bias);
    out.emplace_back(prefix + ".mlp.w1", sl.mlp_w1);
    out.emplace_back(prefix + ".mlp.b1", sl.mlp_b1);
    out.emplace_back(prefix + ".mlp.w2", sl.mlp_w2);
    out.emplace_back(prefix + ".mlp.b2", sl.mlp_b2);
}

}  // namespace

void ModelConfig::validate() const {
    if (d_model < 2 || d_model % 2 != 0) throw ConfigError("config: d_model must be even and >= 2");
    if (n_past < 2) throw ConfigError("config: n_past must be >= 2");
    if (n_future < 1) throw ConfigError("config: n_future must be >= 1");
    if (top_k < 1 || top_k > total_len() / 2) {
        throw ConfigError("config: top_k must be in [1, " + std::to_string(total_len() / 2) + "]");
    }
    if (num_blocks < 1) throw ConfigError("config: num_blocks must be >= 1");
    if (num_kernels < 1) throw ConfigError("config: num_kernels must be >= 1");
    if (window_size < 1) throw ConfigError("config: window_size must be >= 1");
    if (head_count < 1 || d_model % head_count != 0) {
        throw ConfigError("config: head_count must divide d_model");
    }
}

std::string ModelConfig::to_json() const {
    json j;
    j["d_model"] = d_model;
    j["num_blocks"] = num_blocks;
    j["top_k"] = top_k;
    j["num_kernels"] = num_kernels;
    j["n_past"] = n_past;
    j["n_future"] = n_future;
    j["window_size"] = window_size;
    j["head_count"] = head_count;
    j["backbone"] = backbone == Backbone::kInception ? "inception" : "swin";
    j["learning_rate"] = learning_rate;
    j["context_enabled"] = context_enabled;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("config: invalid JSON: ") + e.what());
    }
    ModelConfig cfg;
    static const char* known[] = {"d_model", "num_blocks", "top_k", "num_kernels", "n_past",
                                  "n_future", "window_size", "head_count", "backbone",
                                  "learning_rate", "context_enabled"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("config: unknown key \"" + it.key() + "\"");
    }
    if (j.contains("d_model")) cfg.d_model = j["d_model"].get<int>();
    if (j.contains("num_blocks")) cfg.num_blocks = j["num_blocks"].get<int>();
    if (j.contains("top_k")) cfg.top_k = j["top_k"].get<int>();
    if (j.contains("num_kernels")) cfg.num_kernels = j["num_kernels"].get<int>();
    if (j.contains("n_past")) cfg.n_past = j["n_past"].get<int>();
    if (j.contains("n_future")) cfg.n_future = j["n_future"].get<int>();
    if (j.contains("window_size")) cfg.window_size = j["window_size"].get<int>();
    if (j.contains("head_count")) cfg.head_count = j["head_count"].get<int>();
    if (j.contains("backbone")) {
        const auto b = j["backbone"].get<std::string>();
        if (b == "inception") cfg.backbone = Backbone::kInception;
        else if (b == "swin") cfg.backbone = Backbone::kSwin;
        else throw ConfigError("config: backbone must be \"inception\" or \"swin\", got \"" + b + "\"");
    }
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("context_enabled")) cfg.context_enabled = j["context_enabled"].get<bool>();
    cfg.validate();
    return cfg;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("embed.value_kernel", embedding.value_kernel);
    out.emplace_back("embed.align", embedding.align);
    for (size_t l = 0; l < blocks.size(); ++l) {
        const std::string bp = "block" + std::to_string(l);
        const auto& b = blocks[l];
        for (size_t i = 0; i < b.inception.layer1.size(); ++i)
            out.emplace_back(bp + ".inc.l1.k" + std::to_string(i), b.inception.layer1[i]);
        for (size_t i = 0; i < b.inception.layer2.size(); ++i)
            out.emplace_back(bp + ".inc.l2.k" + std::to_string(i), b.inception.layer2[i]);
        if (b.swin.d_model > 0) {
            collect_sublayer(bp + ".swin.s0", b.swin.sublayers[0], out);
            collect_sublayer(bp + ".swin.s1", b.swin.sublayers[1], out);
        }
    }
    out.emplace_back("head.weight", head_weight);
    out.emplace_back("head.bias", head_bias);
    return out;
}

std::vector<Tensor> ModelParams::all() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const int d = cfg.d_model;
    ModelParams p;
    const int cin = cfg.input_channels();
    p.embedding.value_kernel = uniform_init({3, cin, d}, 3 * cin, rng);
    p.embedding.align = uniform_init({cfg.total_len(), cfg.n_past}, cfg.n_past, rng);
    p.embedding.d_model = d;
    p.embedding.n_past = cfg.n_past;
    p.embedding.n_future = cfg.n_future;
    for (int l = 0; l < cfg.num_blocks; ++l) {
        BlockParams b;
        if (cfg.backbone == Backbone::kInception) {
            for (int i = 0; i < cfg.num_kernels; ++i) {
                const int ks = 2 * i + 1;
                b.inception.layer1.push_back(uniform_init({ks, ks, d, d}, ks * ks * d, rng));
            }
            for (int i = 0; i < cfg.num_kernels; ++i) {
                const int ks = 2 * i + 1;
                b.inception.layer2.push_back(uniform_init({ks, ks, d, d}, ks * ks * d, rng));
            }
        } else {
            b.swin.sublayers[0] = init_sublayer(d, rng);
            b.swin.sublayers[1] = init_sublayer(d, rng);
            b.swin.window_size = cfg.window_size;
            b.swin.head_count = cfg.head_count;
            b.swin.d_model = d;
        }
        p.blocks.push_back(std::move(b));
    }
    p.head_weight = Tensor::zeros({d, 1}, true);
    p.head_bias = Tensor::zeros({1}, true);
    return p;
}

Tensor block_forward(const Tensor& x, const ModelConfig& cfg, const BlockParams& params) {
    const int64_t t_len = x.dim(0);
    Tensor spec = amplitude_spectrum(x);
    PeriodDecomposition pd = detect_periods(x, cfg.top_k);

    std::vector<int64_t> bin_idx;
    bin_idx.reserve(pd.entries.size());
    for (const auto& e : pd.entries) bin_idx.push_back(e.frequency - 1);
    const int64_t n_bins = static_cast<int64_t>(bin_idx.size());
    Tensor amps = take(spec, {n_bins}, std::move(bin_idx));
    Tensor weights = softmax(amps, 0);

    std::vector<Tensor> branches;
    branches.reserve(pd.entries.size());
    for (const auto& e : pd.entries) {
        Grid2D g = to_2d(x, e.period);
        Grid2D h = cfg.backbone == Backbone::kInception
                       ? inception_forward(g, params.inception)
                       : swin_layer_forward(g, params.swin);
        branches.push_back(to_1d(h, static_cast<int>(t_len)));
    }
    Tensor agg = weighted_sum(branches, weights);
    return add(agg, x);
}

Tensor past_window_tensor(const SequenceSample& sample) {
    const int64_t n = static_cast<int64_t>(sample.past.size());
    std::vector<double> data;
    data.reserve(static_cast<size_t>(n * kStopChannels));
    for (const auto& s : sample.past) {
        data.push_back(s.s_km);
        data.push_back(s.t_sched_s);
        data.push_back(s.delay_s);
        data.push_back(s.signal);
        data.push_back(s.t_mean_s);
    }
    return Tensor::from({n, kStopChannels}, std::move(data));
}

Tensor context_tensor(const SequenceSample& sample, const ModelConfig& cfg) {
    if (!cfg.context_enabled) return Tensor::zeros({cfg.n_past, 0});
    std::vector<double> data;
    data.reserve(static_cast<size_t>(cfg.n_past) * kContextChannels);
    for (int i = 0; i < cfg.n_past; ++i) {
        data.push_back(sample.peak ? 1.0 : 0.0);
        data.push_back(sample.weekday ? 1.0 : 0.0);
    }
    return Tensor::from({cfg.n_past, kContextChannels}, std::move(data));
}

Tensor model_forward_normalized(const SequenceSample& sample, const ModelConfig& cfg,
                                const ModelParams& params, NormStats* stats_out) {
    if (static_cast<int>(sample.past.size()) != cfg.n_past) {
        throw ContractError("model_forward: sample has " + std::to_string(sample.past.size()) +
                            " past stops, config expects " + std::to_string(cfg.n_past));
    }
    auto [window_norm, stats] = normalize(past_window_tensor(sample));
    if (stats_out) *stats_out = stats;
    Tensor x = embed(window_norm, context_tensor(sample, cfg), params.embedding);
    for (const auto& block : params.blocks) x = block_forward(x, cfg, block);
    Tensor head = add_last_axis(matmul(x, params.head_weight), params.head_bias);  // [T x 1]
    head = reshape(head, {cfg.total_len()});
    // Keep the trailing N_f steps (the forecast horizon).
    std::vector<int64_t> idx(static_cast<size_t>(cfg.n_future));
    for (int i = 0; i < cfg.n_future; ++i) idx[static_cast<size_t>(i)] = cfg.n_past + i;
    Tensor out = take(head, {cfg.n_future}, std::move(idx));
    for (double v : out.data()) {
        if (!std::isfinite(v)) throw Error("model_forward: non-finite prediction");
    }
    return out;
}

std::vector<double> model_forward(const SequenceSample& sample, const ModelConfig& cfg,
                                  const ModelParams& params) {
    NormStats stats;
    Tensor norm_pred = model_forward_normalized(sample, cfg, params, &stats);
    Tensor pred = denormalize(norm_pred, stats, kDelayChannel);
    return {pred.data().begin(), pred.data().end()};
}

std::vector<double> predict_arrivals(const SequenceSample& sample, const ModelConfig& cfg,
                                     const ModelParams& params) {
    if (static_cast<int>(sample.future_scheduled.size()) != cfg.n_future) {
        throw ContractError("predict_arrivals: sample carries no scheduled arrivals for the horizon");
    }
    std::vector<double> delays = model_forward(sample, cfg, params);
    for (size_t i = 0; i < delays.size(); ++i) delays[i] += sample.future_scheduled[i];
    return delays;
}

Tensor normalized_target(const SequenceSample& sample, const NormStats& stats) {
    std::vector<double> t(sample.future_delays.size());
    for (size_t i = 0; i < t.size(); ++i)
        t[i] = normalize_value(sample.future_delays[i], stats, kDelayChannel);
    const int64_t n = static_cast<int64_t>(t.size());
    return Tensor::from({n}, std::move(t));
}

std::vector<SequenceSample> build_windows(const std::vector<Trip>& trips, int n_past, int n_future,
                                          size_t* skipped) {
    const int total = n_past + n_future;
    std::vector<SequenceSample> out;
    size_t short_count = 0;
    for (const auto& trip : trips) {
        const int len = static_cast<int>(trip.stops.size());
        if (len < total) {
            ++short_count;
            continue;
        }
        for (int i = 0; i + total <= len; ++i) {
            SequenceSample s;
            s.past.assign(trip.stops.begin() + i, trip.stops.begin() + i + n_past);
            s.peak = trip.peak;
            s.weekday = trip.weekday;
            s.future_delays.reserve(static_cast<size_t>(n_future));
            s.future_scheduled.reserve(static_cast<size_t>(n_future));
            for (int j = 0; j < n_future; ++j) {
                const int k = i + n_past + j;
                s.future_delays.push_back(trip.stops[static_cast<size_t>(k)].delay_s);
                s.future_scheduled.push_back(trip.sched_arrivals_s[static_cast<size_t>(k)]);
                s.link_ids.push_back(trip.route_id + ":" + std::to_string(k));
            }
            s.last_past_delay = trip.stops[static_cast<size_t>(i + n_past - 1)].delay_s;
            out.push_back(std::move(s));
        }
    }
    if (skipped) *skipped = short_count;
    return out;
}

}  // namespace arrivalnet
