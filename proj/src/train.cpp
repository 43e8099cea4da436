// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

namespace arrivalnet {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (!p.has_grad()) continue;
        auto g = p.grad();
        auto w = p.mutable_data();
        for (int64_t j = 0; j < p.numel(); ++j) {
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

Tensor sample_loss(const SequenceSample& sample, const ModelConfig& cfg,
                   const ModelParams& params) {
    NormStats stats;
    Tensor pred = model_forward_normalized(sample, cfg, params, &stats);
    Tensor target = normalized_target(sample, stats);
    return mean_squared_error(pred, target);
}

double dataset_loss(const std::vector<SequenceSample>& samples, const ModelConfig& cfg,
                    const ModelParams& params) {
    NoGradGuard ng;
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += sample_loss(s, cfg, params).scalar();
    return total / static_cast<double>(samples.size());
}

ModelParams clone_params(const ModelParams& params, const ModelConfig& cfg) {
    ModelParams copy = init_params(cfg, 0);
    auto src = params.all();
    auto dst = copy.all();
    if (src.size() != dst.size()) throw ContractError("clone_params: layout mismatch");
    for (size_t i = 0; i < src.size(); ++i) {
        if (src[i].shape() != dst[i].shape()) throw ContractError("clone_params: shape mismatch");
        auto out = dst[i].mutable_data();
        auto in = src[i].data();
        std::copy(in.begin(), in.end(), out.begin());
    }
    return copy;
}

TrainResult train(const ModelConfig& cfg, const std::vector<SequenceSample>& samples,
                  uint64_t seed, const TrainOptions& opt) {
    cfg.validate();
    if (samples.size() < 2) throw ContractError("train: need at least 2 samples");
    if (opt.epochs < 1 || opt.batch_size < 1 || opt.patience < 1) {
        throw ConfigError("train: epochs, batch_size and patience must be positive");
    }

    // Seeded 90/10 split: shuffle indices once, last tenth is held out.
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t test_n = std::max<size_t>(1, samples.size() / 10);
    const size_t train_n = samples.size() - test_n;
    std::vector<SequenceSample> train_set, test_set;
    train_set.reserve(train_n);
    test_set.reserve(test_n);
    for (size_t i = 0; i < train_n; ++i) train_set.push_back(samples[order[i]]);
    for (size_t i = train_n; i < samples.size(); ++i) test_set.push_back(samples[order[i]]);

    ModelParams params = init_params(cfg, rng());
    AdamOptimizer adam(params.all(), cfg.learning_rate);

    TrainResult result;
    result.train_size = train_n;
    result.test_size = test_n;
    result.best_test_loss = std::numeric_limits<double>::infinity();
    result.params = clone_params(params, cfg);
    int stale_epochs = 0;

    std::vector<size_t> epoch_order(train_n);
    std::iota(epoch_order.begin(), epoch_order.end(), size_t{0});
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(epoch_order.begin(), epoch_order.end(), rng);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < train_n; start += static_cast<size_t>(opt.batch_size)) {
            const size_t end = std::min(train_n, start + static_cast<size_t>(opt.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            adam.zero_grad();
            for (size_t i = start; i < end; ++i) {
                Tensor loss = sample_loss(train_set[epoch_order[i]], cfg, params);
                const double lv = loss.scalar();
                if (!std::isfinite(lv)) {
                    throw Error("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                ", sample " + std::to_string(i));
                }
                epoch_loss += lv;
                // Per-sample backward; scaling averages gradients over the batch.
                backward(scale(loss, inv_batch));
            }
            adam.step();
        }
        epoch_loss /= static_cast<double>(train_n);
        const double test_loss = dataset_loss(test_set, cfg, params);
        result.epoch_train_loss.push_back(epoch_loss);
        result.epoch_test_loss.push_back(test_loss);
        if (opt.verbose) {
            std::fprintf(stderr, "epoch %d/%d train_mse=%.6f test_mse=%.6f\n", epoch + 1,
                         opt.epochs, epoch_loss, test_loss);
        }
        if (test_loss < result.best_test_loss) {
            result.best_test_loss = test_loss;
            result.params = clone_params(params, cfg);
            stale_epochs = 0;
        } else if (++stale_epochs >= opt.patience) {
            break;
        }
    }
    return result;
}

}  // namespace arrivalnet
