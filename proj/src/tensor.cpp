// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace arrivalnet {

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return n;
}

// Creates a result node; records parents and the backward rule only when
// recording is active and some input needs gradients.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_rule) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool need = false;
    if (g_grad_enabled) {
        for (const auto& t : inputs) need = need || t.node()->requires_grad;
    }
    if (need) {
        n->requires_grad = true;
        n->parents.reserve(inputs.size());
        for (const auto& t : inputs) n->parents.push_back(t.node());
        n->backward_rule = std::move(backward_rule);
    }
    return Tensor(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
}

}  // namespace

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0),
                            requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), v),
                            requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw DimensionError("Tensor::from: " + shape_to_string(shape) + " does not hold " +
                             std::to_string(data.size()) + " elements");
    }
    return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar_value(double v) { return from({1}, {v}); }

std::span<double> Tensor::mutable_data() { return node_->value; }

std::span<const double> Tensor::grad() const {
    if (node_->grad.empty()) throw ContractError("Tensor::grad: gradient not populated");
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

double Tensor::scalar() const {
    if (numel() != 1) throw ContractError("Tensor::scalar: tensor has " + std::to_string(numel()) + " elements");
    return node_->value[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
    const auto& sh = node_->shape;
    if (idx.size() != sh.size()) throw IndexError("Tensor::at: rank mismatch");
    int64_t flat = 0;
    size_t k = 0;
    for (int64_t i : idx) {
        if (i < 0 || i >= sh[k]) throw IndexError("Tensor::at: index out of range");
        flat = flat * sh[k] + i;
        ++k;
    }
    return node_->value[static_cast<size_t>(flat)];
}

bool grad_mode_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward: loss must be a scalar tensor");
    }
    // Iterative post-order DFS -> topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->backward_rule || p->requires_grad) {
                if (visited.insert(p).second) stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_rule) {
            n->ensure_grad();
            n->backward_rule(*n);
        }
    }
    // Tape is single-use: release interior structure so memory is reclaimed.
    for (Node* n : order) {
        if (n->backward_rule) {
            n->backward_rule = nullptr;
            n->parents.clear();
            n->grad.clear();
            n->grad.shrink_to_fit();
        }
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.data().begin(), a.data().end());
    auto bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (!p->requires_grad && !p->backward_rule) continue;
            p->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.data().begin(), a.data().end());
    auto bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad || pa->backward_rule) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad || pb->backward_rule) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto ad = a.data();
    auto bd = b.data();
    std::vector<double> out(ad.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad || pa->backward_rule) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
        }
        if (pb->requires_grad || pb->backward_rule) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= s;
    return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += s * self.grad[i];
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v += s;
    return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    });
}

Tensor add_last_axis(const Tensor& x, const Tensor& v) {
    if (v.rank() != 1 || x.shape().back() != v.dim(0)) {
        throw DimensionError("add_last_axis: " + shape_to_string(x.shape()) + " vs " +
                             shape_to_string(v.shape()));
    }
    const int64_t d = v.dim(0);
    auto xd = x.data();
    auto vd = v.data();
    std::vector<double> out(xd.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = xd[i] + vd[i % static_cast<size_t>(d)];
    return make_result(x.shape(), std::move(out), {x, v}, [d](Node& self) {
        auto& px = self.parents[0];
        auto& pv = self.parents[1];
        if (px->requires_grad || px->backward_rule) {
            px->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
        }
        if (pv->requires_grad || pv->backward_rule) {
            pv->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                pv->grad[i % static_cast<size_t>(d)] += self.grad[i];
        }
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) +
                             " and " + shape_to_string(b.shape()));
    }
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto ad = a.data();
    auto bd = b.data();
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
            const double av = ad[static_cast<size_t>(i * k + kk)];
            if (av == 0.0) continue;
            const double* brow = &bd[static_cast<size_t>(kk * n)];
            double* orow = &out[static_cast<size_t>(i * n)];
            for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad || pa->backward_rule) {
            pa->ensure_grad();
            // dA = dY * B^T
            for (int64_t i = 0; i < m; ++i)
                for (int64_t kk = 0; kk < k; ++kk) {
                    double acc = 0.0;
                    for (int64_t j = 0; j < n; ++j)
                        acc += self.grad[static_cast<size_t>(i * n + j)] *
                               pb->value[static_cast<size_t>(kk * n + j)];
                    pa->grad[static_cast<size_t>(i * k + kk)] += acc;
                }
        }
        if (pb->requires_grad || pb->backward_rule) {
            pb->ensure_grad();
            // dB = A^T * dY
            for (int64_t kk = 0; kk < k; ++kk)
                for (int64_t i = 0; i < m; ++i) {
                    const double av = pa->value[static_cast<size_t>(i * k + kk)];
                    if (av == 0.0) continue;
                    for (int64_t j = 0; j < n; ++j)
                        pb->grad[static_cast<size_t>(kk * n + j)] +=
                            av * self.grad[static_cast<size_t>(i * n + j)];
                }
        }
    });
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose2d: expects rank 2");
    const int64_t m = a.dim(0), n = a.dim(1);
    auto ad = a.data();
    std::vector<double> out(static_cast<size_t>(m * n));
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j)
            out[static_cast<size_t>(j * m + i)] = ad[static_cast<size_t>(i * n + j)];
    return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j)
                p->grad[static_cast<size_t>(i * n + j)] += self.grad[static_cast<size_t>(j * m + i)];
    });
}

Tensor softmax(const Tensor& x, size_t axis) {
    if (axis >= x.rank()) throw ContractError("softmax: axis out of range");
    const auto& sh = x.shape();
    const int64_t extent = sh[axis];
    int64_t inner = 1;
    for (size_t i = axis + 1; i < sh.size(); ++i) inner *= sh[i];
    int64_t outer = x.numel() / (extent * inner);
    auto xd = x.data();
    std::vector<double> out(xd.size());
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * extent * inner + in;
            double mx = -HUGE_VAL;
            for (int64_t e = 0; e < extent; ++e)
                mx = std::max(mx, xd[static_cast<size_t>(base + e * inner)]);
            double denom = 0.0;
            for (int64_t e = 0; e < extent; ++e) {
                const double v = std::exp(xd[static_cast<size_t>(base + e * inner)] - mx);
                out[static_cast<size_t>(base + e * inner)] = v;
                denom += v;
            }
            for (int64_t e = 0; e < extent; ++e)
                out[static_cast<size_t>(base + e * inner)] /= denom;
        }
    }
    return make_result(sh, std::move(out), {x}, [extent, inner, outer](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * extent * inner + in;
                double dot = 0.0;
                for (int64_t e = 0; e < extent; ++e) {
                    const auto i = static_cast<size_t>(base + e * inner);
                    dot += self.grad[i] * self.value[i];
                }
                for (int64_t e = 0; e < extent; ++e) {
                    const auto i = static_cast<size_t>(base + e * inner);
                    p->grad[i] += self.value[i] * (self.grad[i] - dot);
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const int64_t d = x.shape().back();
    if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != d || bias.dim(0) != d) {
        throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(d) + "]");
    }
    const int64_t rows = x.numel() / d;
    auto xd = x.data();
    auto gd = gain.data();
    auto bd = bias.data();
    std::vector<double> out(xd.size());
    // Per-row standardization cached for the backward rule.
    auto xhat = std::make_shared<std::vector<double>>(xd.size());
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = &xd[static_cast<size_t>(r * d)];
        double mean = 0.0;
        for (int64_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (int64_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[static_cast<size_t>(r)] = is;
        for (int64_t j = 0; j < d; ++j) {
            const auto i = static_cast<size_t>(r * d + j);
            (*xhat)[i] = (row[j] - mean) * is;
            out[i] = gd[j] * (*xhat)[i] + bd[j];
        }
    }
    return make_result(x.shape(), std::move(out), {x, gain, bias},
                       [d, rows, xhat, inv_std](Node& self) {
        auto& px = self.parents[0];
        auto& pg = self.parents[1];
        auto& pb = self.parents[2];
        if (pg->requires_grad || pg->backward_rule) {
            pg->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j)
                    pg->grad[static_cast<size_t>(j)] +=
                        self.grad[static_cast<size_t>(r * d + j)] * (*xhat)[static_cast<size_t>(r * d + j)];
        }
        if (pb->requires_grad || pb->backward_rule) {
            pb->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j)
                    pb->grad[static_cast<size_t>(j)] += self.grad[static_cast<size_t>(r * d + j)];
        }
        if (px->requires_grad || px->backward_rule) {
            px->ensure_grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double is = (*inv_std)[static_cast<size_t>(r)];
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (int64_t j = 0; j < d; ++j) {
                    const auto i = static_cast<size_t>(r * d + j);
                    const double dxh = self.grad[i] * pg->value[static_cast<size_t>(j)];
                    mean_dxhat += dxh;
                    mean_dxhat_xhat += dxh * (*xhat)[i];
                }
                mean_dxhat /= static_cast<double>(d);
                mean_dxhat_xhat /= static_cast<double>(d);
                for (int64_t j = 0; j < d; ++j) {
                    const auto i = static_cast<size_t>(r * d + j);
                    const double dxh = self.grad[i] * pg->value[static_cast<size_t>(j)];
                    px->grad[i] += is * (dxh - mean_dxhat - (*xhat)[i] * mean_dxhat_xhat);
                }
            }
        }
    });
}

Tensor gelu(const Tensor& x) {
    auto xd = x.data();
    std::vector<double> out(xd.size());
    constexpr double kInvSqrt2 = 0.7071067811865475;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = 0.5 * xd[i] * (1.0 + std::erf(xd[i] * kInvSqrt2));
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        constexpr double kInvSqrt2 = 0.7071067811865475;
        constexpr double kInvSqrt2Pi = 0.3989422804014327;
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const double v = p->value[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            p->grad[i] += self.grad[i] * (cdf + v * pdf);
        }
    });
}

Tensor conv1d_same(const Tensor& x, const Tensor& kernel) {
    if (x.rank() != 2 || kernel.rank() != 3) throw DimensionError("conv1d_same: expects x[T,Cin], k[K,Cin,Cout]");
    const int64_t T = x.dim(0), cin = x.dim(1);
    const int64_t K = kernel.dim(0), kcin = kernel.dim(1), cout = kernel.dim(2);
    if (K % 2 == 0) throw ConfigError("conv1d_same: kernel length must be odd, got " + std::to_string(K));
    if (kcin != cin) {
        throw DimensionError("conv1d_same: channel mismatch, input has " + std::to_string(cin) +
                             ", kernel expects " + std::to_string(kcin));
    }
    const int64_t pad = (K - 1) / 2;
    auto xd = x.data();
    auto kd = kernel.data();
    std::vector<double> out(static_cast<size_t>(T * cout), 0.0);
    for (int64_t t = 0; t < T; ++t) {
        for (int64_t dk = 0; dk < K; ++dk) {
            const int64_t src = t + dk - pad;
            if (src < 0 || src >= T) continue;
            for (int64_t ci = 0; ci < cin; ++ci) {
                const double xv = xd[static_cast<size_t>(src * cin + ci)];
                if (xv == 0.0) continue;
                const double* krow = &kd[static_cast<size_t>((dk * cin + ci) * cout)];
                double* orow = &out[static_cast<size_t>(t * cout)];
                for (int64_t co = 0; co < cout; ++co) orow[co] += xv * krow[co];
            }
        }
    }
    return make_result({T, cout}, std::move(out), {x, kernel}, [T, cin, K, cout, pad](Node& self) {
        auto& px = self.parents[0];
        auto& pk = self.parents[1];
        const bool need_x = px->requires_grad || px->backward_rule;
        const bool need_k = pk->requires_grad || pk->backward_rule;
        if (need_x) px->ensure_grad();
        if (need_k) pk->ensure_grad();
        for (int64_t t = 0; t < T; ++t) {
            for (int64_t dk = 0; dk < K; ++dk) {
                const int64_t src = t + dk - pad;
                if (src < 0 || src >= T) continue;
                for (int64_t ci = 0; ci < cin; ++ci) {
                    const double xv = px->value[static_cast<size_t>(src * cin + ci)];
                    const double* krow = &pk->value[static_cast<size_t>((dk * cin + ci) * cout)];
                    const double* grow = &self.grad[static_cast<size_t>(t * cout)];
                    if (need_x) {
                        double acc = 0.0;
                        for (int64_t co = 0; co < cout; ++co) acc += grow[co] * krow[co];
                        px->grad[static_cast<size_t>(src * cin + ci)] += acc;
                    }
                    if (need_k) {
                        double* kg = &pk->grad[static_cast<size_t>((dk * cin + ci) * cout)];
                        for (int64_t co = 0; co < cout; ++co) kg[co] += grow[co] * xv;
                    }
                }
            }
        }
    });
}

Tensor conv2d_same(const Tensor& x, const Tensor& kernel) {
    if (x.rank() != 3 || kernel.rank() != 4) {
        throw DimensionError("conv2d_same: expects x[H,W,Cin], k[k,k,Cin,Cout]");
    }
    const int64_t H = x.dim(0), W = x.dim(1), cin = x.dim(2);
    const int64_t kh = kernel.dim(0), kw = kernel.dim(1), kcin = kernel.dim(2), cout = kernel.dim(3);
    if (kh != kw) throw ConfigError("conv2d_same: kernel must be square");
    if (kh % 2 == 0) throw ConfigError("conv2d_same: kernel size must be odd, got " + std::to_string(kh));
    if (kcin != cin) {
        throw DimensionError("conv2d_same: channel mismatch, input has " + std::to_string(cin) +
                             ", kernel expects " + std::to_string(kcin));
    }
    const int64_t pad = (kh - 1) / 2;
    auto xd = x.data();
    auto kd = kernel.data();
    std::vector<double> out(static_cast<size_t>(H * W * cout), 0.0);
    for (int64_t h = 0; h < H; ++h) {
        for (int64_t w = 0; w < W; ++w) {
            double* orow = &out[static_cast<size_t>((h * W + w) * cout)];
            for (int64_t dh = 0; dh < kh; ++dh) {
                const int64_t sh = h + dh - pad;
                if (sh < 0 || sh >= H) continue;
                for (int64_t dw = 0; dw < kw; ++dw) {
                    const int64_t sw = w + dw - pad;
                    if (sw < 0 || sw >= W) continue;
                    const double* xrow = &xd[static_cast<size_t>((sh * W + sw) * cin)];
                    const double* kbase = &kd[static_cast<size_t>(((dh * kw + dw) * cin) * cout)];
                    for (int64_t ci = 0; ci < cin; ++ci) {
                        const double xv = xrow[ci];
                        if (xv == 0.0) continue;
                        const double* krow = kbase + ci * cout;
                        for (int64_t co = 0; co < cout; ++co) orow[co] += xv * krow[co];
                    }
                }
            }
        }
    }
    return make_result({H, W, cout}, std::move(out), {x, kernel},
                       [H, W, cin, kh, kw, cout, pad](Node& self) {
        auto& px = self.parents[0];
        auto& pk = self.parents[1];
        const bool need_x = px->requires_grad || px->backward_rule;
        const bool need_k = pk->requires_grad || pk->backward_rule;
        if (need_x) px->ensure_grad();
        if (need_k) pk->ensure_grad();
        for (int64_t h = 0; h < H; ++h) {
            for (int64_t w = 0; w < W; ++w) {
                const double* grow = &self.grad[static_cast<size_t>((h * W + w) * cout)];
                for (int64_t dh = 0; dh < kh; ++dh) {
                    const int64_t sh = h + dh - pad;
                    if (sh < 0 || sh >= H) continue;
                    for (int64_t dw = 0; dw < kw; ++dw) {
                        const int64_t sw = w + dw - pad;
                        if (sw < 0 || sw >= W) continue;
                        const size_t xbase = static_cast<size_t>((sh * W + sw) * cin);
                        const size_t kbase = static_cast<size_t>(((dh * kw + dw) * cin) * cout);
                        for (int64_t ci = 0; ci < cin; ++ci) {
                            const double* krow = &pk->value[kbase + static_cast<size_t>(ci * cout)];
                            if (need_x) {
                                double acc = 0.0;
                                for (int64_t co = 0; co < cout; ++co) acc += grow[co] * krow[co];
                                px->grad[xbase + static_cast<size_t>(ci)] += acc;
                            }
                            if (need_k) {
                                const double xv = px->value[xbase + static_cast<size_t>(ci)];
                                if (xv == 0.0) continue;
                                double* kg = &pk->grad[kbase + static_cast<size_t>(ci * cout)];
                                for (int64_t co = 0; co < cout; ++co) kg[co] += grow[co] * xv;
                            }
                        }
                    }
                }
            }
        }
    });
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    return make_result({1}, {acc}, {x}, [](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        const double g = self.grad[0];
        for (auto& pg : p->grad) pg += g;
    });
}

Tensor mean_squared_error(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "mean_squared_error");
    auto pd = pred.data();
    auto td = target.data();
    double acc = 0.0;
    for (size_t i = 0; i < pd.size(); ++i) {
        const double e = pd[i] - td[i];
        acc += e * e;
    }
    const double inv_n = 1.0 / static_cast<double>(pd.size());
    return make_result({1}, {acc * inv_n}, {pred, target}, [inv_n](Node& self) {
        auto& pp = self.parents[0];
        auto& pt = self.parents[1];
        const double g = self.grad[0];
        if (pp->requires_grad || pp->backward_rule) {
            pp->ensure_grad();
            for (size_t i = 0; i < pp->grad.size(); ++i)
                pp->grad[i] += g * 2.0 * inv_n * (pp->value[i] - pt->value[i]);
        }
        if (pt->requires_grad || pt->backward_rule) {
            pt->ensure_grad();
            for (size_t i = 0; i < pt->grad.size(); ++i)
                pt->grad[i] -= g * 2.0 * inv_n * (pp->value[i] - pt->value[i]);
        }
    });
}

Tensor reshape(const Tensor& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                             shape_to_string(new_shape));
    }
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(std::move(new_shape), std::move(out), {x}, [](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    });
}

Tensor take(const Tensor& x, Shape out_shape, std::vector<int64_t> src_index) {
    const int64_t n_out = shape_numel(out_shape);
    if (n_out != static_cast<int64_t>(src_index.size())) {
        throw DimensionError("take: index list does not match output shape");
    }
    const int64_t n_in = x.numel();
    auto xd = x.data();
    std::vector<double> out(static_cast<size_t>(n_out));
    for (int64_t i = 0; i < n_out; ++i) {
        const int64_t s = src_index[static_cast<size_t>(i)];
        if (s < -1 || s >= n_in) throw IndexError("take: source index out of range");
        out[static_cast<size_t>(i)] = s < 0 ? 0.0 : xd[static_cast<size_t>(s)];
    }
    auto idx = std::make_shared<std::vector<int64_t>>(std::move(src_index));
    return make_result(std::move(out_shape), std::move(out), {x}, [idx](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const int64_t s = (*idx)[i];
            if (s >= 0) p->grad[static_cast<size_t>(s)] += self.grad[i];
        }
    });
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
        throw DimensionError("concat_last_axis: expects matching leading extents");
    }
    const int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    auto ad = a.data();
    auto bd = b.data();
    std::vector<double> out(static_cast<size_t>(n * (ca + cb)));
    for (int64_t r = 0; r < n; ++r) {
        std::copy_n(&ad[static_cast<size_t>(r * ca)], ca, &out[static_cast<size_t>(r * (ca + cb))]);
        std::copy_n(&bd[static_cast<size_t>(r * cb)], cb, &out[static_cast<size_t>(r * (ca + cb) + ca)]);
    }
    return make_result({n, ca + cb}, std::move(out), {a, b}, [n, ca, cb](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad || pa->backward_rule) {
            pa->ensure_grad();
            for (int64_t r = 0; r < n; ++r)
                for (int64_t j = 0; j < ca; ++j)
                    pa->grad[static_cast<size_t>(r * ca + j)] +=
                        self.grad[static_cast<size_t>(r * (ca + cb) + j)];
        }
        if (pb->requires_grad || pb->backward_rule) {
            pb->ensure_grad();
            for (int64_t r = 0; r < n; ++r)
                for (int64_t j = 0; j < cb; ++j)
                    pb->grad[static_cast<size_t>(r * cb + j)] +=
                        self.grad[static_cast<size_t>(r * (ca + cb) + ca + j)];
        }
    });
}

Tensor stack_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("stack_rows: no parts");
    const int64_t cols = parts[0].dim(1);
    int64_t rows = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(1) != cols) throw DimensionError("stack_rows: column mismatch");
        rows += p.dim(0);
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(rows * cols));
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    return make_result({rows, cols}, std::move(out), std::move(inputs), [](Node& self) {
        size_t offset = 0;
        for (auto& p : self.parents) {
            if (p->requires_grad || p->backward_rule) {
                p->ensure_grad();
                for (size_t i = 0; i < p->value.size(); ++i) p->grad[i] += self.grad[offset + i];
            }
            offset += p->value.size();
        }
    });
}

Tensor elementwise_hypot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "elementwise_hypot");
    auto ad = a.data();
    auto bd = b.data();
    std::vector<double> out(ad.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(ad[i], bd[i]);
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        const bool need_a = pa->requires_grad || pa->backward_rule;
        const bool need_b = pb->requires_grad || pb->backward_rule;
        if (need_a) pa->ensure_grad();
        if (need_b) pb->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const double h = self.value[i];
            if (h == 0.0) continue;
            if (need_a) pa->grad[i] += self.grad[i] * pa->value[i] / h;
            if (need_b) pb->grad[i] += self.grad[i] * pb->value[i] / h;
        }
    });
}

Tensor mean_last_axis(const Tensor& x) {
    if (x.rank() < 1) throw DimensionError("mean_last_axis: scalar input");
    const int64_t d = x.shape().back();
    const int64_t rows = x.numel() / d;
    auto xd = x.data();
    std::vector<double> out(static_cast<size_t>(rows), 0.0);
    for (int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int64_t j = 0; j < d; ++j) acc += xd[static_cast<size_t>(r * d + j)];
        out[static_cast<size_t>(r)] = acc / static_cast<double>(d);
    }
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    if (out_shape.empty()) out_shape.push_back(1);
    return make_result(std::move(out_shape), std::move(out), {x}, [d, rows](Node& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        const double inv = 1.0 / static_cast<double>(d);
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < d; ++j)
                p->grad[static_cast<size_t>(r * d + j)] += self.grad[static_cast<size_t>(r)] * inv;
    });
}

Tensor weighted_sum(std::span<const Tensor> ys, const Tensor& w) {
    if (ys.empty()) throw ContractError("weighted_sum: no branches");
    if (w.rank() != 1 || w.dim(0) != static_cast<int64_t>(ys.size())) {
        throw DimensionError("weighted_sum: weight vector must have one entry per branch");
    }
    const Shape& sh = ys[0].shape();
    for (const auto& y : ys) check_same_shape(y, ys[0], "weighted_sum");
    auto wd = w.data();
    std::vector<double> out(static_cast<size_t>(ys[0].numel()), 0.0);
    for (size_t j = 0; j < ys.size(); ++j) {
        auto yd = ys[j].data();
        for (size_t i = 0; i < out.size(); ++i) out[i] += wd[j] * yd[i];
    }
    std::vector<Tensor> inputs(ys.begin(), ys.end());
    inputs.push_back(w);
    const size_t nb = ys.size();
    return make_result(sh, std::move(out), std::move(inputs), [nb](Node& self) {
        auto& pw = self.parents[nb];
        for (size_t j = 0; j < nb; ++j) {
            auto& py = self.parents[j];
            if (py->requires_grad || py->backward_rule) {
                py->ensure_grad();
                const double wv = pw->value[j];
                for (size_t i = 0; i < self.grad.size(); ++i) py->grad[i] += wv * self.grad[i];
            }
        }
        if (pw->requires_grad || pw->backward_rule) {
            pw->ensure_grad();
            for (size_t j = 0; j < nb; ++j) {
                auto& py = self.parents[j];
                double acc = 0.0;
                for (size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * py->value[i];
                pw->grad[j] += acc;
            }
        }
    });
}

}  // namespace arrivalnet
