// SPDX-License-Identifier: Apache-2.0
#include "arrivalnet/backbone.hpp"

#include <cmath>

namespace arrivalnet {

namespace {

// Zero-pads a [r x p x d] grid tensor to [R x P x d].
Tensor pad_grid(const Tensor& x, int64_t R, int64_t P) {
    const int64_t r = x.dim(0), p = x.dim(1), d = x.dim(2);
    if (r == R && p == P) return x;
    std::vector<int64_t> idx(static_cast<size_t>(R * P * d), -1);
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < p; ++j)
            for (int64_t c = 0; c < d; ++c)
                idx[static_cast<size_t>((i * P + j) * d + c)] = (i * p + j) * d + c;
    return take(x, {R, P, d}, std::move(idx));
}

Tensor crop_grid(const Tensor& x, int64_t r, int64_t p) {
    const int64_t R = x.dim(0), P = x.dim(1), d = x.dim(2);
    if (r == R && p == P) return x;
    std::vector<int64_t> idx(static_cast<size_t>(r * p * d));
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < p; ++j)
            for (int64_t c = 0; c < d; ++c)
                idx[static_cast<size_t>((i * p + j) * d + c)] = (i * P + j) * d + c;
    return take(x, {r, p, d}, std::move(idx));
}

// out(i, j) = in((i + s) mod R, (j + s) mod P): content moves up-left by s.
Tensor roll_grid(const Tensor& x, int64_t s) {
    if (s == 0) return x;
    const int64_t R = x.dim(0), P = x.dim(1), d = x.dim(2);
    std::vector<int64_t> idx(static_cast<size_t>(R * P * d));
    for (int64_t i = 0; i < R; ++i) {
        const int64_t si = ((i + s) % R + R) % R;
        for (int64_t j = 0; j < P; ++j) {
            const int64_t sj = ((j + s) % P + P) % P;
            for (int64_t c = 0; c < d; ++c)
                idx[static_cast<size_t>((i * P + j) * d + c)] = (si * P + sj) * d + c;
        }
    }
    return take(x, {R, P, d}, std::move(idx));
}

// Region band of a rolled-grid coordinate: the cyclic shift splits each axis
// into bulk, tail and wrapped bands.
int shift_band(int64_t i, int64_t extent, int64_t m, int64_t s) {
    if (i < extent - m) return 0;
    if (i < extent - s) return 1;
    return 2;
}

Tensor slice_rows(const Tensor& x, int64_t start, int64_t count) {
    const int64_t cols = x.dim(1);
    std::vector<int64_t> idx(static_cast<size_t>(count * cols));
    for (int64_t i = 0; i < count * cols; ++i) idx[static_cast<size_t>(i)] = start * cols + i;
    return take(x, {count, cols}, std::move(idx));
}

Tensor slice_cols(const Tensor& x, int64_t start, int64_t count) {
    const int64_t rows = x.dim(0), cols = x.dim(1);
    std::vector<int64_t> idx(static_cast<size_t>(rows * count));
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < count; ++j)
            idx[static_cast<size_t>(r * count + j)] = r * cols + start + j;
    return take(x, {rows, count}, std::move(idx));
}

}  // namespace

Grid2D inception_forward(const Grid2D& g, const InceptionParams& params) {
    if (params.layer1.empty() || params.layer2.empty()) {
        throw ConfigError("inception_forward: empty kernel set");
    }
    Tensor l1 = conv2d_same(g.data, params.layer1[0]);
    for (size_t i = 1; i < params.layer1.size(); ++i)
        l1 = add(l1, conv2d_same(g.data, params.layer1[i]));
    Tensor a = gelu(l1);
    Tensor l2 = conv2d_same(a, params.layer2[0]);
    for (size_t i = 1; i < params.layer2.size(); ++i)
        l2 = add(l2, conv2d_same(a, params.layer2[i]));
    Grid2D out = g;
    out.data = l2;
    return out;
}

std::vector<Tensor> build_shift_masks(int rows, int cols, int m) {
    if (rows % m != 0 || cols % m != 0) {
        throw ContractError("build_shift_masks: grid extents must be multiples of the window size");
    }
    const int64_t s = m / 2;
    const int64_t wr = rows / m, wc = cols / m;
    const int64_t m2 = static_cast<int64_t>(m) * m;
    std::vector<Tensor> masks;
    masks.reserve(static_cast<size_t>(wr * wc));
    for (int64_t wi = 0; wi < wr; ++wi) {
        for (int64_t wj = 0; wj < wc; ++wj) {
            std::vector<int> labels(static_cast<size_t>(m2));
            for (int64_t a = 0; a < m; ++a)
                for (int64_t b = 0; b < m; ++b)
                    labels[static_cast<size_t>(a * m + b)] =
                        3 * shift_band(wi * m + a, rows, m, s) + shift_band(wj * m + b, cols, m, s);
            std::vector<double> mk(static_cast<size_t>(m2 * m2), 0.0);
            for (int64_t i = 0; i < m2; ++i)
                for (int64_t j = 0; j < m2; ++j)
                    if (labels[static_cast<size_t>(i)] != labels[static_cast<size_t>(j)])
                        mk[static_cast<size_t>(i * m2 + j)] = kMaskBlocked;
            masks.push_back(Tensor::from({m2, m2}, std::move(mk)));
        }
    }
    return masks;
}

Grid2D window_attention(const Grid2D& g, const AttentionProjections& proj, int window_size,
                        int head_count, int d_model, bool shifted) {
    const int64_t r = g.data.dim(0), p = g.data.dim(1), d = g.data.dim(2);
    if (d != d_model) throw DimensionError("window_attention: channel mismatch");
    if (window_size < 1) throw ConfigError("window_attention: window size must be >= 1");
    if (head_count < 1 || d_model % head_count != 0) {
        throw ConfigError("window_attention: head count must divide d_model");
    }
    const int64_t m = window_size;
    const int64_t R = (r + m - 1) / m * m;
    const int64_t P = (p + m - 1) / m * m;
    const int64_t s = shifted ? m / 2 : 0;

    Tensor x = pad_grid(g.data, R, P);
    x = roll_grid(x, s);

    std::vector<Tensor> masks;
    if (shifted && s > 0) masks = build_shift_masks(static_cast<int>(R), static_cast<int>(P), window_size);

    const int64_t wr = R / m, wc = P / m, nw = wr * wc, m2 = m * m;
    // Gather all windows into [nw*m2 x d] so projections run as one matmul.
    std::vector<int64_t> part_idx(static_cast<size_t>(nw * m2 * d));
    for (int64_t w = 0; w < nw; ++w) {
        const int64_t wi = w / wc, wj = w % wc;
        for (int64_t a = 0; a < m; ++a)
            for (int64_t b = 0; b < m; ++b)
                for (int64_t c = 0; c < d; ++c)
                    part_idx[static_cast<size_t>(((w * m2 + a * m + b) * d) + c)] =
                        (((wi * m + a) * P) + (wj * m + b)) * d + c;
    }
    Tensor xw = take(x, {nw * m2, d}, part_idx);
    Tensor q_all = matmul(xw, proj.wq);
    Tensor k_all = matmul(xw, proj.wk);
    Tensor v_all = matmul(xw, proj.wv);

    const double att_scale = 1.0 / std::sqrt(static_cast<double>(d_model));
    const int64_t dh = d / head_count;
    std::vector<Tensor> window_outputs;
    window_outputs.reserve(static_cast<size_t>(nw));
    for (int64_t w = 0; w < nw; ++w) {
        Tensor q = slice_rows(q_all, w * m2, m2);
        Tensor k = slice_rows(k_all, w * m2, m2);
        Tensor v = slice_rows(v_all, w * m2, m2);
        Tensor merged;
        for (int64_t h = 0; h < head_count; ++h) {
            Tensor qh = head_count == 1 ? q : slice_cols(q, h * dh, dh);
            Tensor kh = head_count == 1 ? k : slice_cols(k, h * dh, dh);
            Tensor vh = head_count == 1 ? v : slice_cols(v, h * dh, dh);
            Tensor scores = scale(matmul(qh, transpose2d(kh)), att_scale);
            if (!masks.empty()) scores = add(scores, masks[static_cast<size_t>(w)]);
            Tensor oh = matmul(softmax(scores, 1), vh);
            merged = merged.defined() ? concat_last_axis(merged, oh) : oh;
        }
        window_outputs.push_back(merged);
    }
    Tensor stacked = matmul(stack_rows(window_outputs), proj.wo);

    // Scatter windows back to grid positions (inverse of the partition).
    std::vector<int64_t> merge_idx(static_cast<size_t>(R * P * d));
    for (int64_t w = 0; w < nw; ++w) {
        const int64_t wi = w / wc, wj = w % wc;
        for (int64_t a = 0; a < m; ++a)
            for (int64_t b = 0; b < m; ++b)
                for (int64_t c = 0; c < d; ++c)
                    merge_idx[static_cast<size_t>((((wi * m + a) * P) + (wj * m + b)) * d + c)] =
                        (w * m2 + a * m + b) * d + c;
    }
    Tensor y = take(stacked, {R, P, d}, std::move(merge_idx));
    y = roll_grid(y, -s);
    y = crop_grid(y, r, p);

    Grid2D out = g;
    out.data = y;
    return out;
}

Grid2D swin_layer_forward(const Grid2D& g, const SwinParams& params) {
    constexpr double kLnEps = 1e-5;
    Tensor x = g.data;
    const int64_t r = x.dim(0), p = x.dim(1), d = x.dim(2);
    Grid2D cur = g;
    for (int sub = 0; sub < 2; ++sub) {
        const AttentionSublayer& sl = params.sublayers[sub];
        cur.data = layer_norm(x, sl.ln_attn_gain, sl.ln_attn_bias, kLnEps);
        Grid2D att = window_attention(cur, sl.attn, params.window_size, params.head_count,
                                      params.d_model, /*shifted=*/sub == 1);
        Tensor x1 = add(att.data, x);
        Tensor h = layer_norm(x1, sl.ln_mlp_gain, sl.ln_mlp_bias, kLnEps);
        h = reshape(h, {r * p, d});
        h = add_last_axis(matmul(h, sl.mlp_w1), sl.mlp_b1);
        h = gelu(h);
        h = add_last_axis(matmul(h, sl.mlp_w2), sl.mlp_b2);
        h = reshape(h, {r, p, d});
        x = add(h, x1);
    }
    Grid2D out = g;
    out.data = x;
    return out;
}

}  // namespace arrivalnet
