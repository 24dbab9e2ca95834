#pragma once

#include <stdexcept>
#include <vector>

#include "dhanshr/attention.hpp"
#include "dhanshr/ops.hpp"
#include "dhanshr/tensor.hpp"
#include "dhanshr/windowing.hpp"

namespace dhanshr {

template <typename T>
struct WindowedAttnGrads {
    WindowedTensor<T> d_q, d_k, d_v;
    T d_tau = T(0);  // channel core only
};

template <typename T>
struct MapAttnGrads {
    FeatureMap<T> d_q, d_k, d_v;
};

namespace attndetail {

// Backward through a row softmax: dS[i,j] = A[i,j] * (dA[i,j] - sum_k dA[i,k] A[i,k]).
template <typename T>
void softmax_rows_backward(const std::vector<T>& a, std::vector<T>& da, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * cols;
        T inner = T(0);
        for (int k = 0; k < cols; ++k) inner += da[base + k] * a[base + k];
        for (int j = 0; j < cols; ++j) da[base + j] = a[base + j] * (da[base + j] - inner);
    }
}

}  // namespace attndetail

// Analytic gradients of the masked pixel-attention core w.r.t. Q, K, V.
// The mask is additive constants and needs no gradient.
template <typename T>
WindowedAttnGrads<T> pixel_window_attention_backward(
    const WindowedTensor<T>& q, const WindowedTensor<T>& k, const WindowedTensor<T>& v,
    const AttentionMask* mask, T divisor, const WindowedTensor<T>& upstream) {
    attndetail::require_same_geometry(q, upstream);
    const int nw = q.n_windows, C = q.channels, area = q.window_area;

    WindowedAttnGrads<T> g;
    g.d_q = q;
    g.d_k = k;
    g.d_v = v;
    std::fill(g.d_q.data.begin(), g.d_q.data.end(), T(0));
    std::fill(g.d_k.data.begin(), g.d_k.data.end(), T(0));
    std::fill(g.d_v.data.begin(), g.d_v.data.end(), T(0));

    std::vector<T> a(static_cast<std::size_t>(area) * area);
    std::vector<T> da(a.size());
    for (int w = 0; w < nw; ++w) {
        for (int i = 0; i < area; ++i)
            for (int j = 0; j < area; ++j) {
                T acc = T(0);
                for (int c = 0; c < C; ++c) acc += q.at(w, c, i) * k.at(w, c, j);
                acc /= divisor;
                if (mask) acc += static_cast<T>(mask->at(w, i, j));
                a[static_cast<std::size_t>(i) * area + j] = acc;
            }
        softmax_rows_inplace(std::span<T>(a), area, area);

        for (int i = 0; i < area; ++i)
            for (int j = 0; j < area; ++j) {
                T acc = T(0);
                for (int c = 0; c < C; ++c) acc += upstream.at(w, c, i) * v.at(w, c, j);
                da[static_cast<std::size_t>(i) * area + j] = acc;
            }
        for (int c = 0; c < C; ++c)
            for (int j = 0; j < area; ++j) {
                T acc = T(0);
                for (int i = 0; i < area; ++i)
                    acc += upstream.at(w, c, i) * a[static_cast<std::size_t>(i) * area + j];
                g.d_v.at(w, c, j) = acc;
            }

        attndetail::softmax_rows_backward(a, da, area, area);

        for (int c = 0; c < C; ++c)
            for (int i = 0; i < area; ++i) {
                T acc = T(0);
                for (int j = 0; j < area; ++j)
                    acc += da[static_cast<std::size_t>(i) * area + j] * k.at(w, c, j);
                g.d_q.at(w, c, i) = acc / divisor;
            }
        for (int c = 0; c < C; ++c)
            for (int j = 0; j < area; ++j) {
                T acc = T(0);
                for (int i = 0; i < area; ++i)
                    acc += da[static_cast<std::size_t>(i) * area + j] * q.at(w, c, i);
                g.d_k.at(w, c, j) = acc / divisor;
            }
    }
    return g;
}

// Analytic gradients of the channel-attention core w.r.t. Q, K, V and the
// temperature itself (not its raw parameterization).
template <typename T>
WindowedAttnGrads<T> channel_window_attention_backward(
    const WindowedTensor<T>& q, const WindowedTensor<T>& k, const WindowedTensor<T>& v, T tau,
    const WindowedTensor<T>& upstream) {
    attndetail::require_same_geometry(q, upstream);
    const int nw = q.n_windows, C = q.channels, area = q.window_area;

    WindowedAttnGrads<T> g;
    g.d_q = q;
    g.d_k = k;
    g.d_v = v;
    std::fill(g.d_q.data.begin(), g.d_q.data.end(), T(0));
    std::fill(g.d_k.data.begin(), g.d_k.data.end(), T(0));
    std::fill(g.d_v.data.begin(), g.d_v.data.end(), T(0));

    std::vector<T> s(static_cast<std::size_t>(C) * C);
    std::vector<T> a(s.size());
    std::vector<T> da(s.size());
    for (int w = 0; w < nw; ++w) {
        for (int i = 0; i < C; ++i)
            for (int j = 0; j < C; ++j) {
                T acc = T(0);
                for (int p = 0; p < area; ++p) acc += q.at(w, i, p) * k.at(w, j, p);
                s[static_cast<std::size_t>(i) * C + j] = acc / tau;
            }
        a = s;
        softmax_rows_inplace(std::span<T>(a), C, C);

        for (int i = 0; i < C; ++i)
            for (int j = 0; j < C; ++j) {
                T acc = T(0);
                for (int p = 0; p < area; ++p) acc += upstream.at(w, i, p) * v.at(w, j, p);
                da[static_cast<std::size_t>(i) * C + j] = acc;
            }
        for (int j = 0; j < C; ++j)
            for (int p = 0; p < area; ++p) {
                T acc = T(0);
                for (int i = 0; i < C; ++i)
                    acc += a[static_cast<std::size_t>(i) * C + j] * upstream.at(w, i, p);
                g.d_v.at(w, j, p) = acc;
            }

        attndetail::softmax_rows_backward(a, da, C, C);

        // S = S0 / tau, so dL/dtau = -(1/tau) * sum dS . S
        for (std::size_t idx = 0; idx < da.size(); ++idx) g.d_tau -= da[idx] * s[idx] / tau;

        for (int i = 0; i < C; ++i)
            for (int p = 0; p < area; ++p) {
                T acc = T(0);
                for (int j = 0; j < C; ++j)
                    acc += da[static_cast<std::size_t>(i) * C + j] * k.at(w, j, p);
                g.d_q.at(w, i, p) = acc / tau;
            }
        for (int j = 0; j < C; ++j)
            for (int p = 0; p < area; ++p) {
                T acc = T(0);
                for (int i = 0; i < C; ++i)
                    acc += da[static_cast<std::size_t>(i) * C + j] * q.at(w, i, p);
                g.d_k.at(w, j, p) = acc / tau;
            }
    }
    return g;
}

// Analytic gradients of the multi-head channel-attention core w.r.t. the
// projected Q, K, V maps.
template <typename T>
MapAttnGrads<T> cca_multihead_core_backward(const FeatureMap<T>& q, const FeatureMap<T>& k,
                                            const FeatureMap<T>& v, int heads,
                                            const FeatureMap<T>& upstream) {
    if (!q.same_shape(upstream))
        throw std::invalid_argument("cca_multihead_core_backward: shape mismatch");
    const int C = q.channels;
    if (heads < 1 || C % heads != 0)
        throw std::invalid_argument("cca_multihead_core_backward: bad head count");
    const int ch = C / heads;
    const std::size_t n = static_cast<std::size_t>(q.height) * q.width;
    const T divisor = std::sqrt(static_cast<T>(ch));

    MapAttnGrads<T> g{FeatureMap<T>(C, q.height, q.width), FeatureMap<T>(C, q.height, q.width),
                      FeatureMap<T>(C, q.height, q.width)};

    std::vector<T> a(static_cast<std::size_t>(ch) * ch);
    std::vector<T> da(a.size());
    for (int h = 0; h < heads; ++h) {
        const int base = h * ch;
        for (int i = 0; i < ch; ++i)
            for (int j = 0; j < ch; ++j) {
                T acc = T(0);
                for (std::size_t px = 0; px < n; ++px)
                    acc += q.data[(base + i) * n + px] * k.data[(base + j) * n + px];
                a[static_cast<std::size_t>(i) * ch + j] = acc / divisor;
            }
        softmax_rows_inplace(std::span<T>(a), ch, ch);

        for (int i = 0; i < ch; ++i)
            for (int j = 0; j < ch; ++j) {
                T acc = T(0);
                for (std::size_t px = 0; px < n; ++px)
                    acc += upstream.data[(base + i) * n + px] * v.data[(base + j) * n + px];
                da[static_cast<std::size_t>(i) * ch + j] = acc;
            }
        for (int j = 0; j < ch; ++j)
            for (std::size_t px = 0; px < n; ++px) {
                T acc = T(0);
                for (int i = 0; i < ch; ++i)
                    acc += a[static_cast<std::size_t>(i) * ch + j] * upstream.data[(base + i) * n + px];
                g.d_v.data[(base + j) * n + px] = acc;
            }

        attndetail::softmax_rows_backward(a, da, ch, ch);

        for (int i = 0; i < ch; ++i)
            for (std::size_t px = 0; px < n; ++px) {
                T acc = T(0);
                for (int j = 0; j < ch; ++j)
                    acc += da[static_cast<std::size_t>(i) * ch + j] * k.data[(base + j) * n + px];
                g.d_q.data[(base + i) * n + px] = acc / divisor;
            }
        for (int j = 0; j < ch; ++j)
            for (std::size_t px = 0; px < n; ++px) {
                T acc = T(0);
                for (int i = 0; i < ch; ++i)
                    acc += da[static_cast<std::size_t>(i) * ch + j] * q.data[(base + i) * n + px];
                g.d_k.data[(base + j) * n + px] = acc / divisor;
            }
    }
    return g;
}

}  // namespace dhanshr
