#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dhanshr/tensor.hpp"

namespace dhanshr {

// Row-wise softmax over an R x K matrix, in place. Max subtraction keeps the
// exponentials bounded, so the result is invariant to a per-row constant shift.
template <typename T>
void softmax_rows_inplace(std::span<T> m, int rows, int cols) {
    if (rows * static_cast<std::size_t>(cols) != m.size())
        throw std::invalid_argument("softmax_rows: size mismatch");
    for (int r = 0; r < rows; ++r) {
        T* row = m.data() + static_cast<std::size_t>(r) * cols;
        T mx = row[0];
        for (int k = 1; k < cols; ++k) mx = std::max(mx, row[k]);
        T sum = T(0);
        for (int k = 0; k < cols; ++k) {
            row[k] = std::exp(row[k] - mx);
            sum += row[k];
        }
        for (int k = 0; k < cols; ++k) row[k] /= sum;
    }
}

template <typename T>
std::vector<T> softmax_rows(const std::vector<T>& m, int rows, int cols) {
    std::vector<T> out = m;
    softmax_rows_inplace(std::span<T>(out), rows, cols);
    return out;
}

// Exact-erf GELU.
template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_derivative(T x) {
    const T inv_sqrt2 = T(1) / std::sqrt(T(2));
    const T inv_sqrt2pi = T(0.3989422804014326779399460599343818684759L);
    return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) + x * inv_sqrt2pi * std::exp(-x * x / T(2));
}

template <typename T>
FeatureMap<T> gelu_map(const FeatureMap<T>& m) {
    FeatureMap<T> out = m;
    for (auto& v : out.data) v = gelu(v);
    return out;
}

template <typename T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// Per-channel LayerNorm affine parameters.
template <typename T>
struct LayerNormParams {
    std::vector<T> gamma;
    std::vector<T> beta;

    LayerNormParams() = default;
    explicit LayerNormParams(int channels)
        : gamma(channels, T(1)), beta(channels, T(0)) {}
};

// Normalizes the channel vector at every spatial location to zero mean and
// unit variance (population statistics), then applies the per-channel affine.
template <typename T>
FeatureMap<T> layer_norm_channel(const FeatureMap<T>& input,
                                 const LayerNormParams<T>& p,
                                 T eps = T(1e-8)) {
    const int C = input.channels;
    if (C < 1) throw std::invalid_argument("layer_norm_channel: need >= 1 channel");
    if (static_cast<int>(p.gamma.size()) != C || static_cast<int>(p.beta.size()) != C)
        throw std::invalid_argument("layer_norm_channel: affine size mismatch");

    FeatureMap<T> out(C, input.height, input.width);
    const std::size_t plane = static_cast<std::size_t>(input.height) * input.width;
    for (std::size_t pix = 0; pix < plane; ++pix) {
        T mean = T(0);
        for (int c = 0; c < C; ++c) mean += input.data[c * plane + pix];
        mean /= T(C);
        T var = T(0);
        for (int c = 0; c < C; ++c) {
            const T d = input.data[c * plane + pix] - mean;
            var += d * d;
        }
        var /= T(C);
        const T inv_std = T(1) / std::sqrt(var + eps);
        for (int c = 0; c < C; ++c) {
            const T xhat = (input.data[c * plane + pix] - mean) * inv_std;
            out.data[c * plane + pix] = xhat * p.gamma[c] + p.beta[c];
        }
    }
    return out;
}

template <typename T>
struct LayerNormGrads {
    FeatureMap<T> d_input;
    std::vector<T> d_gamma;
    std::vector<T> d_beta;
};

// Analytic backward for layer_norm_channel.
template <typename T>
LayerNormGrads<T> layer_norm_channel_backward(const FeatureMap<T>& input,
                                              const LayerNormParams<T>& p,
                                              const FeatureMap<T>& upstream,
                                              T eps = T(1e-8)) {
    const int C = input.channels;
    if (!input.same_shape(upstream))
        throw std::invalid_argument("layer_norm_channel_backward: shape mismatch");

    LayerNormGrads<T> g{FeatureMap<T>(C, input.height, input.width),
                        std::vector<T>(C, T(0)), std::vector<T>(C, T(0))};
    const std::size_t plane = static_cast<std::size_t>(input.height) * input.width;
    std::vector<T> xhat(C);
    for (std::size_t pix = 0; pix < plane; ++pix) {
        T mean = T(0);
        for (int c = 0; c < C; ++c) mean += input.data[c * plane + pix];
        mean /= T(C);
        T var = T(0);
        for (int c = 0; c < C; ++c) {
            const T d = input.data[c * plane + pix] - mean;
            var += d * d;
        }
        var /= T(C);
        const T inv_std = T(1) / std::sqrt(var + eps);

        T sum_gdy = T(0), sum_gdy_xhat = T(0);
        for (int c = 0; c < C; ++c) {
            xhat[c] = (input.data[c * plane + pix] - mean) * inv_std;
            const T dy = upstream.data[c * plane + pix];
            g.d_gamma[c] += dy * xhat[c];
            g.d_beta[c] += dy;
            const T gdy = p.gamma[c] * dy;
            sum_gdy += gdy;
            sum_gdy_xhat += gdy * xhat[c];
        }
        for (int c = 0; c < C; ++c) {
            const T gdy = p.gamma[c] * upstream.data[c * plane + pix];
            g.d_input.data[c * plane + pix] =
                (gdy - sum_gdy / T(C) - xhat[c] * sum_gdy_xhat / T(C)) * inv_std;
        }
    }
    return g;
}

}  // namespace dhanshr
