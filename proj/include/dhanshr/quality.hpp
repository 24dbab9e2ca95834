#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dhanshr/tensor.hpp"

namespace dhanshr {

enum class SsimMode { global_stats, windowed };

// Structural-similarity constants. Global mode uses image-wide statistics per
// channel; windowed mode is mean-SSIM with a Gaussian window. For images
// smaller than the nominal window the side is clamped to min(11, H, W) so
// small inputs remain scoreable.
struct SsimParams {
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    SsimMode mode = SsimMode::windowed;
    int window = 11;
    double sigma = 1.5;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// Composite objective weights: w_f on the MSE term, w_s on the structural term.
struct LossWeights {
    double w_f = 1.0;
    double w_s = 0.4;
};

template <typename T>
T mse(const FeatureMap<T>& a, const FeatureMap<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
    T acc = T(0);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const T d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<T>(a.data.size());
}

// 10*log10(max^2 / MSE); identical inputs give +inf (capped when written to
// reports, see eval.hpp).
template <typename T>
T psnr(const FeatureMap<T>& a, const FeatureMap<T>& b, T max_value) {
    if (!(max_value > T(0))) throw std::invalid_argument("psnr: max_value must be > 0");
    const T m = mse(a, b);
    if (m == T(0)) return std::numeric_limits<T>::infinity();
    return T(10) * std::log10(max_value * max_value / m);
}

namespace qualitydetail {

template <typename T>
struct ChannelStats {
    T mu_d, mu_g, var_d, var_g, cov;
};

template <typename T>
ChannelStats<T> global_stats(const FeatureMap<T>& d, const FeatureMap<T>& g, int c) {
    const std::size_t n = static_cast<std::size_t>(d.height) * d.width;
    const T* pd = d.data.data() + c * n;
    const T* pg = g.data.data() + c * n;
    ChannelStats<T> s{T(0), T(0), T(0), T(0), T(0)};
    for (std::size_t i = 0; i < n; ++i) {
        s.mu_d += pd[i];
        s.mu_g += pg[i];
    }
    s.mu_d /= static_cast<T>(n);
    s.mu_g /= static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T dd = pd[i] - s.mu_d;
        const T dg = pg[i] - s.mu_g;
        s.var_d += dd * dd;
        s.var_g += dg * dg;
        s.cov += dd * dg;
    }
    s.var_d /= static_cast<T>(n);
    s.var_g /= static_cast<T>(n);
    s.cov /= static_cast<T>(n);
    return s;
}

template <typename T>
T ssim_from_stats(const ChannelStats<T>& s, T c1, T c2) {
    const T a1 = T(2) * s.mu_d * s.mu_g + c1;
    const T a2 = T(2) * s.cov + c2;
    const T b1 = s.mu_d * s.mu_d + s.mu_g * s.mu_g + c1;
    const T b2 = s.var_d + s.var_g + c2;
    return (a1 * a2) / (b1 * b2);
}

template <typename T>
std::vector<T> gaussian_window(int side, T sigma) {
    std::vector<T> w(static_cast<std::size_t>(side) * side);
    const T center = (static_cast<T>(side) - T(1)) / T(2);
    T sum = T(0);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const T dy = static_cast<T>(y) - center;
            const T dx = static_cast<T>(x) - center;
            const T v = std::exp(-(dy * dy + dx * dx) / (T(2) * sigma * sigma));
            w[static_cast<std::size_t>(y) * side + x] = v;
            sum += v;
        }
    for (auto& v : w) v /= sum;
    return w;
}

}  // namespace qualitydetail

template <typename T>
T ssim_global(const FeatureMap<T>& d, const FeatureMap<T>& g, const SsimParams& p) {
    if (!d.same_shape(g)) throw std::invalid_argument("ssim: shape mismatch");
    const T c1 = static_cast<T>(p.c1());
    const T c2 = static_cast<T>(p.c2());
    T acc = T(0);
    for (int c = 0; c < d.channels; ++c)
        acc += qualitydetail::ssim_from_stats(qualitydetail::global_stats(d, g, c), c1, c2);
    return acc / static_cast<T>(d.channels);
}

// Mean-SSIM over Gaussian-weighted local windows at every valid (fully
// inside) position, averaged over positions and channels.
template <typename T>
T ssim_windowed(const FeatureMap<T>& d, const FeatureMap<T>& g, const SsimParams& p) {
    if (!d.same_shape(g)) throw std::invalid_argument("ssim: shape mismatch");
    const int side = std::min({p.window, d.height, d.width});
    const auto w = qualitydetail::gaussian_window<T>(side, static_cast<T>(p.sigma));
    const T c1 = static_cast<T>(p.c1());
    const T c2 = static_cast<T>(p.c2());

    T acc = T(0);
    std::size_t count = 0;
    for (int c = 0; c < d.channels; ++c)
        for (int y = 0; y + side <= d.height; ++y)
            for (int x = 0; x + side <= d.width; ++x) {
                T mu_d = T(0), mu_g = T(0);
                for (int dy = 0; dy < side; ++dy)
                    for (int dx = 0; dx < side; ++dx) {
                        const T wv = w[static_cast<std::size_t>(dy) * side + dx];
                        mu_d += wv * d.at(c, y + dy, x + dx);
                        mu_g += wv * g.at(c, y + dy, x + dx);
                    }
                T var_d = T(0), var_g = T(0), cov = T(0);
                for (int dy = 0; dy < side; ++dy)
                    for (int dx = 0; dx < side; ++dx) {
                        const T wv = w[static_cast<std::size_t>(dy) * side + dx];
                        const T ed = d.at(c, y + dy, x + dx) - mu_d;
                        const T eg = g.at(c, y + dy, x + dx) - mu_g;
                        var_d += wv * ed * ed;
                        var_g += wv * eg * eg;
                        cov += wv * ed * eg;
                    }
                qualitydetail::ChannelStats<T> s{mu_d, mu_g, var_d, var_g, cov};
                acc += qualitydetail::ssim_from_stats(s, c1, c2);
                ++count;
            }
    if (count == 0) throw std::invalid_argument("ssim_windowed: empty image");
    return acc / static_cast<T>(count);
}

template <typename T>
T ssim(const FeatureMap<T>& d, const FeatureMap<T>& g, const SsimParams& p = {}) {
    return p.mode == SsimMode::global_stats ? ssim_global(d, g, p) : ssim_windowed(d, g, p);
}

// 1 - SSIM with the analytic gradient w.r.t. the first argument. Global
// statistics mode (the training-loss default).
template <typename T>
T ssim_loss(const FeatureMap<T>& d, const FeatureMap<T>& g, const SsimParams& p,
            FeatureMap<T>* grad_d = nullptr) {
    if (!d.same_shape(g)) throw std::invalid_argument("ssim_loss: shape mismatch");
    const T c1 = static_cast<T>(p.c1());
    const T c2 = static_cast<T>(p.c2());
    const std::size_t n = static_cast<std::size_t>(d.height) * d.width;
    if (grad_d) *grad_d = FeatureMap<T>(d.channels, d.height, d.width);

    T total = T(0);
    for (int c = 0; c < d.channels; ++c) {
        const auto s = qualitydetail::global_stats(d, g, c);
        const T a1 = T(2) * s.mu_d * s.mu_g + c1;
        const T a2 = T(2) * s.cov + c2;
        const T b1 = s.mu_d * s.mu_d + s.mu_g * s.mu_g + c1;
        const T b2 = s.var_d + s.var_g + c2;
        const T score = (a1 * a2) / (b1 * b2);
        total += score;

        if (grad_d) {
            const T* pd = d.data.data() + c * n;
            const T* pg = g.data.data() + c * n;
            T* pgrad = grad_d->data.data() + c * n;
            const T inv_n = T(1) / static_cast<T>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const T da1 = T(2) * s.mu_g * inv_n;
                const T db1 = T(2) * s.mu_d * inv_n;
                const T da2 = T(2) * (pg[i] - s.mu_g) * inv_n;
                const T db2 = T(2) * (pd[i] - s.mu_d) * inv_n;
                const T dscore =
                    (da1 * a2 + a1 * da2) / (b1 * b2) - score * (db1 / b1 + db2 / b2);
                // loss = 1 - mean_c score
                pgrad[i] = -dscore / static_cast<T>(d.channels);
            }
        }
    }
    return T(1) - total / static_cast<T>(d.channels);
}

// w_f * MSE + w_s * (1 - SSIM_global), with the analytic gradient w.r.t. D.
template <typename T>
T composite_loss(const FeatureMap<T>& d, const FeatureMap<T>& g, const LossWeights& w = {},
                 const SsimParams& p = {}, FeatureMap<T>* grad_d = nullptr) {
    if (!d.same_shape(g)) throw std::invalid_argument("composite_loss: shape mismatch");
    FeatureMap<T> ssim_grad;
    const T ls = ssim_loss(d, g, p, grad_d ? &ssim_grad : nullptr);
    const T lf = mse(d, g);
    if (grad_d) {
        *grad_d = FeatureMap<T>(d.channels, d.height, d.width);
        const T scale = T(2) / static_cast<T>(d.data.size());
        for (std::size_t i = 0; i < d.data.size(); ++i)
            grad_d->data[i] = static_cast<T>(w.w_f) * scale * (d.data[i] - g.data[i]) +
                              static_cast<T>(w.w_s) * ssim_grad.data[i];
    }
    return static_cast<T>(w.w_f) * lf + static_cast<T>(w.w_s) * ls;
}

}  // namespace dhanshr
