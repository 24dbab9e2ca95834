#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dhanshr/conv.hpp"
#include "dhanshr/macs.hpp"
#include "dhanshr/ops.hpp"
#include "dhanshr/spectral.hpp"
#include "dhanshr/tensor.hpp"
#include "dhanshr/windowing.hpp"

namespace dhanshr {

// Learnable convex-combination weight, exposed through a sigmoid so the
// mixture stays well-formed for any raw value.
template <typename T>
struct MixCoefficient {
    T raw = T(0);
    T value() const { return sigmoid(raw); }
};

// Learnable positive temperature, exposed through exp.
template <typename T>
struct TemperatureParam {
    T raw = T(0);
    T tau() const { return std::exp(raw); }
};

// Bias-free 1x1 query/key/value projections.
template <typename T>
struct QkvParams {
    ConvParams<T> wq, wk, wv;

    QkvParams() = default;
    explicit QkvParams(int c)
        : wq(c, c, 1, 1, 0, 1, false),
          wk(c, c, 1, 1, 0, 1, false),
          wv(c, c, 1, 1, 0, 1, false) {}

    void init(Xoshiro256pp& rng) {
        wq.init_fan_in_uniform(rng);
        wk.init_fan_in_uniform(rng);
        wv.init_fan_in_uniform(rng);
    }
};

// Three-layer convolutional FFN: 1x1 expand (x2), 3x3 depthwise, 1x1
// contract, GELU after the first two.
template <typename T>
struct FfnParams {
    ConvParams<T> conv_in;
    ConvParams<T> conv_mid;
    ConvParams<T> conv_out;

    FfnParams() = default;
    explicit FfnParams(int c)
        : conv_in(2 * c, c, 1, 1, 0, 1, true),
          conv_mid(2 * c, 2 * c, 3, 1, 1, 2 * c, true),
          conv_out(c, 2 * c, 1, 1, 0, 1, true) {}

    void init(Xoshiro256pp& rng) {
        conv_in.init_fan_in_uniform(rng);
        conv_mid.init_fan_in_uniform(rng);
        conv_out.init_fan_in_uniform(rng);
    }
};

template <typename T>
FeatureMap<T> ffn(const FeatureMap<T>& f, const FfnParams<T>& p) {
    FeatureMap<T> x = gelu_map(conv2d(f, p.conv_in));
    x = gelu_map(conv2d(x, p.conv_mid));
    return conv2d(x, p.conv_out);
}

namespace attndetail {

template <typename T>
void require_same_geometry(const WindowedTensor<T>& a, const WindowedTensor<T>& b) {
    if (a.n_windows != b.n_windows || a.channels != b.channels || a.window_area != b.window_area)
        throw std::invalid_argument("attention: Q/K/V geometry mismatch");
}

}  // namespace attndetail

// Intra-window pixel attention: per window, logits are Q^T.K scaled by the
// window side (not sqrt(d)) plus the optional additive mask; each output
// position is the softmax-weighted mix of V columns. `attn_out`, when given,
// receives the row-stochastic attention matrices (n_windows x area x area).
template <typename T>
WindowedTensor<T> pixel_window_attention(const WindowedTensor<T>& q, const WindowedTensor<T>& k,
                                         const WindowedTensor<T>& v, const AttentionMask* mask,
                                         T divisor, std::vector<T>* attn_out = nullptr) {
    attndetail::require_same_geometry(q, k);
    attndetail::require_same_geometry(q, v);
    const int nw = q.n_windows, C = q.channels, area = q.window_area;
    if (mask && (mask->n_windows != nw || mask->window_area != area))
        throw std::invalid_argument("pixel_window_attention: mask geometry mismatch");

    WindowedTensor<T> out = v;
    if (attn_out) attn_out->assign(static_cast<std::size_t>(nw) * area * area, T(0));
    std::vector<T> scores(static_cast<std::size_t>(area) * area);

    for (int w = 0; w < nw; ++w) {
        for (int i = 0; i < area; ++i)
            for (int j = 0; j < area; ++j) {
                T acc = T(0);
                for (int c = 0; c < C; ++c) acc += q.at(w, c, i) * k.at(w, c, j);
                acc /= divisor;
                if (mask) acc += static_cast<T>(mask->at(w, i, j));
                scores[static_cast<std::size_t>(i) * area + j] = acc;
            }
        macs::add(static_cast<std::uint64_t>(area) * area * (2 * C - 1));

        softmax_rows_inplace(std::span<T>(scores), area, area);
        if (attn_out)
            std::copy(scores.begin(), scores.end(),
                      attn_out->begin() + static_cast<std::size_t>(w) * area * area);

        for (int c = 0; c < C; ++c)
            for (int i = 0; i < area; ++i) {
                T acc = T(0);
                for (int j = 0; j < area; ++j)
                    acc += scores[static_cast<std::size_t>(i) * area + j] * v.at(w, c, j);
                out.at(w, c, i) = acc;
            }
        macs::add(static_cast<std::uint64_t>(C) * area * (2 * area - 1));
    }
    return out;
}

// Intra-window channel attention: per window, a C x C affinity Q.K^T scaled
// by the temperature, row-softmax over key channels, never masked.
template <typename T>
WindowedTensor<T> channel_window_attention(const WindowedTensor<T>& q, const WindowedTensor<T>& k,
                                           const WindowedTensor<T>& v, T tau,
                                           std::vector<T>* attn_out = nullptr) {
    attndetail::require_same_geometry(q, k);
    attndetail::require_same_geometry(q, v);
    if (!(tau > T(0))) throw std::invalid_argument("channel_window_attention: tau must be > 0");
    const int nw = q.n_windows, C = q.channels, area = q.window_area;

    WindowedTensor<T> out = v;
    if (attn_out) attn_out->assign(static_cast<std::size_t>(nw) * C * C, T(0));
    std::vector<T> scores(static_cast<std::size_t>(C) * C);

    for (int w = 0; w < nw; ++w) {
        for (int i = 0; i < C; ++i)
            for (int j = 0; j < C; ++j) {
                T acc = T(0);
                for (int p = 0; p < area; ++p) acc += q.at(w, i, p) * k.at(w, j, p);
                scores[static_cast<std::size_t>(i) * C + j] = acc / tau;
            }
        macs::add(static_cast<std::uint64_t>(C) * C * (2 * area - 1));

        softmax_rows_inplace(std::span<T>(scores), C, C);
        if (attn_out)
            std::copy(scores.begin(), scores.end(),
                      attn_out->begin() + static_cast<std::size_t>(w) * C * C);

        for (int i = 0; i < C; ++i)
            for (int p = 0; p < area; ++p) {
                T acc = T(0);
                for (int j = 0; j < C; ++j)
                    acc += scores[static_cast<std::size_t>(i) * C + j] * v.at(w, j, p);
                out.at(w, i, p) = acc;
            }
        macs::add(static_cast<std::uint64_t>(C) * area * (2 * C - 1));
    }
    return out;
}

// Global pixel attention over the whole map (one window spanning H x W),
// streamed one query position at a time so the score matrix never
// materializes. Used by the bottleneck pixel branch and the dense baseline.
template <typename T>
FeatureMap<T> global_pixel_attention(const FeatureMap<T>& q, const FeatureMap<T>& k,
                                     const FeatureMap<T>& v, T divisor) {
    if (!q.same_shape(k) || !q.same_shape(v))
        throw std::invalid_argument("global_pixel_attention: geometry mismatch");
    const int C = q.channels;
    const std::size_t n = static_cast<std::size_t>(q.height) * q.width;

    FeatureMap<T> out(C, q.height, q.width);
    std::vector<T> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (int c = 0; c < C; ++c)
                acc += q.data[c * n + i] * k.data[c * n + j];
            row[j] = acc / divisor;
        }
        macs::add(static_cast<std::uint64_t>(n) * (2 * C - 1));
        softmax_rows_inplace(std::span<T>(row), 1, static_cast<int>(n));
        for (int c = 0; c < C; ++c) {
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * v.data[c * n + j];
            out.data[c * n + i] = acc;
        }
        macs::add(static_cast<std::uint64_t>(C) * (2 * n - 1));
    }
    return out;
}

// Multi-head channel attention parameters: 1x1 q/k/v projections, head count
// dividing the width, and a 1x1 output projection.
template <typename T>
struct CcaParams {
    QkvParams<T> proj;
    ConvParams<T> out_proj;
    int heads = 1;

    CcaParams() = default;
    CcaParams(int c, int h)
        : proj(c), out_proj(c, c, 1, 1, 0, 1, true), heads(h) {
        if (h < 1 || c % h != 0)
            throw std::invalid_argument("CcaParams: heads must divide channels");
    }

    void init(Xoshiro256pp& rng) {
        proj.init(rng);
        out_proj.init_fan_in_uniform(rng);
    }
};

// The multi-head attention core on already-projected maps; exposed
// separately for the gradient checks.
template <typename T>
FeatureMap<T> cca_multihead_core(const FeatureMap<T>& q, const FeatureMap<T>& k,
                                 const FeatureMap<T>& v, int heads,
                                 std::vector<T>* attn_out = nullptr) {
    if (!q.same_shape(k) || !q.same_shape(v))
        throw std::invalid_argument("cca_multihead_core: geometry mismatch");
    const int C = q.channels;
    if (heads < 1 || C % heads != 0)
        throw std::invalid_argument("cca_multihead_core: head count must divide channels");
    const int ch = C / heads;
    const std::size_t n = static_cast<std::size_t>(q.height) * q.width;
    const T divisor = std::sqrt(static_cast<T>(ch));

    FeatureMap<T> out(C, q.height, q.width);
    if (attn_out) attn_out->assign(static_cast<std::size_t>(heads) * ch * ch, T(0));
    std::vector<T> scores(static_cast<std::size_t>(ch) * ch);

    for (int h = 0; h < heads; ++h) {
        const int base = h * ch;
        for (int i = 0; i < ch; ++i)
            for (int j = 0; j < ch; ++j) {
                T acc = T(0);
                for (std::size_t px = 0; px < n; ++px)
                    acc += q.data[(base + i) * n + px] * k.data[(base + j) * n + px];
                scores[static_cast<std::size_t>(i) * ch + j] = acc / divisor;
            }
        macs::add(static_cast<std::uint64_t>(ch) * ch * (2 * n - 1));

        softmax_rows_inplace(std::span<T>(scores), ch, ch);
        if (attn_out)
            std::copy(scores.begin(), scores.end(),
                      attn_out->begin() + static_cast<std::size_t>(h) * ch * ch);

        for (int i = 0; i < ch; ++i)
            for (std::size_t px = 0; px < n; ++px) {
                T acc = T(0);
                for (int j = 0; j < ch; ++j)
                    acc += scores[static_cast<std::size_t>(i) * ch + j] * v.data[(base + j) * n + px];
                out.data[(base + i) * n + px] = acc;
            }
        macs::add(static_cast<std::uint64_t>(ch) * n * (2 * ch - 1));
    }
    return out;
}

// Channel attention across the whole map, split into heads of C/h channels;
// per head the affinity is scaled by sqrt(C/h). Heads are concatenated back
// and passed through the output projection.
template <typename T>
FeatureMap<T> cca_multihead(const FeatureMap<T>& f, const CcaParams<T>& p,
                            std::vector<T>* attn_out = nullptr) {
    if (p.heads < 1 || f.channels % p.heads != 0)
        throw std::invalid_argument("cca_multihead: head count must divide channels");
    const FeatureMap<T> q = conv2d(f, p.proj.wq);
    const FeatureMap<T> k = conv2d(f, p.proj.wk);
    const FeatureMap<T> v = conv2d(f, p.proj.wv);
    return conv2d(cca_multihead_core(q, k, v, p.heads, attn_out), p.out_proj);
}

enum class AttnMode { pixel, channel };

// One shifted-window transformer block: spectral Q/K against spatial V in the
// unshifted pass, a full Q/K/V pass on the cyclically shifted map (masked in
// pixel mode), residual, then the convolutional FFN.
template <typename T>
struct SsswatParams {
    AttnMode mode = AttnMode::pixel;
    int window = 8;
    int shift = 4;
    LayerNormParams<T> ln_spatial;
    LayerNormParams<T> ln_spectral;
    FreqProcessorParams<T> fp;
    QkvParams<T> stage1;
    QkvParams<T> stage2;
    TemperatureParam<T> tau1, tau2;  // channel mode only
    LayerNormParams<T> ln_ffn;
    FfnParams<T> ffn;

    SsswatParams() = default;
    SsswatParams(AttnMode mode_, int c, int window_, int shift_)
        : mode(mode_), window(window_), shift(shift_),
          ln_spatial(c), ln_spectral(c), fp(c),
          stage1(c), stage2(c), ln_ffn(c), ffn(c) {
        if (window_ < 1 || shift_ < 0 || shift_ >= window_)
            throw std::invalid_argument("SsswatParams: need 0 <= shift < window");
    }

    int width() const { return static_cast<int>(ln_spatial.gamma.size()); }

    void init(Xoshiro256pp& rng) {
        fp.init(rng);
        stage1.init(rng);
        stage2.init(rng);
        ffn.init(rng);
    }
};

template <typename T>
FeatureMap<T> ssswat_block(const FeatureMap<T>& f, const SsswatParams<T>& p) {
    const int C = p.width();
    if (f.channels != C)
        throw std::invalid_argument("ssswat_block: input width " + std::to_string(f.channels) +
                                    " != block width " + std::to_string(C));
    const int m = p.window;

    const FeatureMap<T> fn = layer_norm_channel(f, p.ln_spatial);
    const FeatureMap<T> fs = layer_norm_channel(frequency_processor(f, p.fp), p.ln_spectral);

    const FeatureMap<T> fn_p = pad_to_multiple(fn, m);
    const FeatureMap<T> fs_p = pad_to_multiple(fs, m);
    const int hp = fn_p.height, wp = fn_p.width;

    // stage 1: spectral queries/keys, spatial values, unshifted windows
    auto qw = window_partition(conv2d(fs_p, p.stage1.wq), m);
    auto kw = window_partition(conv2d(fs_p, p.stage1.wk), m);
    auto vw = window_partition(conv2d(fn_p, p.stage1.wv), m);
    WindowedTensor<T> attn1 =
        p.mode == AttnMode::pixel
            ? pixel_window_attention(qw, kw, vw, nullptr, static_cast<T>(m))
            : channel_window_attention(qw, kw, vw, p.tau1.tau());
    const FeatureMap<T> inter = window_reverse(attn1);  // stays at padded dims

    // stage 2: shifted windows, all projections from the shifted intermediate
    const FeatureMap<T> shifted = cyclic_shift(inter, p.shift);
    auto qw2 = window_partition(conv2d(shifted, p.stage2.wq), m);
    auto kw2 = window_partition(conv2d(shifted, p.stage2.wk), m);
    auto vw2 = window_partition(conv2d(shifted, p.stage2.wv), m);
    WindowedTensor<T> attn2;
    if (p.mode == AttnMode::pixel) {
        auto mask = shift_mask_cache().get(hp, wp, m, p.shift);
        attn2 = pixel_window_attention(qw2, kw2, vw2, mask.get(), static_cast<T>(m));
    } else {
        attn2 = channel_window_attention(qw2, kw2, vw2, p.tau2.tau());
    }
    const FeatureMap<T> unshifted = inverse_cyclic_shift(window_reverse(attn2), p.shift);

    const FeatureMap<T> y = add(f, crop(unshifted, f.height, f.width));
    return add(y, ffn(layer_norm_channel(y, p.ln_ffn), p.ffn));
}

// Local dual-attention transformer: sigmoid-weighted mix of the pixel-wise
// and channel-wise shifted-window branches, each with its own frequency
// processor.
template <typename T>
struct LhdDatParams {
    SsswatParams<T> p_branch;
    SsswatParams<T> c_branch;
    MixCoefficient<T> alpha;

    LhdDatParams() = default;
    LhdDatParams(int c, int window, int shift)
        : p_branch(AttnMode::pixel, c, window, shift),
          c_branch(AttnMode::channel, c, window, shift) {}

    void init(Xoshiro256pp& rng) {
        p_branch.init(rng);
        c_branch.init(rng);
    }
};

template <typename T>
FeatureMap<T> l_hd_dat(const FeatureMap<T>& f, const LhdDatParams<T>& p) {
    const T a = p.alpha.value();
    return lerp(ssswat_block(f, p.p_branch), ssswat_block(f, p.c_branch), a, T(1) - a);
}

template <typename T>
struct CcatParams {
    LayerNormParams<T> ln_attn;
    LayerNormParams<T> ln_ffn;
    CcaParams<T> cca;
    FfnParams<T> ffn;

    CcatParams() = default;
    CcatParams(int c, int heads)
        : ln_attn(c), ln_ffn(c), cca(c, heads), ffn(c) {}

    void init(Xoshiro256pp& rng) {
        cca.init(rng);
        ffn.init(rng);
    }
};

template <typename T>
FeatureMap<T> ccat_block(const FeatureMap<T>& f, const CcatParams<T>& p) {
    const FeatureMap<T> y = add(f, cca_multihead(layer_norm_channel(f, p.ln_attn), p.cca));
    return add(y, ffn(layer_norm_channel(y, p.ln_ffn), p.ffn));
}

// Global pixel self-attention block: one window covering the whole map,
// divisor generalized from the window side to sqrt(H*W), no mask, no
// spectral branch.
template <typename T>
struct PsatParams {
    LayerNormParams<T> ln_attn;
    LayerNormParams<T> ln_ffn;
    QkvParams<T> proj;
    FfnParams<T> ffn;

    PsatParams() = default;
    explicit PsatParams(int c) : ln_attn(c), ln_ffn(c), proj(c), ffn(c) {}

    void init(Xoshiro256pp& rng) {
        proj.init(rng);
        ffn.init(rng);
    }
};

template <typename T>
FeatureMap<T> psat_block(const FeatureMap<T>& f, const PsatParams<T>& p) {
    const FeatureMap<T> x = layer_norm_channel(f, p.ln_attn);
    const T divisor = std::sqrt(static_cast<T>(f.height) * static_cast<T>(f.width));
    const FeatureMap<T> attn = global_pixel_attention(
        conv2d(x, p.proj.wq), conv2d(x, p.proj.wk), conv2d(x, p.proj.wv), divisor);
    const FeatureMap<T> y = add(f, attn);
    return add(y, ffn(layer_norm_channel(y, p.ln_ffn), p.ffn));
}

template <typename T>
struct GdatParams {
    CcatParams<T> ccat;
    PsatParams<T> psat;
    MixCoefficient<T> beta;

    GdatParams() = default;
    GdatParams(int c, int heads) : ccat(c, heads), psat(c) {}

    void init(Xoshiro256pp& rng) {
        ccat.init(rng);
        psat.init(rng);
    }
};

template <typename T>
FeatureMap<T> g_dat(const FeatureMap<T>& f, const GdatParams<T>& p) {
    const T b = p.beta.value();
    return lerp(ccat_block(f, p.ccat), psat_block(f, p.psat), b, T(1) - b);
}

}  // namespace dhanshr
