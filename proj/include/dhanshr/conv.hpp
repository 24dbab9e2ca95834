#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dhanshr/macs.hpp"
#include "dhanshr/rng.hpp"
#include "dhanshr/tensor.hpp"

namespace dhanshr {

// 2-D convolution (cross-correlation) parameters. Kernel layout:
// out x (in/groups) x kh x kw, row-major.
template <typename T>
struct ConvParams {
    int out_channels = 0;
    int in_channels = 0;
    int kh = 1;
    int kw = 1;
    int stride = 1;
    int padding = 0;
    int groups = 1;
    std::vector<T> kernel;
    std::vector<T> bias;  // empty means no bias

    ConvParams() = default;
    ConvParams(int out_c, int in_c, int k, int stride_, int padding_, int groups_ = 1,
               bool with_bias = true)
        : out_channels(out_c), in_channels(in_c), kh(k), kw(k),
          stride(stride_), padding(padding_), groups(groups_),
          kernel(static_cast<std::size_t>(out_c) * (in_c / groups_) * k * k, T(0)),
          bias(with_bias ? out_c : 0, T(0)) {
        if (in_c % groups_ != 0 || out_c % groups_ != 0)
            throw std::invalid_argument("ConvParams: channels not divisible by groups");
        if (stride_ < 1 || k < 1) throw std::invalid_argument("ConvParams: bad geometry");
    }

    bool has_bias() const { return !bias.empty(); }
    int fan_in() const { return (in_channels / groups) * kh * kw; }

    std::size_t kernel_index(int oc, int ic, int y, int x) const {
        return ((static_cast<std::size_t>(oc) * (in_channels / groups) + ic) * kh + y) * kw + x;
    }

    std::size_t param_count() const { return kernel.size() + bias.size(); }

    void init_fan_in_uniform(Xoshiro256pp& rng) {
        const T bound = T(1) / std::sqrt(static_cast<T>(fan_in()));
        for (auto& w : kernel) w = static_cast<T>(rng.uniform_symmetric(bound));
        for (auto& b : bias) b = T(0);
    }

    static ConvParams identity_1x1(int channels) {
        ConvParams p(channels, channels, 1, 1, 0, 1, false);
        for (int c = 0; c < channels; ++c) p.kernel[p.kernel_index(c, c, 0, 0)] = T(1);
        return p;
    }

    // 1x1 selector keeping channels [offset, offset+out) of a wider input
    static ConvParams selector_1x1(int out_c, int in_c, int offset) {
        ConvParams p(out_c, in_c, 1, 1, 0, 1, false);
        for (int c = 0; c < out_c; ++c) p.kernel[p.kernel_index(c, offset + c, 0, 0)] = T(1);
        return p;
    }
};

template <typename T>
int conv_output_dim(int in, const ConvParams<T>& p, bool along_h) {
    const int k = along_h ? p.kh : p.kw;
    return (in + 2 * p.padding - k) / p.stride + 1;
}

// Plain nested-loop convolution with a fixed summation order (c_in, ky, kx)
// for reproducibility.
template <typename T>
FeatureMap<T> conv2d(const FeatureMap<T>& input, const ConvParams<T>& p) {
    if (input.channels != p.in_channels)
        throw std::invalid_argument("conv2d: input has " + std::to_string(input.channels) +
                                    " channels, params expect " + std::to_string(p.in_channels));
    const int oh = conv_output_dim(input.height, p, true);
    const int ow = conv_output_dim(input.width, p, false);
    if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d: empty output");

    FeatureMap<T> out(p.out_channels, oh, ow);
    const int icg = p.in_channels / p.groups;
    const int ocg = p.out_channels / p.groups;

    for (int oc = 0; oc < p.out_channels; ++oc) {
        const int g = oc / ocg;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                T acc = T(0);
                for (int ic = 0; ic < icg; ++ic) {
                    const int src_c = g * icg + ic;
                    for (int ky = 0; ky < p.kh; ++ky) {
                        const int sy = y * p.stride + ky - p.padding;
                        if (sy < 0 || sy >= input.height) continue;
                        for (int kx = 0; kx < p.kw; ++kx) {
                            const int sx = x * p.stride + kx - p.padding;
                            if (sx < 0 || sx >= input.width) continue;
                            acc += input.at(src_c, sy, sx) * p.kernel[p.kernel_index(oc, ic, ky, kx)];
                        }
                    }
                }
                if (p.has_bias()) acc += p.bias[oc];
                out.at(oc, y, x) = acc;
            }
        }
        macs::add((2 * static_cast<std::uint64_t>(icg) * p.kh * p.kw - 1 + (p.has_bias() ? 1 : 0)) *
                  oh * ow);
    }
    return out;
}

// Analytic op count for one conv application at the given input size,
// matching the instrumented counter.
template <typename T>
std::uint64_t conv2d_op_count(const ConvParams<T>& p, int in_h, int in_w) {
    const std::uint64_t oh = conv_output_dim(in_h, p, true);
    const std::uint64_t ow = conv_output_dim(in_w, p, false);
    const std::uint64_t k = static_cast<std::uint64_t>(p.in_channels / p.groups) * p.kh * p.kw;
    return static_cast<std::uint64_t>(p.out_channels) * oh * ow * (2 * k - 1 + (p.has_bias() ? 1 : 0));
}

}  // namespace dhanshr
