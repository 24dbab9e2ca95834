#pragma once

#include <stdexcept>
#include <vector>

#include "dhanshr/conv.hpp"
#include "dhanshr/fft.hpp"
#include "dhanshr/ops.hpp"
#include "dhanshr/tensor.hpp"

namespace dhanshr {

// Parameters of the frequency-domain branch: two identity-path 1x1 convs, a
// 1x1 conv + GELU on the spectrum, a 1x1 MLP stack applied in the frequency
// domain, and a 1x1 toning conv over the 2C-channel concatenation.
template <typename T>
struct FreqProcessorParams {
    ConvParams<T> conv_id1;
    ConvParams<T> conv_id2;
    ConvParams<T> conv_freq;
    std::vector<ConvParams<T>> mlp;  // GELU between consecutive layers
    ConvParams<T> toning;

    FreqProcessorParams() = default;
    explicit FreqProcessorParams(int c, int mlp_depth = 2)
        : conv_id1(c, c, 1, 1, 0, 1, true),
          conv_id2(c, c, 1, 1, 0, 1, true),
          conv_freq(c, c, 1, 1, 0, 1, true),
          toning(c, 2 * c, 1, 1, 0, 1, true) {
        if (mlp_depth < 1) throw std::invalid_argument("FreqProcessorParams: mlp depth >= 1");
        mlp.reserve(mlp_depth);
        for (int i = 0; i < mlp_depth; ++i) mlp.emplace_back(c, c, 1, 1, 0, 1, true);
    }

    int width() const { return conv_id1.out_channels; }

    void validate(int c) const {
        const bool ok = conv_id1.in_channels == c && conv_id1.out_channels == c &&
                        conv_id2.in_channels == c && conv_id2.out_channels == c &&
                        conv_freq.in_channels == c && conv_freq.out_channels == c &&
                        toning.in_channels == 2 * c && toning.out_channels == c && !mlp.empty();
        if (!ok) throw std::invalid_argument("FreqProcessorParams: channel mismatch");
        for (const auto& layer : mlp)
            if (layer.in_channels != c || layer.out_channels != c)
                throw std::invalid_argument("FreqProcessorParams: mlp channel mismatch");
    }

    void init(Xoshiro256pp& rng) {
        conv_id1.init_fan_in_uniform(rng);
        conv_id2.init_fan_in_uniform(rng);
        conv_freq.init_fan_in_uniform(rng);
        for (auto& layer : mlp) layer.init_fan_in_uniform(rng);
        toning.init_fan_in_uniform(rng);
    }
};

// Bypass switches for the closed-form identity checks.
struct FreqProcessorDebug {
    bool skip_gelu = false;
    bool skip_mlp = false;
};

// FFT -> real part -> conv (+GELU) -> MLP stack -> inverse FFT -> real part
// -> residual -> toning over the concatenated identity path. Both .real steps
// discard the imaginary component on purpose.
template <typename T>
FeatureMap<T> frequency_processor(const FeatureMap<T>& f, const FreqProcessorParams<T>& p,
                                  const FreqProcessorDebug& dbg = {}) {
    p.validate(f.channels);

    const FeatureMap<T> id1 = conv2d(f, p.conv_id1);
    const FeatureMap<T> id2 = conv2d(f, p.conv_id2);

    FeatureMap<T> x = real_part(fft2d(f));
    x = conv2d(x, p.conv_freq);
    if (!dbg.skip_gelu) x = gelu_map(x);
    if (!dbg.skip_mlp) {
        for (std::size_t i = 0; i < p.mlp.size(); ++i) {
            if (i > 0) x = gelu_map(x);
            x = conv2d(x, p.mlp[i]);
        }
    }

    ComplexMap<T> spectrum(x.channels, x.height, x.width);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        spectrum.data[i] = std::complex<T>(x.data[i], T(0));
    FeatureMap<T> y = real_part(ifft2d(spectrum));

    FeatureMap<T> fs = add(y, id2);
    return conv2d(concat_channels(fs, id1), p.toning);
}

}  // namespace dhanshr
