#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dhanshr/attention.hpp"
#include "dhanshr/conv.hpp"
#include "dhanshr/rng.hpp"
#include "dhanshr/tensor.hpp"

namespace dhanshr {

// Architecture hyperparameters. Level widths are C0, 2*C0, 4*C0, 8*C0 from
// the full-resolution level down to the bottleneck; the FFN expansion ratio
// is fixed at 2.
struct ModelConfig {
    int base_width = 16;
    std::array<int, 4> blocks_per_level{1, 1, 1, 1};  // n0, n1, n2, n_bottleneck
    int window = 8;
    int shift = 4;  // floor(window / 2) for the defaults
    int heads = 2;
    bool global_residual = true;
    std::uint64_t seed = 0;

    std::array<int, 4> level_widths() const {
        return {base_width, 2 * base_width, 4 * base_width, 8 * base_width};
    }

    void validate() const {
        if (base_width < 1) throw std::invalid_argument("config: base_width must be >= 1");
        if (window < 1 || shift < 0 || shift >= window)
            throw std::invalid_argument("config: need window > shift >= 0");
        if (heads < 1) throw std::invalid_argument("config: heads must be >= 1");
        for (int n : blocks_per_level)
            if (n < 1) throw std::invalid_argument("config: block counts must be >= 1");
        const auto w = level_widths();
        for (int lvl = 1; lvl < 4; ++lvl)
            if (w[lvl] % heads != 0)
                throw std::invalid_argument("config: level width " + std::to_string(w[lvl]) +
                                            " not divisible by heads");
    }

    static ModelConfig toy() { return ModelConfig{}; }
    static ModelConfig large() {
        ModelConfig c;
        c.base_width = 48;
        return c;
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline nlohmann::ordered_json config_to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["base_width"] = c.base_width;
    j["blocks_per_level"] = c.blocks_per_level;
    j["window"] = c.window;
    j["shift"] = c.shift;
    j["heads"] = c.heads;
    j["global_residual"] = c.global_residual;
    j["seed"] = c.seed;
    return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.base_width = j.value("base_width", c.base_width);
    if (j.contains("blocks_per_level")) {
        const auto& arr = j.at("blocks_per_level");
        if (!arr.is_array() || arr.size() != 4)
            throw std::invalid_argument("config: blocks_per_level must have 4 entries");
        for (int i = 0; i < 4; ++i) c.blocks_per_level[i] = arr[i].get<int>();
    }
    c.window = j.value("window", c.window);
    c.shift = j.value("shift", c.shift);
    c.heads = j.value("heads", c.heads);
    c.global_residual = j.value("global_residual", c.global_residual);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

// Fixed field order, no whitespace: the byte representation embedded in
// checkpoints and hashed into reports.
inline std::string canonical_config_json(const ModelConfig& c) {
    return config_to_json(c).dump();
}

// U-shaped encoder-bottleneck-decoder weights. Levels 0..2 feed the skip
// connections; the decoder mirrors the encoder with independent weights.
template <typename T>
struct ModelWeights {
    ModelConfig config;

    ConvParams<T> head;  // 3 -> C0, 3x3
    std::vector<LhdDatParams<T>> enc0;
    ConvParams<T> down01;  // C0 -> 2C0, stride 2
    std::vector<CcatParams<T>> enc1;
    ConvParams<T> down12;
    std::vector<CcatParams<T>> enc2;
    ConvParams<T> down23;
    std::vector<GdatParams<T>> bottleneck;

    ConvParams<T> up32;  // 1x1 after nearest x2: 8C0 -> 4C0
    ConvParams<T> fuse2;
    std::vector<CcatParams<T>> dec2;
    ConvParams<T> up21;
    ConvParams<T> fuse1;
    std::vector<CcatParams<T>> dec1;
    ConvParams<T> up10;
    ConvParams<T> fuse0;
    std::vector<LhdDatParams<T>> dec0;
    ConvParams<T> tail;  // C0 -> 3, 3x3
};

namespace netdetail {

// Weight visitation: every learnable tensor gets a unique dotted name in a
// fixed traversal order. fn(name, data pointer, count, dims).
template <typename T, typename Fn>
void visit(ConvParams<T>& p, const std::string& prefix, Fn&& fn) {
    fn(prefix + ".kernel", p.kernel.data(), p.kernel.size(),
       std::vector<int>{p.out_channels, p.in_channels / p.groups, p.kh, p.kw});
    if (p.has_bias())
        fn(prefix + ".bias", p.bias.data(), p.bias.size(), std::vector<int>{p.out_channels});
}

template <typename T, typename Fn>
void visit(LayerNormParams<T>& p, const std::string& prefix, Fn&& fn) {
    const int c = static_cast<int>(p.gamma.size());
    fn(prefix + ".gamma", p.gamma.data(), p.gamma.size(), std::vector<int>{c});
    fn(prefix + ".beta", p.beta.data(), p.beta.size(), std::vector<int>{c});
}

template <typename T, typename Fn>
void visit(QkvParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.wq, prefix + ".wq", fn);
    visit(p.wk, prefix + ".wk", fn);
    visit(p.wv, prefix + ".wv", fn);
}

template <typename T, typename Fn>
void visit(FfnParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.conv_in, prefix + ".conv_in", fn);
    visit(p.conv_mid, prefix + ".conv_mid", fn);
    visit(p.conv_out, prefix + ".conv_out", fn);
}

template <typename T, typename Fn>
void visit(FreqProcessorParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.conv_id1, prefix + ".conv_id1", fn);
    visit(p.conv_id2, prefix + ".conv_id2", fn);
    visit(p.conv_freq, prefix + ".conv_freq", fn);
    for (std::size_t i = 0; i < p.mlp.size(); ++i)
        visit(p.mlp[i], prefix + ".mlp." + std::to_string(i), fn);
    visit(p.toning, prefix + ".toning", fn);
}

template <typename T, typename Fn>
void visit(SsswatParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.ln_spatial, prefix + ".ln_spatial", fn);
    visit(p.ln_spectral, prefix + ".ln_spectral", fn);
    visit(p.fp, prefix + ".fp", fn);
    visit(p.stage1, prefix + ".stage1", fn);
    visit(p.stage2, prefix + ".stage2", fn);
    if (p.mode == AttnMode::channel) {
        fn(prefix + ".tau1", &p.tau1.raw, 1, std::vector<int>{1});
        fn(prefix + ".tau2", &p.tau2.raw, 1, std::vector<int>{1});
    }
    visit(p.ln_ffn, prefix + ".ln_ffn", fn);
    visit(p.ffn, prefix + ".ffn", fn);
}

template <typename T, typename Fn>
void visit(LhdDatParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.p_branch, prefix + ".p_branch", fn);
    visit(p.c_branch, prefix + ".c_branch", fn);
    fn(prefix + ".alpha", &p.alpha.raw, 1, std::vector<int>{1});
}

template <typename T, typename Fn>
void visit(CcaParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.proj, prefix + ".proj", fn);
    visit(p.out_proj, prefix + ".out_proj", fn);
}

template <typename T, typename Fn>
void visit(CcatParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.ln_attn, prefix + ".ln_attn", fn);
    visit(p.ln_ffn, prefix + ".ln_ffn", fn);
    visit(p.cca, prefix + ".cca", fn);
    visit(p.ffn, prefix + ".ffn", fn);
}

template <typename T, typename Fn>
void visit(PsatParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.ln_attn, prefix + ".ln_attn", fn);
    visit(p.ln_ffn, prefix + ".ln_ffn", fn);
    visit(p.proj, prefix + ".proj", fn);
    visit(p.ffn, prefix + ".ffn", fn);
}

template <typename T, typename Fn>
void visit(GdatParams<T>& p, const std::string& prefix, Fn&& fn) {
    visit(p.ccat, prefix + ".ccat", fn);
    visit(p.psat, prefix + ".psat", fn);
    fn(prefix + ".beta", &p.beta.raw, 1, std::vector<int>{1});
}

}  // namespace netdetail

template <typename T, typename Fn>
void visit_weights(ModelWeights<T>& m, Fn&& fn) {
    using netdetail::visit;
    visit(m.head, "head", fn);
    for (std::size_t i = 0; i < m.enc0.size(); ++i)
        visit(m.enc0[i], "enc0." + std::to_string(i), fn);
    visit(m.down01, "down01", fn);
    for (std::size_t i = 0; i < m.enc1.size(); ++i)
        visit(m.enc1[i], "enc1." + std::to_string(i), fn);
    visit(m.down12, "down12", fn);
    for (std::size_t i = 0; i < m.enc2.size(); ++i)
        visit(m.enc2[i], "enc2." + std::to_string(i), fn);
    visit(m.down23, "down23", fn);
    for (std::size_t i = 0; i < m.bottleneck.size(); ++i)
        visit(m.bottleneck[i], "bottleneck." + std::to_string(i), fn);
    visit(m.up32, "up32", fn);
    visit(m.fuse2, "fuse2", fn);
    for (std::size_t i = 0; i < m.dec2.size(); ++i)
        visit(m.dec2[i], "dec2." + std::to_string(i), fn);
    visit(m.up21, "up21", fn);
    visit(m.fuse1, "fuse1", fn);
    for (std::size_t i = 0; i < m.dec1.size(); ++i)
        visit(m.dec1[i], "dec1." + std::to_string(i), fn);
    visit(m.up10, "up10", fn);
    visit(m.fuse0, "fuse0", fn);
    for (std::size_t i = 0; i < m.dec0.size(); ++i)
        visit(m.dec0[i], "dec0." + std::to_string(i), fn);
    visit(m.tail, "tail", fn);
}

// Allocates the weight tree for a config without touching the RNG.
template <typename T>
ModelWeights<T> make_model_structure(const ModelConfig& config) {
    config.validate();
    const auto w = config.level_widths();
    const int m = config.window, s = config.shift, h = config.heads;

    ModelWeights<T> model;
    model.config = config;

    model.head = ConvParams<T>(w[0], 3, 3, 1, 1);
    model.enc0.assign(config.blocks_per_level[0], LhdDatParams<T>(w[0], m, s));
    model.down01 = ConvParams<T>(w[1], w[0], 3, 2, 1);
    model.enc1.assign(config.blocks_per_level[1], CcatParams<T>(w[1], h));
    model.down12 = ConvParams<T>(w[2], w[1], 3, 2, 1);
    model.enc2.assign(config.blocks_per_level[2], CcatParams<T>(w[2], h));
    model.down23 = ConvParams<T>(w[3], w[2], 3, 2, 1);
    model.bottleneck.assign(config.blocks_per_level[3], GdatParams<T>(w[3], h));

    model.up32 = ConvParams<T>(w[2], w[3], 1, 1, 0);
    model.fuse2 = ConvParams<T>(w[2], 2 * w[2], 1, 1, 0);
    model.dec2.assign(config.blocks_per_level[2], CcatParams<T>(w[2], h));
    model.up21 = ConvParams<T>(w[1], w[2], 1, 1, 0);
    model.fuse1 = ConvParams<T>(w[1], 2 * w[1], 1, 1, 0);
    model.dec1.assign(config.blocks_per_level[1], CcatParams<T>(w[1], h));
    model.up10 = ConvParams<T>(w[0], w[1], 1, 1, 0);
    model.fuse0 = ConvParams<T>(w[0], 2 * w[0], 1, 1, 0);
    model.dec0.assign(config.blocks_per_level[0], LhdDatParams<T>(w[0], m, s));
    model.tail = ConvParams<T>(3, w[0], 3, 1, 1);
    return model;
}

// Deterministic seeded construction: the same (config, seed) always yields
// bit-identical weights.
template <typename T>
ModelWeights<T> build_model(const ModelConfig& config, std::uint64_t seed) {
    ModelWeights<T> model = make_model_structure<T>(config);
    model.config.seed = seed;

    Xoshiro256pp rng(seed);
    model.head.init_fan_in_uniform(rng);
    for (auto& b : model.enc0) b.init(rng);
    model.down01.init_fan_in_uniform(rng);
    for (auto& b : model.enc1) b.init(rng);
    model.down12.init_fan_in_uniform(rng);
    for (auto& b : model.enc2) b.init(rng);
    model.down23.init_fan_in_uniform(rng);
    for (auto& b : model.bottleneck) b.init(rng);
    model.up32.init_fan_in_uniform(rng);
    model.fuse2.init_fan_in_uniform(rng);
    for (auto& b : model.dec2) b.init(rng);
    model.up21.init_fan_in_uniform(rng);
    model.fuse1.init_fan_in_uniform(rng);
    for (auto& b : model.dec1) b.init(rng);
    model.up10.init_fan_in_uniform(rng);
    model.fuse0.init_fan_in_uniform(rng);
    for (auto& b : model.dec0) b.init(rng);
    model.tail.init_fan_in_uniform(rng);
    return model;
}

template <typename T>
void zero_all_weights(ModelWeights<T>& m) {
    visit_weights(m, [](const std::string&, T* data, std::size_t n, const std::vector<int>&) {
        std::fill(data, data + n, T(0));
    });
}

template <typename T>
std::uint64_t count_params(const ModelWeights<T>& m) {
    std::uint64_t total = 0;
    // visitation is structural; nothing is written through the callback
    visit_weights(const_cast<ModelWeights<T>&>(m),
                  [&](const std::string&, T*, std::size_t n, const std::vector<int>&) {
                      total += n;
                  });
    return total;
}

template <typename T>
FeatureMap<T> nearest_upsample_x2(const FeatureMap<T>& f) {
    FeatureMap<T> out(f.channels, 2 * f.height, 2 * f.width);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) out.at(c, y, x) = f.at(c, y / 2, x / 2);
    return out;
}

template <typename T>
FeatureMap<T> downsample(const FeatureMap<T>& f, const ConvParams<T>& p) {
    return conv2d(f, p);
}

template <typename T>
FeatureMap<T> upsample(const FeatureMap<T>& f, const ConvParams<T>& p) {
    return conv2d(nearest_upsample_x2(f), p);
}

// Crop the upsampled decoder branch to the encoder dims, concatenate over
// channels and fuse back to the level width with a 1x1 conv.
template <typename T>
FeatureMap<T> skip_fuse(const FeatureMap<T>& decoder_f, const FeatureMap<T>& encoder_f,
                        const ConvParams<T>& fuse) {
    if (decoder_f.height < encoder_f.height || decoder_f.width < encoder_f.width)
        throw std::invalid_argument("skip_fuse: decoder branch smaller than encoder branch");
    const FeatureMap<T> cropped = crop(decoder_f, encoder_f.height, encoder_f.width);
    return conv2d(concat_channels(cropped, encoder_f), fuse);
}

inline constexpr int kMinInputSide = 8;

template <typename T>
FeatureMap<T> forward(const ModelWeights<T>& model, const FeatureMap<T>& image) {
    if (image.channels != 3)
        throw std::invalid_argument("forward: expected a 3-channel image");
    if (image.height < kMinInputSide || image.width < kMinInputSide)
        throw std::invalid_argument("forward: input must be at least " +
                                    std::to_string(kMinInputSide) + "x" +
                                    std::to_string(kMinInputSide));
    check_finite(image, "forward input");

    FeatureMap<T> x0 = conv2d(image, model.head);
    for (const auto& b : model.enc0) x0 = l_hd_dat(x0, b);
    FeatureMap<T> x1 = downsample(x0, model.down01);
    for (const auto& b : model.enc1) x1 = ccat_block(x1, b);
    FeatureMap<T> x2 = downsample(x1, model.down12);
    for (const auto& b : model.enc2) x2 = ccat_block(x2, b);
    FeatureMap<T> x3 = downsample(x2, model.down23);
    for (const auto& b : model.bottleneck) x3 = g_dat(x3, b);

    FeatureMap<T> d2 = skip_fuse(upsample(x3, model.up32), x2, model.fuse2);
    for (const auto& b : model.dec2) d2 = ccat_block(d2, b);
    FeatureMap<T> d1 = skip_fuse(upsample(d2, model.up21), x1, model.fuse1);
    for (const auto& b : model.dec1) d1 = ccat_block(d1, b);
    FeatureMap<T> d0 = skip_fuse(upsample(d1, model.up10), x0, model.fuse0);
    for (const auto& b : model.dec0) d0 = l_hd_dat(d0, b);

    FeatureMap<T> out = conv2d(d0, model.tail);
    if (model.config.global_residual) out = add(out, image);
    check_finite(out, "forward");
    return out;
}

// ---- analytic cost model -------------------------------------------------
//
// Mirrors the forward pass exactly at the level of counted operations: conv
// inner products (2k-1, +1 per bias add) and attention matmuls. Everything
// the instrumented counter skips (softmax, LN, activations, FFT, elementwise
// mixing) is skipped here too.

namespace netdetail {

inline std::uint64_t pixel_attn_ops(int c, int hp, int wp, int m) {
    const std::uint64_t hw = static_cast<std::uint64_t>(hp) * wp;
    return hw * m * m * (2 * c - 1) + hw * c * (2 * m * m - 1);
}

inline std::uint64_t channel_attn_ops(int c, int hp, int wp, int m) {
    const std::uint64_t windows = static_cast<std::uint64_t>(hp / m) * (wp / m);
    const std::uint64_t area = static_cast<std::uint64_t>(m) * m;
    return windows * (static_cast<std::uint64_t>(c) * c * (2 * area - 1) +
                      static_cast<std::uint64_t>(c) * area * (2 * c - 1));
}

inline std::uint64_t global_pixel_attn_ops(int c, int h, int w) {
    const std::uint64_t n = static_cast<std::uint64_t>(h) * w;
    return n * n * (2 * c - 1) + n * c * (2 * n - 1);
}

inline std::uint64_t cca_core_ops(int c, int heads, int h, int w) {
    const std::uint64_t n = static_cast<std::uint64_t>(h) * w;
    const std::uint64_t ch = c / heads;
    return static_cast<std::uint64_t>(heads) *
           (ch * ch * (2 * n - 1) + ch * n * (2 * ch - 1));
}

template <typename T>
std::uint64_t ffn_ops(const FfnParams<T>& p, int h, int w) {
    return conv2d_op_count(p.conv_in, h, w) + conv2d_op_count(p.conv_mid, h, w) +
           conv2d_op_count(p.conv_out, h, w);
}

template <typename T>
std::uint64_t fp_ops(const FreqProcessorParams<T>& p, int h, int w) {
    std::uint64_t total = conv2d_op_count(p.conv_id1, h, w) + conv2d_op_count(p.conv_id2, h, w) +
                          conv2d_op_count(p.conv_freq, h, w);
    for (const auto& layer : p.mlp) total += conv2d_op_count(layer, h, w);
    return total + conv2d_op_count(p.toning, h, w);
}

template <typename T>
std::uint64_t ssswat_ops(const SsswatParams<T>& p, int h, int w) {
    const int c = p.width();
    const int m = p.window;
    const int hp = (h + m - 1) / m * m;
    const int wp = (w + m - 1) / m * m;
    std::uint64_t total = fp_ops(p.fp, h, w);
    // six 1x1 projections at padded dims
    total += 3 * conv2d_op_count(p.stage1.wq, hp, wp);
    total += 3 * conv2d_op_count(p.stage2.wq, hp, wp);
    const std::uint64_t attn = p.mode == AttnMode::pixel ? pixel_attn_ops(c, hp, wp, m)
                                                         : channel_attn_ops(c, hp, wp, m);
    return total + 2 * attn + ffn_ops(p.ffn, h, w);
}

template <typename T>
std::uint64_t ccat_ops(const CcatParams<T>& p, int h, int w) {
    const int c = static_cast<int>(p.ln_attn.gamma.size());
    return 3 * conv2d_op_count(p.cca.proj.wq, h, w) + cca_core_ops(c, p.cca.heads, h, w) +
           conv2d_op_count(p.cca.out_proj, h, w) + ffn_ops(p.ffn, h, w);
}

template <typename T>
std::uint64_t psat_ops(const PsatParams<T>& p, int h, int w) {
    const int c = static_cast<int>(p.ln_attn.gamma.size());
    return 3 * conv2d_op_count(p.proj.wq, h, w) + global_pixel_attn_ops(c, h, w) +
           ffn_ops(p.ffn, h, w);
}

}  // namespace netdetail

// Analytic operation count of one forward pass at the given input size, in
// the same unit as macs::OpCountScope.
template <typename T>
std::uint64_t count_macs(const ModelWeights<T>& model, int h, int w) {
    using namespace netdetail;
    const int h1 = (h + 1) / 2, w1 = (w + 1) / 2;
    const int h2 = (h1 + 1) / 2, w2 = (w1 + 1) / 2;
    const int h3 = (h2 + 1) / 2, w3 = (w2 + 1) / 2;

    std::uint64_t total = conv2d_op_count(model.head, h, w);
    for (const auto& b : model.enc0)
        total += ssswat_ops(b.p_branch, h, w) + ssswat_ops(b.c_branch, h, w);
    total += conv2d_op_count(model.down01, h, w);
    for (const auto& b : model.enc1) total += ccat_ops(b, h1, w1);
    total += conv2d_op_count(model.down12, h1, w1);
    for (const auto& b : model.enc2) total += ccat_ops(b, h2, w2);
    total += conv2d_op_count(model.down23, h2, w2);
    for (const auto& b : model.bottleneck)
        total += ccat_ops(b.ccat, h3, w3) + psat_ops(b.psat, h3, w3);

    total += conv2d_op_count(model.up32, 2 * h3, 2 * w3);
    total += conv2d_op_count(model.fuse2, h2, w2);
    for (const auto& b : model.dec2) total += ccat_ops(b, h2, w2);
    total += conv2d_op_count(model.up21, 2 * h2, 2 * w2);
    total += conv2d_op_count(model.fuse1, h1, w1);
    for (const auto& b : model.dec1) total += ccat_ops(b, h1, w1);
    total += conv2d_op_count(model.up10, 2 * h1, 2 * w1);
    total += conv2d_op_count(model.fuse0, h, w);
    for (const auto& b : model.dec0)
        total += ssswat_ops(b.p_branch, h, w) + ssswat_ops(b.c_branch, h, w);
    total += conv2d_op_count(model.tail, h, w);
    return total;
}

}  // namespace dhanshr
