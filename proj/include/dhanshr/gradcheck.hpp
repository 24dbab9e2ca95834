#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dhanshr/attention.hpp"
#include "dhanshr/attention_grad.hpp"
#include "dhanshr/finite_diff.hpp"
#include "dhanshr/ops.hpp"
#include "dhanshr/quality.hpp"
#include "dhanshr/rng.hpp"
#include "dhanshr/windowing.hpp"

namespace dhanshr {

inline constexpr double kGradCheckThreshold = 1e-4;

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::string block;
    std::uint64_t seed = 0;
    std::vector<GradCheckEntry> params;
    bool pass = false;
};

inline nlohmann::ordered_json gradcheck_to_json(const GradCheckReport& r) {
    nlohmann::ordered_json j;
    j["block"] = r.block;
    j["seed"] = r.seed;
    j["params"] = nlohmann::ordered_json::array();
    for (const auto& p : r.params)
        j["params"].push_back({{"name", p.name}, {"max_rel_err", p.max_rel_err}});
    j["pass"] = r.pass;
    return j;
}

namespace gradcheckdetail {

inline void fill_uniform(std::span<double> out, Xoshiro256pp& rng, double bound = 1.0) {
    for (auto& v : out) v = rng.uniform_symmetric(bound);
}

inline WindowedTensor<double> random_windowed(int nw, int c, int area, Xoshiro256pp& rng) {
    WindowedTensor<double> t;
    t.n_windows = nw;
    t.channels = c;
    t.window_area = area;
    t.data.resize(static_cast<std::size_t>(nw) * c * area);
    fill_uniform(t.data, rng);
    return t;
}

inline void finalize(GradCheckReport& r) {
    r.pass = true;
    for (const auto& p : r.params)
        if (!(p.max_rel_err < kGradCheckThreshold)) r.pass = false;
}

}  // namespace gradcheckdetail

// Pixel attention core (masked) on one 2x2 window.
inline GradCheckReport grad_check_pixel(std::uint64_t seed) {
    using namespace gradcheckdetail;
    const int C = 2, m = 2, area = 4;
    Xoshiro256pp rng(seed ^ 0x70697845ULL);
    auto q = random_windowed(1, C, area, rng);
    auto k = random_windowed(1, C, area, rng);
    auto v = random_windowed(1, C, area, rng);
    auto upstream = random_windowed(1, C, area, rng);
    const AttentionMask mask = build_shift_mask(m, m, m, 1);
    const double divisor = m;

    const std::size_t block = q.data.size();
    std::vector<double> x;
    x.insert(x.end(), q.data.begin(), q.data.end());
    x.insert(x.end(), k.data.begin(), k.data.end());
    x.insert(x.end(), v.data.begin(), v.data.end());

    auto f = [&](std::span<const double> p) {
        WindowedTensor<double> qq = q, kk = k, vv = v;
        std::copy(p.begin(), p.begin() + block, qq.data.begin());
        std::copy(p.begin() + block, p.begin() + 2 * block, kk.data.begin());
        std::copy(p.begin() + 2 * block, p.end(), vv.data.begin());
        const auto out = pixel_window_attention(qq, kk, vv, &mask, divisor);
        double acc = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * upstream.data[i];
        return acc;
    };
    const auto numeric = finite_diff<double>(f, x);
    const auto g = pixel_window_attention_backward(q, k, v, &mask, divisor, upstream);

    GradCheckReport r{"p_ssswa", seed, {}, false};
    r.params.push_back({"q", max_gradient_rel_error<double>(
                                 g.d_q.data, std::span<const double>(numeric.data(), block))});
    r.params.push_back({"k", max_gradient_rel_error<double>(
                                 g.d_k.data, std::span<const double>(numeric.data() + block, block))});
    r.params.push_back({"v", max_gradient_rel_error<double>(
                                 g.d_v.data,
                                 std::span<const double>(numeric.data() + 2 * block, block))});
    finalize(r);
    return r;
}

// Channel attention core including the temperature derivative.
inline GradCheckReport grad_check_channel(std::uint64_t seed) {
    using namespace gradcheckdetail;
    const int C = 3, area = 4;
    const double tau = 1.7;
    Xoshiro256pp rng(seed ^ 0x6368616eULL);
    auto q = random_windowed(2, C, area, rng);
    auto k = random_windowed(2, C, area, rng);
    auto v = random_windowed(2, C, area, rng);
    auto upstream = random_windowed(2, C, area, rng);

    const std::size_t block = q.data.size();
    std::vector<double> x;
    x.insert(x.end(), q.data.begin(), q.data.end());
    x.insert(x.end(), k.data.begin(), k.data.end());
    x.insert(x.end(), v.data.begin(), v.data.end());
    x.push_back(tau);

    auto f = [&](std::span<const double> p) {
        WindowedTensor<double> qq = q, kk = k, vv = v;
        std::copy(p.begin(), p.begin() + block, qq.data.begin());
        std::copy(p.begin() + block, p.begin() + 2 * block, kk.data.begin());
        std::copy(p.begin() + 2 * block, p.begin() + 3 * block, vv.data.begin());
        const auto out = channel_window_attention(qq, kk, vv, p[3 * block]);
        double acc = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * upstream.data[i];
        return acc;
    };
    const auto numeric = finite_diff<double>(f, x);
    const auto g = channel_window_attention_backward(q, k, v, tau, upstream);

    GradCheckReport r{"c_ssswa", seed, {}, false};
    r.params.push_back({"q", max_gradient_rel_error<double>(
                                 g.d_q.data, std::span<const double>(numeric.data(), block))});
    r.params.push_back({"k", max_gradient_rel_error<double>(
                                 g.d_k.data, std::span<const double>(numeric.data() + block, block))});
    r.params.push_back({"v", max_gradient_rel_error<double>(
                                 g.d_v.data,
                                 std::span<const double>(numeric.data() + 2 * block, block))});
    r.params.push_back({"tau", gradient_rel_error(g.d_tau, numeric[3 * block])});
    finalize(r);
    return r;
}

// Multi-head channel attention core on a 4x3x3 map, two heads.
inline GradCheckReport grad_check_cca(std::uint64_t seed) {
    using namespace gradcheckdetail;
    const int C = 4, H = 3, W = 3, heads = 2;
    Xoshiro256pp rng(seed ^ 0x63636141ULL);
    FeatureMap<double> q(C, H, W), k(C, H, W), v(C, H, W), upstream(C, H, W);
    fill_uniform(q.data, rng);
    fill_uniform(k.data, rng);
    fill_uniform(v.data, rng);
    fill_uniform(upstream.data, rng);

    const std::size_t block = q.data.size();
    std::vector<double> x;
    x.insert(x.end(), q.data.begin(), q.data.end());
    x.insert(x.end(), k.data.begin(), k.data.end());
    x.insert(x.end(), v.data.begin(), v.data.end());

    auto f = [&](std::span<const double> p) {
        FeatureMap<double> qq = q, kk = k, vv = v;
        std::copy(p.begin(), p.begin() + block, qq.data.begin());
        std::copy(p.begin() + block, p.begin() + 2 * block, kk.data.begin());
        std::copy(p.begin() + 2 * block, p.end(), vv.data.begin());
        const auto out = cca_multihead_core(qq, kk, vv, heads);
        double acc = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * upstream.data[i];
        return acc;
    };
    const auto numeric = finite_diff<double>(f, x);
    const auto g = cca_multihead_core_backward(q, k, v, heads, upstream);

    GradCheckReport r{"cca", seed, {}, false};
    r.params.push_back({"q", max_gradient_rel_error<double>(
                                 g.d_q.data, std::span<const double>(numeric.data(), block))});
    r.params.push_back({"k", max_gradient_rel_error<double>(
                                 g.d_k.data, std::span<const double>(numeric.data() + block, block))});
    r.params.push_back({"v", max_gradient_rel_error<double>(
                                 g.d_v.data,
                                 std::span<const double>(numeric.data() + 2 * block, block))});
    finalize(r);
    return r;
}

inline GradCheckReport grad_check_layer_norm(std::uint64_t seed) {
    using namespace gradcheckdetail;
    const int C = 3, H = 4, W = 4;
    Xoshiro256pp rng(seed ^ 0x6c6e6f72ULL);
    FeatureMap<double> input(C, H, W), upstream(C, H, W);
    fill_uniform(input.data, rng);
    fill_uniform(upstream.data, rng);
    LayerNormParams<double> p(C);
    fill_uniform(p.gamma, rng);
    fill_uniform(p.beta, rng);

    const std::size_t block = input.data.size();
    std::vector<double> x;
    x.insert(x.end(), input.data.begin(), input.data.end());
    x.insert(x.end(), p.gamma.begin(), p.gamma.end());
    x.insert(x.end(), p.beta.begin(), p.beta.end());

    auto f = [&](std::span<const double> v) {
        FeatureMap<double> in = input;
        LayerNormParams<double> pp = p;
        std::copy(v.begin(), v.begin() + block, in.data.begin());
        std::copy(v.begin() + block, v.begin() + block + C, pp.gamma.begin());
        std::copy(v.begin() + block + C, v.end(), pp.beta.begin());
        const auto out = layer_norm_channel(in, pp);
        double acc = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * upstream.data[i];
        return acc;
    };
    const auto numeric = finite_diff<double>(f, x);
    const auto g = layer_norm_channel_backward(input, p, upstream);

    GradCheckReport r{"layer_norm", seed, {}, false};
    r.params.push_back({"input", max_gradient_rel_error<double>(
                                     g.d_input.data, std::span<const double>(numeric.data(), block))});
    r.params.push_back({"gamma", max_gradient_rel_error<double>(
                                     g.d_gamma, std::span<const double>(numeric.data() + block, C))});
    r.params.push_back({"beta", max_gradient_rel_error<double>(
                                    g.d_beta,
                                    std::span<const double>(numeric.data() + block + C, C))});
    finalize(r);
    return r;
}

inline GradCheckReport grad_check_ssim(std::uint64_t seed) {
    using namespace gradcheckdetail;
    Xoshiro256pp rng(seed ^ 0x7373696dULL);
    FeatureMap<double> d(1, 8, 8), g(1, 8, 8);
    for (auto& v : d.data) v = rng.uniform01();
    for (auto& v : g.data) v = rng.uniform01();
    SsimParams p;
    p.mode = SsimMode::global_stats;

    auto f = [&](std::span<const double> x) {
        FeatureMap<double> dd = d;
        std::copy(x.begin(), x.end(), dd.data.begin());
        return ssim_loss(dd, g, p);
    };
    const auto numeric = finite_diff<double>(f, d.data);
    FeatureMap<double> analytic;
    ssim_loss(d, g, p, &analytic);

    GradCheckReport r{"ssim", seed, {}, false};
    r.params.push_back({"d", max_gradient_rel_error<double>(
                                 analytic.data, std::span<const double>(numeric))});
    finalize(r);
    return r;
}

inline GradCheckReport grad_check_composite(std::uint64_t seed) {
    using namespace gradcheckdetail;
    Xoshiro256pp rng(seed ^ 0x636f6d70ULL);
    FeatureMap<double> d(1, 8, 8), g(1, 8, 8);
    for (auto& v : d.data) v = rng.uniform01();
    for (auto& v : g.data) v = rng.uniform01();
    SsimParams p;
    p.mode = SsimMode::global_stats;
    const LossWeights w;

    auto f = [&](std::span<const double> x) {
        FeatureMap<double> dd = d;
        std::copy(x.begin(), x.end(), dd.data.begin());
        return composite_loss(dd, g, w, p);
    };
    const auto numeric = finite_diff<double>(f, d.data);
    FeatureMap<double> analytic;
    composite_loss(d, g, w, p, &analytic);

    GradCheckReport r{"composite", seed, {}, false};
    r.params.push_back({"d", max_gradient_rel_error<double>(
                                 analytic.data, std::span<const double>(numeric))});
    finalize(r);
    return r;
}

inline std::vector<GradCheckReport> grad_check_all(std::uint64_t seed) {
    return {grad_check_pixel(seed),      grad_check_channel(seed), grad_check_cca(seed),
            grad_check_layer_norm(seed), grad_check_ssim(seed),    grad_check_composite(seed)};
}

inline GradCheckReport grad_check(const std::string& block, std::uint64_t seed) {
    if (block == "p_ssswa") return grad_check_pixel(seed);
    if (block == "c_ssswa") return grad_check_channel(seed);
    if (block == "cca") return grad_check_cca(seed);
    if (block == "layer_norm") return grad_check_layer_norm(seed);
    if (block == "ssim") return grad_check_ssim(seed);
    if (block == "composite") return grad_check_composite(seed);
    throw std::invalid_argument("grad_check: unknown block '" + block + "'");
}

}  // namespace dhanshr
