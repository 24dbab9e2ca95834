#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dhanshr/attention.hpp"
#include "dhanshr/macs.hpp"
#include "dhanshr/rng.hpp"
#include "dhanshr/tensor.hpp"
#include "dhanshr/windowing.hpp"

namespace dhanshr {

enum class KernelKind { pixel, channel, dense };

inline const char* kernel_kind_name(KernelKind k) {
    switch (k) {
        case KernelKind::pixel: return "pixel";
        case KernelKind::channel: return "channel";
        case KernelKind::dense: return "dense";
    }
    return "?";
}

inline KernelKind kernel_kind_from_name(const std::string& s) {
    if (s == "pixel") return KernelKind::pixel;
    if (s == "channel") return KernelKind::channel;
    if (s == "dense") return KernelKind::dense;
    throw std::invalid_argument("unknown kernel kind '" + s + "'");
}

// Closed-form operation counts. The pixel and channel expressions are the
// windowed-attention costs (the channel one is the 4C^2(HW) approximation);
// the dense baseline counts its quadratic Q^T.K term.
inline std::uint64_t theoretical_ops(KernelKind kind, int c, int h, int w, int m) {
    const std::uint64_t hw = static_cast<std::uint64_t>(h) * w;
    switch (kind) {
        case KernelKind::pixel:
            return hw * m * m * (2 * c - 1) + hw * c * (2 * m * m - 1);
        case KernelKind::channel:
            return 4 * static_cast<std::uint64_t>(c) * c * hw;
        case KernelKind::dense:
            return hw * hw * (2 * c - 1);
    }
    return 0;
}

struct ScalingEntry {
    int h = 0;
    int w = 0;
    double seconds = 0.0;  // median wall time per kernel call
    std::uint64_t macs = 0;
    std::uint64_t theory = 0;
};

struct ScalingReport {
    std::string kind;
    int channels = 0;
    int window = 0;
    int reps = 0;
    std::vector<ScalingEntry> entries;
    double fitted_exponent = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    bool exponent_ok = false;
    std::string note;
};

namespace benchdetail {

template <typename T>
FeatureMap<T> random_map(int c, int h, int w, Xoshiro256pp& rng) {
    FeatureMap<T> f(c, h, w);
    for (auto& v : f.data) v = static_cast<T>(rng.uniform_symmetric(1.0));
    return f;
}

template <typename T>
struct KernelInstance {
    KernelKind kind;
    int m = 0;
    WindowedTensor<T> qw, kw, vw;     // windowed kinds
    FeatureMap<T> q, k, v;            // dense kind

    // returns a data-dependent value so the call cannot be optimized out
    T run() const {
        switch (kind) {
            case KernelKind::pixel:
                return pixel_window_attention(qw, kw, vw, nullptr, static_cast<T>(m)).data[0];
            case KernelKind::channel:
                return channel_window_attention(qw, kw, vw, T(1)).data[0];
            case KernelKind::dense:
                return global_pixel_attention(q, k, v,
                                              std::sqrt(static_cast<T>(q.height) *
                                                        static_cast<T>(q.width)))
                    .data[0];
        }
        return T(0);
    }
};

template <typename T>
KernelInstance<T> make_instance(KernelKind kind, int c, int side, int m, Xoshiro256pp& rng) {
    KernelInstance<T> inst;
    inst.kind = kind;
    inst.m = m;
    if (kind == KernelKind::dense) {
        inst.q = random_map<T>(c, side, side, rng);
        inst.k = random_map<T>(c, side, side, rng);
        inst.v = random_map<T>(c, side, side, rng);
    } else {
        auto q = pad_to_multiple(random_map<T>(c, side, side, rng), m);
        auto k = pad_to_multiple(random_map<T>(c, side, side, rng), m);
        auto v = pad_to_multiple(random_map<T>(c, side, side, rng), m);
        inst.qw = window_partition(q, m);
        inst.kw = window_partition(k, m);
        inst.vw = window_partition(v, m);
    }
    return inst;
}

// One timed measurement; doubles the inner iteration count until the sample
// exceeds the floor so the clock resolution cannot dominate.
template <typename T>
double timed_seconds_per_call(const KernelInstance<T>& inst, double min_sample_seconds = 2e-3) {
    using clock = std::chrono::steady_clock;
    static volatile T sink;
    int iters = 1;
    for (;;) {
        T acc = T(0);
        const auto t0 = clock::now();
        for (int i = 0; i < iters; ++i) acc += inst.run();
        const auto t1 = clock::now();
        sink = acc;
        const double elapsed = std::chrono::duration<double>(t1 - t0).count();
        if (elapsed >= min_sample_seconds || iters >= (1 << 20))
            return elapsed / iters;
        iters *= 2;
    }
}

}  // namespace benchdetail

// Measures the wall-time scaling of a kernel over square inputs and fits the
// exponent p of time ~ (H*W)^p by log-log least squares. Each size gets one
// discarded warmup plus `reps` timed repetitions (median reported) and one
// instrumented run for the op count.
inline ScalingReport run_scaling(KernelKind kind, int c, int m, const std::vector<int>& sizes,
                                 int reps, double band_lo = 0.0, double band_hi = 0.0) {
    if (sizes.size() < 3) throw std::invalid_argument("run_scaling: need at least 3 sizes");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1])
            throw std::invalid_argument("run_scaling: sizes must be strictly increasing");
    if (reps < 5) throw std::invalid_argument("run_scaling: need at least 5 repetitions");
    if (c < 1 || m < 1) throw std::invalid_argument("run_scaling: bad channels/window");

    if (band_lo == 0.0 && band_hi == 0.0) {
        if (kind == KernelKind::dense) {
            band_lo = 1.7;
            band_hi = 2.3;
        } else {
            band_lo = 0.85;
            band_hi = 1.25;
        }
    }

    ScalingReport report;
    report.kind = kernel_kind_name(kind);
    report.channels = c;
    report.window = m;
    report.reps = reps;
    report.band_lo = band_lo;
    report.band_hi = band_hi;
    report.note =
        "op unit: joint multiply+add counts (length-k inner product = 2k-1 ops); "
        "dense theory covers the quadratic Q^T.K term only";

    Xoshiro256pp rng(0x62656e6368ULL);
    for (int side : sizes) {
        const auto inst = benchdetail::make_instance<double>(kind, c, side, m, rng);

        {
            macs::OpCountScope scope;
            inst.run();
            ScalingEntry e;
            e.h = side;
            e.w = side;
            e.macs = scope.stop();
            e.theory = theoretical_ops(kind, c, side, side, m);
            report.entries.push_back(e);
        }

        benchdetail::timed_seconds_per_call(inst);  // warmup, discarded
        std::vector<double> samples;
        samples.reserve(reps);
        for (int r = 0; r < reps; ++r)
            samples.push_back(benchdetail::timed_seconds_per_call(inst));
        std::sort(samples.begin(), samples.end());
        report.entries.back().seconds = samples[samples.size() / 2];
    }

    // least-squares slope of log(t) against log(pixels)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(report.entries.size());
    for (const auto& e : report.entries) {
        const double x = std::log(static_cast<double>(e.h) * e.w);
        const double y = std::log(e.seconds);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    report.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    report.exponent_ok =
        report.fitted_exponent >= band_lo && report.fitted_exponent <= band_hi;
    return report;
}

inline nlohmann::ordered_json scaling_to_json(const ScalingReport& r) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind;
    j["channels"] = r.channels;
    j["window"] = r.window;
    j["reps"] = r.reps;
    j["note"] = r.note;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : r.entries)
        j["entries"].push_back({{"h", e.h},
                                {"w", e.w},
                                {"seconds", e.seconds},
                                {"macs", e.macs},
                                {"theoretical", e.theory}});
    j["fitted_exponent"] = r.fitted_exponent;
    j["exponent_band"] = {r.band_lo, r.band_hi};
    j["exponent_ok"] = r.exponent_ok;
    return j;
}

inline std::string scaling_to_table(const ScalingReport& r) {
    std::ostringstream os;
    os << "# kernel=" << r.kind << " C=" << r.channels << " M=" << r.window
       << " reps=" << r.reps << "\n";
    os << "# " << r.note << "\n";
    os << std::left << std::setw(8) << "H" << std::setw(8) << "W" << std::setw(16)
       << "seconds" << std::setw(16) << "macs" << std::setw(16) << "theoretical"
       << "\n";
    for (const auto& e : r.entries)
        os << std::left << std::setw(8) << e.h << std::setw(8) << e.w << std::setw(16)
           << std::scientific << std::setprecision(4) << e.seconds << std::setw(16)
           << e.macs << std::setw(16) << e.theory << "\n";
    os << "fitted exponent: " << std::fixed << std::setprecision(3) << r.fitted_exponent
       << "  band [" << r.band_lo << ", " << r.band_hi << "]  "
       << (r.exponent_ok ? "ok" : "OUT OF BAND") << "\n";
    return os.str();
}

}  // namespace dhanshr
