#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "dhanshr/tensor.hpp"

namespace dhanshr {

// Feature map reorganized into non-overlapping M x M windows, (w, c, p) order
// with p = M*dy + dx. Carries enough geometry to undo the partition.
template <typename T>
struct WindowedTensor {
    int n_windows = 0;
    int channels = 0;
    int window_area = 0;  // M*M
    std::vector<T> data;

    int orig_height = 0;
    int orig_width = 0;
    int padded_height = 0;
    int padded_width = 0;
    int window = 0;  // M

    std::size_t index(int w, int c, int p) const {
        return (static_cast<std::size_t>(w) * channels + c) * window_area + p;
    }
    T& at(int w, int c, int p) { return data[index(w, c, p)]; }
    const T& at(int w, int c, int p) const { return data[index(w, c, p)]; }
};

// Per-window additive attention logits with entries in {0, -100}.
struct AttentionMask {
    int n_windows = 0;
    int window_area = 0;
    std::vector<double> data;

    std::size_t index(int w, int i, int j) const {
        return (static_cast<std::size_t>(w) * window_area + i) * window_area + j;
    }
    double at(int w, int i, int j) const { return data[index(w, i, j)]; }
};

// Zero-pads the right and bottom edges up to the next multiples of M.
template <typename T>
FeatureMap<T> pad_to_multiple(const FeatureMap<T>& f, int m) {
    if (m < 1) throw std::invalid_argument("pad_to_multiple: window size must be >= 1");
    const int hp = (f.height + m - 1) / m * m;
    const int wp = (f.width + m - 1) / m * m;
    if (hp == f.height && wp == f.width) return f;
    FeatureMap<T> out(f.channels, hp, wp);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) out.at(c, y, x) = f.at(c, y, x);
    return out;
}

// Partition into M x M windows, row-major over window grid positions.
// Input must already be padded; orig_h/orig_w record the pre-padding size
// so window_reverse can crop.
template <typename T>
WindowedTensor<T> window_partition(const FeatureMap<T>& f, int m,
                                   int orig_h = -1, int orig_w = -1) {
    if (m < 1) throw std::invalid_argument("window_partition: window size must be >= 1");
    if (f.height % m != 0 || f.width % m != 0)
        throw std::invalid_argument("window_partition: dims not multiples of window (pad first)");

    WindowedTensor<T> out;
    out.channels = f.channels;
    out.window = m;
    out.window_area = m * m;
    out.padded_height = f.height;
    out.padded_width = f.width;
    out.orig_height = orig_h < 0 ? f.height : orig_h;
    out.orig_width = orig_w < 0 ? f.width : orig_w;

    const int wr = f.height / m;
    const int wc = f.width / m;
    out.n_windows = wr * wc;
    out.data.resize(static_cast<std::size_t>(out.n_windows) * f.channels * out.window_area);
    for (int r = 0; r < wr; ++r)
        for (int q = 0; q < wc; ++q) {
            const int w = r * wc + q;
            for (int c = 0; c < f.channels; ++c)
                for (int dy = 0; dy < m; ++dy)
                    for (int dx = 0; dx < m; ++dx)
                        out.at(w, c, m * dy + dx) = f.at(c, r * m + dy, q * m + dx);
        }
    return out;
}

// Exact inverse of window_partition followed by a crop to the original dims.
template <typename T>
FeatureMap<T> window_reverse(const WindowedTensor<T>& wt) {
    const int m = wt.window;
    if (m < 1 || wt.padded_height % m != 0 || wt.padded_width % m != 0 ||
        wt.n_windows != (wt.padded_height / m) * (wt.padded_width / m) ||
        wt.window_area != m * m ||
        wt.data.size() != static_cast<std::size_t>(wt.n_windows) * wt.channels * wt.window_area)
        throw std::invalid_argument("window_reverse: inconsistent metadata");

    FeatureMap<T> padded(wt.channels, wt.padded_height, wt.padded_width);
    const int wc = wt.padded_width / m;
    for (int w = 0; w < wt.n_windows; ++w) {
        const int r = w / wc;
        const int q = w % wc;
        for (int c = 0; c < wt.channels; ++c)
            for (int dy = 0; dy < m; ++dy)
                for (int dx = 0; dx < m; ++dx)
                    padded.at(c, r * m + dy, q * m + dx) = wt.at(w, c, m * dy + dx);
    }
    return crop(padded, wt.orig_height, wt.orig_width);
}

// Toroidal up-left roll by s pixels: out[c][y][x] = in[c][(y+s) mod H][(x+s) mod W].
template <typename T>
FeatureMap<T> cyclic_shift(const FeatureMap<T>& f, int s) {
    if (s < 0 || s >= std::min(f.height, f.width))
        throw std::invalid_argument("cyclic_shift: shift out of range");
    if (s == 0) return f;
    FeatureMap<T> out(f.channels, f.height, f.width);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x)
                out.at(c, y, x) = f.at(c, (y + s) % f.height, (x + s) % f.width);
    return out;
}

// Inverse roll: out[c][y][x] = in[c][(y-s) mod H][(x-s) mod W].
template <typename T>
FeatureMap<T> inverse_cyclic_shift(const FeatureMap<T>& f, int s) {
    if (s < 0 || s >= std::min(f.height, f.width))
        throw std::invalid_argument("inverse_cyclic_shift: shift out of range");
    if (s == 0) return f;
    FeatureMap<T> out(f.channels, f.height, f.width);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x)
                out.at(c, y, x) = f.at(c, (y - s + f.height) % f.height, (x - s + f.width) % f.width);
    return out;
}

// Mask for the shifted pass. Pixels of the shifted map are labeled by the
// 9-region slicing (boundaries at H_p - M and H_p - s per axis); a pair of
// positions in the same window may attend to each other only if their labels
// agree, i.e. they were adjacent before the roll. Incompatible pairs get -100.
inline AttentionMask build_shift_mask(int padded_h, int padded_w, int m, int s) {
    if (m < 1 || padded_h % m != 0 || padded_w % m != 0)
        throw std::invalid_argument("build_shift_mask: dims not multiples of window");
    if (s < 0 || s >= m)
        throw std::invalid_argument("build_shift_mask: shift must satisfy 0 <= s < M");

    AttentionMask mask;
    mask.window_area = m * m;
    const int wr = padded_h / m;
    const int wc = padded_w / m;
    mask.n_windows = wr * wc;
    mask.data.assign(static_cast<std::size_t>(mask.n_windows) * mask.window_area * mask.window_area,
                     0.0);
    if (s == 0) return mask;

    auto region = [](int v, int extent, int m_, int s_) {
        if (v < extent - m_) return 0;
        if (v < extent - s_) return 1;
        return 2;
    };

    std::vector<int> labels(static_cast<std::size_t>(m) * m);
    for (int r = 0; r < wr; ++r)
        for (int q = 0; q < wc; ++q) {
            const int w = r * wc + q;
            for (int dy = 0; dy < m; ++dy)
                for (int dx = 0; dx < m; ++dx) {
                    const int ry = region(r * m + dy, padded_h, m, s);
                    const int rx = region(q * m + dx, padded_w, m, s);
                    labels[m * dy + dx] = 3 * ry + rx;
                }
            for (int i = 0; i < mask.window_area; ++i)
                for (int j = 0; j < mask.window_area; ++j)
                    if (labels[i] != labels[j]) mask.data[mask.index(w, i, j)] = -100.0;
        }
    return mask;
}

// Read-mostly cache over (H_p, W_p, M, s). Entries are immutable once
// published; callers hold them by shared_ptr.
class MaskCache {
public:
    std::shared_ptr<const AttentionMask> get(int padded_h, int padded_w, int m, int s) {
        const Key key{padded_h, padded_w, m, s};
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        auto built = std::make_shared<const AttentionMask>(build_shift_mask(padded_h, padded_w, m, s));
        std::unique_lock lock(mutex_);
        auto [it, inserted] = cache_.emplace(key, std::move(built));
        return it->second;
    }

private:
    using Key = std::tuple<int, int, int, int>;
    std::shared_mutex mutex_;
    std::map<Key, std::shared_ptr<const AttentionMask>> cache_;
};

inline MaskCache& shift_mask_cache() {
    static MaskCache cache;
    return cache;
}

}  // namespace dhanshr
