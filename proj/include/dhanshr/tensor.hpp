#pragma once

#include <cassert>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhanshr {

// Dense rank-3 activation tensor, row-major (c, y, x). The universal carrier
// for feature maps throughout the library.
template <typename T>
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {
        if (c < 0 || h < 0 || w < 0)
            throw std::invalid_argument("FeatureMap: negative dimension");
    }

    std::size_t size() const { return data.size(); }
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    T& at(int c, int y, int x) { return data[index(c, y, x)]; }
    const T& at(int c, int y, int x) const { return data[index(c, y, x)]; }

    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    friend bool operator==(const FeatureMap& a, const FeatureMap& b) {
        return a.same_shape(b) && a.data == b.data;
    }
};

// Same geometry as FeatureMap with complex entries; FFT intermediate.
template <typename T>
struct ComplexMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<std::complex<T>> data;

    ComplexMap() = default;
    ComplexMap(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w) {}

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    std::complex<T>& at(int c, int y, int x) { return data[index(c, y, x)]; }
    const std::complex<T>& at(int c, int y, int x) const { return data[index(c, y, x)]; }
};

template <typename T>
FeatureMap<T> real_part(const ComplexMap<T>& m) {
    FeatureMap<T> out(m.channels, m.height, m.width);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i].real();
    return out;
}

template <typename T>
bool all_finite(const FeatureMap<T>& m) {
    for (T v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

template <typename T>
void check_finite(const FeatureMap<T>& m, const char* where) {
    if (!all_finite(m))
        throw std::runtime_error(std::string("non-finite values after ") + where);
}

template <typename T>
FeatureMap<T> add(const FeatureMap<T>& a, const FeatureMap<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    FeatureMap<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

// out = wa*a + wb*b
template <typename T>
FeatureMap<T> lerp(const FeatureMap<T>& a, const FeatureMap<T>& b, T wa, T wb) {
    if (!a.same_shape(b)) throw std::invalid_argument("lerp: shape mismatch");
    FeatureMap<T> out(a.channels, a.height, a.width);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = wa * a.data[i] + wb * b.data[i];
    return out;
}

template <typename T>
FeatureMap<T> concat_channels(const FeatureMap<T>& a, const FeatureMap<T>& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("concat_channels: spatial mismatch");
    FeatureMap<T> out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

template <typename T>
FeatureMap<T> crop(const FeatureMap<T>& m, int h, int w) {
    if (h > m.height || w > m.width) throw std::invalid_argument("crop: enlarging");
    if (h == m.height && w == m.width) return m;
    FeatureMap<T> out(m.channels, h, w);
    for (int c = 0; c < m.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = m.at(c, y, x);
    return out;
}

template <typename T>
T max_abs(const FeatureMap<T>& m) {
    T best = T(0);
    for (T v : m.data) best = std::max(best, std::abs(v));
    return best;
}

template <typename T>
T max_abs_diff(const FeatureMap<T>& a, const FeatureMap<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    T best = T(0);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        best = std::max(best, std::abs(a.data[i] - b.data[i]));
    return best;
}

}  // namespace dhanshr
