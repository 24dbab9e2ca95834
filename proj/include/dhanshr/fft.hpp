#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dhanshr/tensor.hpp"

namespace dhanshr {

namespace fftdetail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, unnormalized. sign = -1 forward, +1 inverse.
template <typename T>
void fft_pow2(std::vector<std::complex<T>>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const T ang = T(sign) * T(2) * std::numbers::pi_v<T> / static_cast<T>(len);
        const std::complex<T> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<T> w(1);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<T> u = a[i + k];
                const std::complex<T> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Bluestein chirp-z transform: arbitrary-length DFT via a power-of-two
// convolution. Unnormalized, same sign convention as fft_pow2.
template <typename T>
void fft_bluestein(std::vector<std::complex<T>>& a, int sign) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    // chirp c_k = exp(sign * i * pi * k^2 / n); reduce k^2 mod 2n to keep
    // the argument small
    std::vector<std::complex<T>> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n);
        const T ang = T(sign) * std::numbers::pi_v<T> * static_cast<T>(k2) / static_cast<T>(n);
        chirp[k] = std::complex<T>(std::cos(ang), std::sin(ang));
    }

    std::vector<std::complex<T>> fa(m, std::complex<T>(0));
    std::vector<std::complex<T>> fb(m, std::complex<T>(0));
    for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
    for (std::size_t k = 0; k < n; ++k) {
        fb[k] = std::conj(chirp[k]);
        if (k != 0) fb[m - k] = std::conj(chirp[k]);
    }
    fft_pow2(fa, -1);
    fft_pow2(fb, -1);
    for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
    fft_pow2(fa, +1);
    const T scale = T(1) / static_cast<T>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * scale * chirp[k];
}

template <typename T>
void fft_any(std::vector<std::complex<T>>& a, int sign) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, sign);
    else
        fft_bluestein(a, sign);
}

// In-place transform over the last two axes of a (C, H, W) complex buffer.
template <typename T>
void fft2_axes(ComplexMap<T>& m, int sign) {
    std::vector<std::complex<T>> line;
    for (int c = 0; c < m.channels; ++c) {
        line.resize(m.width);
        for (int y = 0; y < m.height; ++y) {
            for (int x = 0; x < m.width; ++x) line[x] = m.at(c, y, x);
            fft_any(line, sign);
            for (int x = 0; x < m.width; ++x) m.at(c, y, x) = line[x];
        }
        line.resize(m.height);
        for (int x = 0; x < m.width; ++x) {
            for (int y = 0; y < m.height; ++y) line[y] = m.at(c, y, x);
            fft_any(line, sign);
            for (int y = 0; y < m.height; ++y) m.at(c, y, x) = line[y];
        }
    }
}

}  // namespace fftdetail

// Per-channel 2-D DFT. Convention: unnormalized forward, 1/(HW)-normalized
// inverse, so the DC bin of the forward transform is the plain sum.
template <typename T>
ComplexMap<T> fft2d(const FeatureMap<T>& input) {
    ComplexMap<T> out(input.channels, input.height, input.width);
    for (std::size_t i = 0; i < input.data.size(); ++i)
        out.data[i] = std::complex<T>(input.data[i], T(0));
    fftdetail::fft2_axes(out, -1);
    return out;
}

template <typename T>
ComplexMap<T> fft2d(const ComplexMap<T>& input) {
    ComplexMap<T> out = input;
    fftdetail::fft2_axes(out, -1);
    return out;
}

template <typename T>
ComplexMap<T> ifft2d(const ComplexMap<T>& input) {
    ComplexMap<T> out = input;
    fftdetail::fft2_axes(out, +1);
    const T scale = T(1) / (static_cast<T>(input.height) * static_cast<T>(input.width));
    for (auto& v : out.data) v *= scale;
    return out;
}

}  // namespace dhanshr
