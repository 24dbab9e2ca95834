#pragma once

#include <functional>
#include <span>
#include <vector>

namespace dhanshr {

// Central-difference gradient estimate of a scalar function of a flat
// parameter vector: (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps).
template <typename T>
std::vector<T> finite_diff(const std::function<T(std::span<const T>)>& f,
                           std::span<const T> x, T eps = T(1e-5)) {
    std::vector<T> probe(x.begin(), x.end());
    std::vector<T> grad(x.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const T saved = probe[i];
        probe[i] = saved + eps;
        const T fp = f(probe);
        probe[i] = saved - eps;
        const T fm = f(probe);
        probe[i] = saved;
        grad[i] = (fp - fm) / (T(2) * eps);
    }
    return grad;
}

// Relative error between an analytic and a numeric gradient entry, with an
// absolute floor so that near-zero pairs do not blow up.
template <typename T>
T gradient_rel_error(T analytic, T numeric) {
    const T scale = std::max(std::abs(analytic), std::abs(numeric));
    return std::abs(analytic - numeric) / (scale + T(1e-8));
}

template <typename T>
T max_gradient_rel_error(std::span<const T> analytic, std::span<const T> numeric) {
    T worst = T(0);
    for (std::size_t i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, gradient_rel_error(analytic[i], numeric[i]));
    return worst;
}

}  // namespace dhanshr
