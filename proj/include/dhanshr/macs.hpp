#pragma once

#include <cstdint>

// Operation counting for convolution and attention kernels.
//
// Unit convention: joint multiply+add counts, matching the per-inner-product
// cost 2k-1 of a length-k dot product. A bias add contributes 1. Softmax,
// normalization, activations and FFTs are never counted, neither here nor in
// the analytic cost model, so the two sides are directly comparable.
//
// Counting is active only inside an OpCountScope; outside a scope the per-op
// overhead is a thread-local branch. Define DHANSHR_DISABLE_OP_COUNTING to
// compile the counter out entirely for timing-sensitive builds.

namespace dhanshr::macs {

#ifndef DHANSHR_DISABLE_OP_COUNTING

namespace detail {
inline thread_local std::uint64_t tl_count = 0;
inline thread_local bool tl_active = false;
}  // namespace detail

inline void add(std::uint64_t n) {
    if (detail::tl_active) detail::tl_count += n;
}

// ops for one inner product of length k
inline void add_dot(std::uint64_t k) {
    if (detail::tl_active) detail::tl_count += 2 * k - 1;
}

class OpCountScope {
public:
    OpCountScope() : prev_active_(detail::tl_active), prev_count_(detail::tl_count) {
        detail::tl_active = true;
        detail::tl_count = 0;
    }
    ~OpCountScope() { stop(); }
    OpCountScope(const OpCountScope&) = delete;
    OpCountScope& operator=(const OpCountScope&) = delete;

    // ops recorded since scope entry; restores the enclosing scope
    std::uint64_t stop() {
        if (!stopped_) {
            stopped_ = true;
            count_ = detail::tl_count;
            detail::tl_active = prev_active_;
            detail::tl_count = prev_count_ + count_;
        }
        return count_;
    }

private:
    bool prev_active_;
    std::uint64_t prev_count_;
    std::uint64_t count_ = 0;
    bool stopped_ = false;
};

#else

inline void add(std::uint64_t) {}
inline void add_dot(std::uint64_t) {}

class OpCountScope {
public:
    std::uint64_t stop() { return 0; }
};

#endif

}  // namespace dhanshr::macs
