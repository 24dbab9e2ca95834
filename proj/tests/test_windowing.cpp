#include <gtest/gtest.h>

#include <thread>

#include "dhanshr/rng.hpp"
#include "dhanshr/tensor.hpp"
#include "dhanshr/windowing.hpp"
#include "oracles.hpp"

using namespace dhanshr;

namespace {

FeatureMap<double> random_map(int c, int h, int w, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    FeatureMap<double> f(c, h, w);
    for (auto& v : f.data) v = rng.uniform_symmetric(1.0);
    return f;
}

FeatureMap<double> iota_map(int h, int w) {
    FeatureMap<double> f(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(0, y, x) = y * w + x;
    return f;
}

}  // namespace

TEST(Padding, PadsRightAndBottomWithZeros) {
    const auto f = iota_map(3, 3);
    const auto padded = pad_to_multiple(f, 2);
    EXPECT_EQ(padded.height, 4);
    EXPECT_EQ(padded.width, 4);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) EXPECT_DOUBLE_EQ(padded.at(0, y, x), f.at(0, y, x));
    for (int x = 0; x < 4; ++x) EXPECT_DOUBLE_EQ(padded.at(0, 3, x), 0.0);
    for (int y = 0; y < 4; ++y) EXPECT_DOUBLE_EQ(padded.at(0, y, 3), 0.0);
}

TEST(Padding, NoOpWhenAlreadyMultiple) {
    const auto f = random_map(2, 8, 4, 1);
    EXPECT_EQ(pad_to_multiple(f, 4), f);
}

TEST(Padding, CountsPreservedAndZeros) {
    const auto f = random_map(1, 5, 7, 2);
    const auto padded = pad_to_multiple(f, 4);
    EXPECT_EQ(padded.height, 8);
    EXPECT_EQ(padded.width, 8);
    int zeros = 0, preserved = 0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (y < 5 && x < 7) {
                EXPECT_DOUBLE_EQ(padded.at(0, y, x), f.at(0, y, x));
                ++preserved;
            } else {
                EXPECT_DOUBLE_EQ(padded.at(0, y, x), 0.0);
                ++zeros;
            }
        }
    EXPECT_EQ(preserved, 35);
    EXPECT_EQ(zeros, 29);
}

TEST(WindowPartition, IndexArithmetic4x4) {
    const auto f = iota_map(4, 4);
    const auto wt = window_partition(f, 2);
    EXPECT_EQ(wt.n_windows, 4);
    const double expected[4][4] = {
        {0, 1, 4, 5}, {2, 3, 6, 7}, {8, 9, 12, 13}, {10, 11, 14, 15}};
    for (int w = 0; w < 4; ++w)
        for (int p = 0; p < 4; ++p) EXPECT_DOUBLE_EQ(wt.at(w, 0, p), expected[w][p]);
}

TEST(WindowPartition, SingleWindowEqualsFlattenedMap) {
    const auto f = random_map(2, 4, 4, 3);
    const auto wt = window_partition(f, 4);
    EXPECT_EQ(wt.n_windows, 1);
    for (int c = 0; c < 2; ++c)
        for (int p = 0; p < 16; ++p)
            EXPECT_DOUBLE_EQ(wt.at(0, c, p), f.at(c, p / 4, p % 4));
}

TEST(WindowPartition, NonMultipleDimsThrow) {
    const auto f = random_map(1, 5, 8, 4);
    EXPECT_THROW(window_partition(f, 4), std::invalid_argument);
}

TEST(WindowPartition, RoundTrip) {
    const auto f = random_map(3, 8, 8, 5);
    EXPECT_EQ(window_reverse(window_partition(f, 4)), f);
}

TEST(WindowPartition, RoundTripWithPaddingCrop) {
    const auto f = random_map(2, 5, 9, 6);
    const auto padded = pad_to_multiple(f, 4);
    const auto wt = window_partition(padded, 4, f.height, f.width);
    EXPECT_EQ(window_reverse(wt), f);
}

TEST(WindowReverse, InconsistentMetaThrows) {
    auto wt = window_partition(random_map(1, 4, 4, 7), 2);
    wt.n_windows = 3;
    EXPECT_THROW(window_reverse(wt), std::invalid_argument);
}

TEST(CyclicShift, IndexArithmetic) {
    const auto f = iota_map(4, 4);
    const auto shifted = cyclic_shift(f, 1);
    EXPECT_DOUBLE_EQ(shifted.at(0, 0, 0), 5.0);
    EXPECT_DOUBLE_EQ(shifted.at(0, 3, 3), 0.0);
}

TEST(CyclicShift, ZeroIsIdentity) {
    const auto f = random_map(2, 5, 5, 8);
    EXPECT_EQ(cyclic_shift(f, 0), f);
}

TEST(CyclicShift, InverseRestores) {
    const auto f = random_map(2, 5, 7, 9);
    EXPECT_EQ(inverse_cyclic_shift(cyclic_shift(f, 2), 2), f);
}

TEST(CyclicShift, OutOfRangeThrows) {
    const auto f = random_map(1, 4, 6, 10);
    EXPECT_THROW(cyclic_shift(f, 4), std::invalid_argument);
    EXPECT_THROW(cyclic_shift(f, -1), std::invalid_argument);
    EXPECT_THROW(inverse_cyclic_shift(f, 4), std::invalid_argument);
}

TEST(RoundTrips, RandomConfigurations) {
    Xoshiro256pp rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const int c = 1 + static_cast<int>(rng.next() % 4);
        const int h = 3 + static_cast<int>(rng.next() % 20);
        const int w = 3 + static_cast<int>(rng.next() % 20);
        const int m = 1 + static_cast<int>(rng.next() % 8);
        const int s = static_cast<int>(rng.next() % std::min({m, h, w}));
        const auto f = random_map(c, h, w, 1000 + trial);

        const auto padded = pad_to_multiple(f, m);
        EXPECT_EQ(window_reverse(window_partition(padded, m, h, w)), f);
        EXPECT_EQ(inverse_cyclic_shift(cyclic_shift(f, s), s), f);
    }
}

TEST(ShiftMask, ZeroShiftAllZero) {
    const auto mask = build_shift_mask(8, 8, 4, 0);
    for (double v : mask.data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(ShiftMask, InteriorWindowUnmasked) {
    const auto mask = build_shift_mask(8, 8, 4, 2);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) EXPECT_DOUBLE_EQ(mask.at(0, i, j), 0.0);
}

TEST(ShiftMask, BottomRightWindowMatchesOracle) {
    const auto mask = build_shift_mask(8, 8, 4, 2);
    const auto expected = oracles::shift_mask(8, 8, 4, 2);
    const int w = 3;  // window (1,1)
    bool any_nonzero = false;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            EXPECT_DOUBLE_EQ(mask.at(w, i, j), expected.at(w, i, j));
            if (mask.at(w, i, j) != 0.0) any_nonzero = true;
        }
    EXPECT_TRUE(any_nonzero);
}

TEST(ShiftMask, ExhaustiveOracleEquivalence) {
    for (int hp : {4, 8, 12, 16})
        for (int wp : {4, 8, 12, 16})
            for (int m : {2, 4})
                for (int s = 0; s < m; ++s) {
                    const auto mask = build_shift_mask(hp, wp, m, s);
                    const auto expected = oracles::shift_mask(hp, wp, m, s);
                    ASSERT_EQ(mask.data, expected.data)
                        << "hp=" << hp << " wp=" << wp << " m=" << m << " s=" << s;
                }
}

TEST(ShiftMask, SymmetricZeroDiagonalValues) {
    const auto mask = build_shift_mask(12, 16, 4, 3);
    for (int w = 0; w < mask.n_windows; ++w)
        for (int i = 0; i < mask.window_area; ++i) {
            EXPECT_DOUBLE_EQ(mask.at(w, i, i), 0.0);
            for (int j = 0; j < mask.window_area; ++j) {
                const double v = mask.at(w, i, j);
                EXPECT_TRUE(v == 0.0 || v == -100.0);
                EXPECT_DOUBLE_EQ(v, mask.at(w, j, i));
            }
        }
}

TEST(ShiftMask, MaskedWindowCountMatchesLastRowColRule) {
    for (const auto [hp, wp, m, s] : {std::tuple{8, 8, 4, 2}, {16, 8, 4, 1}, {12, 16, 2, 1}}) {
        const auto mask = build_shift_mask(hp, wp, m, s);
        int masked_windows = 0;
        for (int w = 0; w < mask.n_windows; ++w) {
            bool any = false;
            for (int i = 0; i < mask.window_area * mask.window_area; ++i)
                if (mask.data[static_cast<std::size_t>(w) * mask.window_area * mask.window_area +
                              i] != 0.0)
                    any = true;
            if (any) ++masked_windows;
        }
        const int expected = wp / m + hp / m - 1;
        EXPECT_EQ(masked_windows, expected) << hp << "x" << wp << " m=" << m << " s=" << s;
    }
}

TEST(ShiftMask, ShiftOutsideWindowThrows) {
    EXPECT_THROW(build_shift_mask(8, 8, 4, 4), std::invalid_argument);
    EXPECT_THROW(build_shift_mask(7, 8, 4, 1), std::invalid_argument);
}

TEST(MaskCache, ReturnsSameEntryAcrossThreads) {
    auto& cache = shift_mask_cache();
    const auto first = cache.get(16, 16, 4, 2);
    std::shared_ptr<const AttentionMask> seen[4];
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] { seen[t] = cache.get(16, 16, 4, 2); });
    for (auto& th : threads) th.join();
    for (int t = 0; t < 4; ++t) EXPECT_EQ(seen[t].get(), first.get());
    EXPECT_EQ(first->data, build_shift_mask(16, 16, 4, 2).data);
}
