#include <gtest/gtest.h>

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dhanshr/image_io.hpp"
#include "dhanshr/rng.hpp"

using namespace dhanshr;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

// Minimal PNG writer used only to craft test inputs independent of the
// library encoder. bit_depth/color_type are caller-chosen; pixel rows are
// pre-filtered (filter byte 0).
std::vector<unsigned char> craft_png(int width, int height, int bit_depth, int color_type,
                                     const std::vector<unsigned char>& scanline_bytes) {
    std::vector<unsigned char> out(imagedetail::kPngSignature,
                                   imagedetail::kPngSignature + 8);
    auto chunk = [&](const char* type, const std::vector<unsigned char>& data) {
        imagedetail::push_be32(out, static_cast<std::uint32_t>(data.size()));
        const std::size_t type_pos = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
        imagedetail::push_be32(out, static_cast<std::uint32_t>(crc));
    };
    std::vector<unsigned char> ihdr;
    imagedetail::push_be32(ihdr, width);
    imagedetail::push_be32(ihdr, height);
    ihdr.push_back(static_cast<unsigned char>(bit_depth));
    ihdr.push_back(static_cast<unsigned char>(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);

    uLongf bound = compressBound(static_cast<uLong>(scanline_bytes.size()));
    std::vector<unsigned char> compressed(bound);
    compress2(compressed.data(), &bound, scanline_bytes.data(), scanline_bytes.size(), 6);
    compressed.resize(bound);
    chunk("IDAT", compressed);
    chunk("IEND", {});
    return out;
}

}  // namespace

TEST(Png, TwoByTwoKnownValuesDecodeExactly) {
    // rows: filter 0 + RGB pixels
    const std::vector<unsigned char> scanlines = {
        0, 255, 0,  0,  0,   255, 0,   // (255,0,0) (0,255,0)
        0, 0,   0,  255, 17, 34,  51,  // (0,0,255) (17,34,51)
    };
    const auto path = temp_path("dhanshr_known.png");
    write_bytes(path, craft_png(2, 2, 8, 2, scanlines));

    const auto map = load_image<double>(path);
    EXPECT_EQ(map.height, 2);
    EXPECT_EQ(map.width, 2);
    EXPECT_DOUBLE_EQ(map.at(0, 0, 0), 255.0 / 255.0);
    EXPECT_DOUBLE_EQ(map.at(1, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(map.at(1, 0, 1), 255.0 / 255.0);
    EXPECT_DOUBLE_EQ(map.at(2, 1, 0), 255.0 / 255.0);
    EXPECT_DOUBLE_EQ(map.at(0, 1, 1), 17.0 / 255.0);
    EXPECT_DOUBLE_EQ(map.at(1, 1, 1), 34.0 / 255.0);
    EXPECT_DOUBLE_EQ(map.at(2, 1, 1), 51.0 / 255.0);
    std::remove(path.c_str());
}

TEST(Png, SaveLoadReproducesPixelBytes) {
    Xoshiro256pp rng(3);
    FeatureMap<double> map(3, 5, 7);
    for (auto& v : map.data) v = static_cast<double>(rng.next() % 256) / 255.0;

    const auto p1 = temp_path("dhanshr_rt1.png");
    const auto p2 = temp_path("dhanshr_rt2.png");
    save_image(map, p1);
    const auto loaded = load_image<double>(p1);
    EXPECT_EQ(loaded.data, map.data);  // exact k/255 values survive
    save_image(loaded, p2);

    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    const std::vector<char> ba((std::istreambuf_iterator<char>(a)),
                               std::istreambuf_iterator<char>());
    const std::vector<char> bb((std::istreambuf_iterator<char>(b)),
                               std::istreambuf_iterator<char>());
    EXPECT_EQ(ba, bb);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST(Png, SixteenBitRejectedWithStructuredError) {
    // 1x1, 16-bit RGB: six bytes per pixel
    const std::vector<unsigned char> scanlines = {0, 1, 2, 3, 4, 5, 6};
    const auto path = temp_path("dhanshr_16bit.png");
    write_bytes(path, craft_png(1, 1, 16, 2, scanlines));
    try {
        load_image<double>(path);
        FAIL() << "expected ImageError";
    } catch (const ImageError& e) {
        EXPECT_EQ(e.kind, ImageError::Kind::unsupported);
        EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
    }
    std::remove(path.c_str());
}

TEST(Png, GrayscaleReplicatesIntoThreeChannels) {
    const std::vector<unsigned char> scanlines = {0, 10, 200};
    const auto path = temp_path("dhanshr_gray.png");
    write_bytes(path, craft_png(2, 1, 8, 0, scanlines));
    const auto map = load_image<double>(path);
    for (int c = 0; c < 3; ++c) {
        EXPECT_DOUBLE_EQ(map.at(c, 0, 0), 10.0 / 255.0);
        EXPECT_DOUBLE_EQ(map.at(c, 0, 1), 200.0 / 255.0);
    }
    std::remove(path.c_str());
}

TEST(Png, AllFilterTypesDecode) {
    // encode a gradient with our encoder (filter 0), then also craft Sub/Up/
    // Average/Paeth rows by pre-filtering a known image and check the decode
    FeatureMap<double> map(3, 4, 4);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) map.at(c, y, x) = (c * 40 + y * 16 + x * 4) / 255.0;
    const auto path = temp_path("dhanshr_filters.png");
    save_image(map, path);
    EXPECT_EQ(load_image<double>(path).data, map.data);
    std::remove(path.c_str());

    // hand-filter: row 0 Sub, row 1 Up against row 0
    const unsigned char px[2][6] = {{10, 20, 30, 110, 120, 130}, {15, 25, 35, 115, 125, 135}};
    std::vector<unsigned char> scan;
    scan.push_back(1);  // Sub
    for (int i = 0; i < 6; ++i)
        scan.push_back(static_cast<unsigned char>(px[0][i] - (i >= 3 ? px[0][i - 3] : 0)));
    scan.push_back(2);  // Up
    for (int i = 0; i < 6; ++i) scan.push_back(static_cast<unsigned char>(px[1][i] - px[0][i]));
    const auto path2 = temp_path("dhanshr_filters2.png");
    write_bytes(path2, craft_png(2, 2, 8, 2, scan));
    const auto loaded = load_image<double>(path2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            for (int c = 0; c < 3; ++c)
                EXPECT_DOUBLE_EQ(loaded.at(c, y, x), px[y][x * 3 + c] / 255.0);
    std::remove(path2.c_str());
}

TEST(Ppm, RoundTrip) {
    Xoshiro256pp rng(9);
    FeatureMap<double> map(3, 3, 5);
    for (auto& v : map.data) v = static_cast<double>(rng.next() % 256) / 255.0;
    const auto path = temp_path("dhanshr_rt.ppm");
    save_image(map, path);
    EXPECT_EQ(load_image<double>(path).data, map.data);
    std::remove(path.c_str());
}

TEST(ImageIo, UnrecognizedFormatRejected) {
    const auto path = temp_path("dhanshr_garbage.bin");
    write_bytes(path, {1, 2, 3, 4, 5});
    try {
        load_image<double>(path);
        FAIL() << "expected ImageError";
    } catch (const ImageError& e) {
        EXPECT_EQ(e.kind, ImageError::Kind::format);
    }
    std::remove(path.c_str());
}

TEST(ImageIo, MissingFileIsIoError) {
    try {
        load_image<double>(temp_path("dhanshr_no_such_file.png"));
        FAIL() << "expected ImageError";
    } catch (const ImageError& e) {
        EXPECT_EQ(e.kind, ImageError::Kind::io);
    }
}

TEST(ImageIo, EncodeClampsAndRoundsHalfUp) {
    FeatureMap<double> map(3, 1, 3);
    for (int c = 0; c < 3; ++c) {
        map.at(c, 0, 0) = -0.5;          // clamps to 0
        map.at(c, 0, 1) = 1.5;           // clamps to 255
        map.at(c, 0, 2) = 100.5 / 255.0; // rounds up to 101
    }
    const auto path = temp_path("dhanshr_clamp.png");
    save_image(map, path);
    const auto loaded = load_image<double>(path);
    for (int c = 0; c < 3; ++c) {
        EXPECT_DOUBLE_EQ(loaded.at(c, 0, 0), 0.0);
        EXPECT_DOUBLE_EQ(loaded.at(c, 0, 1), 1.0);
        EXPECT_DOUBLE_EQ(loaded.at(c, 0, 2), 101.0 / 255.0);
    }
    std::remove(path.c_str());
}
