#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhanshr/tensor.hpp"

namespace dhanshr {

// Structured image error: io (file system / corrupt stream), format (not a
// recognized image at all), unsupported (valid but outside the 8-bit subset).
struct ImageError : std::runtime_error {
    enum class Kind { io, format, unsupported };
    Kind kind;
    ImageError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

namespace imagedetail {

inline constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError(ImageError::Kind::io, "cannot open image: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError(ImageError::Kind::io, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError(ImageError::Kind::io, "write failed: " + path);
}

inline std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

// 8-bit interleaved pixels, any of gray / RGB / RGBA.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<unsigned char> pixels;
};

inline RawImage decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw ImageError(ImageError::Kind::format, "not a PNG file: " + path);

    std::size_t pos = 8;
    bool have_ihdr = false;
    std::uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    std::vector<unsigned char> idat;

    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw ImageError(ImageError::Kind::format, "truncated PNG chunk in " + path);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const unsigned char* data = &bytes[pos + 8];

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ImageError(ImageError::Kind::format, "bad IHDR in " + path);
            width = be32(data);
            height = be32(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            if (data[10] != 0 || data[11] != 0)
                throw ImageError(ImageError::Kind::format, "bad IHDR methods in " + path);
            if (data[12] != 0)
                throw ImageError(ImageError::Kind::unsupported,
                                 "interlaced PNG not supported: " + path);
            if (bit_depth != 8)
                throw ImageError(ImageError::Kind::unsupported,
                                 std::to_string(bit_depth) + "-bit PNG not supported (8-bit only): " +
                                     path);
            if (color_type != 0 && color_type != 2 && color_type != 6)
                throw ImageError(ImageError::Kind::unsupported,
                                 "PNG color type " + std::to_string(color_type) +
                                     " not supported (gray/RGB/RGBA): " + path);
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!have_ihdr || width == 0 || height == 0)
        throw ImageError(ImageError::Kind::format, "PNG missing IHDR: " + path);
    if (idat.empty()) throw ImageError(ImageError::Kind::format, "PNG missing IDAT: " + path);

    const int channels = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    const std::size_t raw_size = (stride + 1) * height;
    std::vector<unsigned char> raw(raw_size);
    uLongf dest_len = raw_size;
    if (uncompress(raw.data(), &dest_len, idat.data(), idat.size()) != Z_OK ||
        dest_len != raw_size)
        throw ImageError(ImageError::Kind::format, "PNG inflate failed: " + path);

    RawImage img;
    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.channels = channels;
    img.pixels.resize(stride * height);

    std::vector<unsigned char> prev(stride, 0);
    for (std::uint32_t y = 0; y < height; ++y) {
        const unsigned char filter = raw[y * (stride + 1)];
        const unsigned char* src = &raw[y * (stride + 1) + 1];
        unsigned char* dst = &img.pixels[y * stride];
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? dst[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default:
                    throw ImageError(ImageError::Kind::format,
                                     "bad PNG filter " + std::to_string(filter) + " in " + path);
            }
            dst[i] = static_cast<unsigned char>(v & 0xff);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return img;
}

inline std::vector<unsigned char> encode_png_rgb(const RawImage& img) {
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    std::vector<unsigned char> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw[y * (stride + 1)] = 0;  // filter: none
        std::memcpy(&raw[y * (stride + 1) + 1], &img.pixels[y * stride], stride);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), raw.size(), Z_DEFAULT_COMPRESSION) != Z_OK)
        throw ImageError(ImageError::Kind::io, "PNG deflate failed");
    compressed.resize(bound);

    std::vector<unsigned char> out(kPngSignature, kPngSignature + 8);
    auto chunk = [&](const char* type, const std::vector<unsigned char>& data) {
        push_be32(out, static_cast<std::uint32_t>(data.size()));
        const std::size_t type_pos = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        const uLong crc =
            crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
        push_be32(out, static_cast<std::uint32_t>(crc));
    };

    std::vector<unsigned char> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(img.width));
    push_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", {});
    return out;
}

inline RawImage decode_ppm(const std::vector<unsigned char>& bytes, const std::string& path) {
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t += static_cast<char>(bytes[pos++]);
        return t;
    };
    if (token() != "P6") throw ImageError(ImageError::Kind::format, "not a P6 PPM: " + path);
    RawImage img;
    try {
        img.width = std::stoi(token());
        img.height = std::stoi(token());
        const int maxval = std::stoi(token());
        if (maxval != 255)
            throw ImageError(ImageError::Kind::unsupported,
                             "PPM maxval " + std::to_string(maxval) + " not supported: " + path);
    } catch (const std::invalid_argument&) {
        throw ImageError(ImageError::Kind::format, "bad PPM header: " + path);
    } catch (const std::out_of_range&) {
        throw ImageError(ImageError::Kind::format, "bad PPM header: " + path);
    }
    ++pos;  // single whitespace after maxval
    img.channels = 3;
    const std::size_t need = static_cast<std::size_t>(img.width) * img.height * 3;
    if (bytes.size() - pos < need)
        throw ImageError(ImageError::Kind::format, "truncated PPM: " + path);
    img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + need);
    return img;
}

inline std::vector<unsigned char> encode_ppm_rgb(const RawImage& img) {
    const std::string header =
        "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace imagedetail

// Decodes a PNG or binary PPM (detected by content) into a 3-channel map in
// [0, 1] with v = byte / 255. Gray images replicate, RGBA drops alpha.
template <typename T>
FeatureMap<T> load_image(const std::string& path) {
    using namespace imagedetail;
    const auto bytes = read_file(path);
    RawImage img;
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0)
        img = decode_png(bytes, path);
    else if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        img = decode_ppm(bytes, path);
    else
        throw ImageError(ImageError::Kind::format, "unrecognized image format: " + path);

    FeatureMap<T> map(3, img.height, img.width);
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* px = &img.pixels[i * img.channels];
        for (int c = 0; c < 3; ++c) {
            const unsigned char v = img.channels == 1 ? px[0] : px[c];
            map.data[c * n + i] = static_cast<T>(v) / T(255);
        }
    }
    return map;
}

// Encodes with round-half-up after clamping to [0, 255]; .ppm paths get PPM,
// everything else PNG.
template <typename T>
void save_image(const FeatureMap<T>& map, const std::string& path) {
    using namespace imagedetail;
    if (map.channels != 3)
        throw ImageError(ImageError::Kind::unsupported, "save_image expects 3 channels");

    RawImage img;
    img.width = map.width;
    img.height = map.height;
    img.channels = 3;
    const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
    img.pixels.resize(n * 3);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            const T v = map.data[c * n + i] * T(255);
            const T clamped = v < T(0) ? T(0) : (v > T(255) ? T(255) : v);
            img.pixels[i * 3 + c] = static_cast<unsigned char>(std::floor(clamped + T(0.5)));
        }

    if (ends_with(path, ".ppm"))
        write_file(path, encode_ppm_rgb(img));
    else
        write_file(path, encode_png_rgb(img));
}

}  // namespace dhanshr
