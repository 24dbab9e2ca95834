#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhanshr/network.hpp"
#include "dhanshr/version.hpp"

namespace dhanshr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

// Binary checkpoint layout:
//   "DHSR" | u32 version | u32 config-json-len | config json (canonical)
//   then per tensor in weight-visitation order:
//   u32 name-len | name | u8 dtype (1=f32, 2=f64) | u32 rank | u32 dims[rank]
//   | raw little-endian scalars
// No trailing bytes are allowed.

namespace ckptdetail {

inline constexpr char kMagic[4] = {'D', 'H', 'S', 'R'};

template <typename T>
constexpr std::uint8_t dtype_tag() {
    if constexpr (std::is_same_v<T, float>) return 1;
    else return 2;
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void finish(const std::string& path) {
        out_.flush();
        if (!out_) throw std::runtime_error("checkpoint: write failed: " + path);
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw std::runtime_error("checkpoint: cannot open: " + path);
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw std::runtime_error("checkpoint: truncated file " + path_ + " at offset " +
                                     std::to_string(offset_ + in_.gcount()));
        offset_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::string str(std::size_t max_len = 1 << 20) {
        const std::uint32_t n = u32();
        if (n > max_len)
            throw std::runtime_error("checkpoint: implausible string length at offset " +
                                     std::to_string(offset_ - 4));
        std::string s(n, '\0');
        if (n) bytes(s.data(), n);
        return s;
    }
    bool at_eof() {
        in_.peek();
        return in_.eof();
    }
    std::size_t offset() const { return offset_; }

private:
    std::ifstream in_;
    std::string path_;
    std::size_t offset_ = 0;
};

}  // namespace ckptdetail

template <typename T>
void save_checkpoint(const ModelWeights<T>& model, const std::string& path) {
    ckptdetail::Writer w(path);
    w.bytes(ckptdetail::kMagic, 4);
    w.u32(kCheckpointFormatVersion);
    w.str(canonical_config_json(model.config));

    visit_weights(const_cast<ModelWeights<T>&>(model),
                  [&](const std::string& name, T* data, std::size_t n,
                      const std::vector<int>& dims) {
                      w.str(name);
                      w.u8(ckptdetail::dtype_tag<T>());
                      w.u32(static_cast<std::uint32_t>(dims.size()));
                      for (int d : dims) w.u32(static_cast<std::uint32_t>(d));
                      w.bytes(data, n * sizeof(T));
                  });
    w.finish(path);
}

template <typename T>
ModelWeights<T> load_checkpoint(const std::string& path) {
    ckptdetail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, ckptdetail::kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format version " +
                                 std::to_string(version));

    ModelConfig config;
    try {
        config = config_from_json(nlohmann::json::parse(r.str()));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: bad embedded config: ") + e.what());
    }

    ModelWeights<T> model = make_model_structure<T>(config);
    visit_weights(model, [&](const std::string& name, T* data, std::size_t n,
                             const std::vector<int>& dims) {
        const std::string stored_name = r.str();
        if (stored_name != name)
            throw std::runtime_error("checkpoint: expected tensor '" + name + "', found '" +
                                     stored_name + "'");
        const std::uint8_t tag = r.u8();
        if (tag != ckptdetail::dtype_tag<T>())
            throw std::runtime_error("checkpoint: dtype mismatch for tensor '" + name + "'");
        const std::uint32_t rank = r.u32();
        if (rank != dims.size())
            throw std::runtime_error("checkpoint: rank mismatch for tensor '" + name + "'");
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint32_t d = r.u32();
            if (d != static_cast<std::uint32_t>(dims[i]))
                throw std::runtime_error("checkpoint: dim mismatch for tensor '" + name +
                                         "' axis " + std::to_string(i) + ": file has " +
                                         std::to_string(d) + ", config expects " +
                                         std::to_string(dims[i]));
            count *= d;
        }
        if (count != n)
            throw std::runtime_error("checkpoint: size mismatch for tensor '" + name + "'");
        r.bytes(data, n * sizeof(T));
    });
    if (!r.at_eof())
        throw std::runtime_error("checkpoint: trailing bytes in " + path + " at offset " +
                                 std::to_string(r.offset()));
    return model;
}

}  // namespace dhanshr
