#pragma once

// Named-tensor container used for every weight file.
//
// Byte layout (all integers unsigned 32-bit little-endian):
//
//   magic        8 bytes  "VINPTNS1"
//   count        u32      number of tensors
//   count x {
//     name_len   u32
//     name       name_len bytes, UTF-8, unique within the file
//     dtype      u32      1 = float32 (the only supported type)
//     rank       u32
//     dims       rank x u32
//   }
//   payloads     one per header entry, in header order, float32
//                little-endian, row-major, prod(dims) values each
//
// Files end exactly after the last payload.

#include "vinpaint/kernels.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace vinpaint {

class TensorFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tensor {
    std::vector<std::uint32_t> shape;
    std::vector<float> values;

    std::size_t element_count() const;
};

class TensorBundle {
public:
    void put(const std::string& name, Tensor tensor);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    std::size_t size() const { return tensors_.size(); }
    const std::map<std::string, Tensor>& tensors() const { return tensors_; }

    std::vector<std::uint8_t> serialize() const;
    static TensorBundle deserialize(const std::vector<std::uint8_t>& bytes);

    void save(const std::filesystem::path& path) const;
    static TensorBundle load(const std::filesystem::path& path);

    // Convolution weights are stored as "<prefix>.weight" [out, in, kh, kw]
    // and "<prefix>.bias" [out].
    void put_conv(const std::string& prefix, const ConvWeights& w);
    ConvWeights get_conv(const std::string& prefix, int out_ch, int in_ch, int kh, int kw) const;
    void put_vector(const std::string& name, const std::vector<double>& values);
    std::vector<double> get_vector(const std::string& name, std::size_t expected) const;
    /// Row-major [rows, cols] matrix.
    void put_matrix(const std::string& name, int rows, int cols, const std::vector<double>& values);
    std::vector<double> get_matrix(const std::string& name, int rows, int cols) const;

private:
    std::map<std::string, Tensor> tensors_;
};

/// Deterministic He-style initialisation with a seeded generator.
ConvWeights random_conv(int out_ch, int in_ch, int kh, int kw, std::uint64_t seed, double gain = 0.5);

}  // namespace vinpaint
