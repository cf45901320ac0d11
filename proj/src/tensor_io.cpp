#include "vinpaint/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <set>

namespace vinpaint {

namespace {

constexpr char kMagic[8] = {'V', 'I', 'N', 'P', 'T', 'N', 'S', '1'};
constexpr std::uint32_t kFloat32 = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw TensorFormatError("tensor file truncated");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void TensorBundle::put(const std::string& name, Tensor tensor) {
    if (name.empty()) throw TensorFormatError("tensor name must not be empty");
    if (tensor.values.size() != tensor.element_count()) throw TensorFormatError("tensor '" + name + "': size/shape mismatch");
    tensors_[name] = std::move(tensor);
}

const Tensor& TensorBundle::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw TensorFormatError("missing tensor '" + name + "'");
    return it->second;
}

std::vector<std::uint8_t> TensorBundle::serialize() const {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& [name, t] : tensors_) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, kFloat32);
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) put_u32(out, d);
    }
    for (const auto& [name, t] : tensors_) {
        for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

TensorBundle TensorBundle::deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw TensorFormatError("not a tensor container (bad magic)");
    }
    std::vector<std::uint8_t> body(bytes.begin() + sizeof(kMagic), bytes.end());
    Reader in(body);
    const std::uint32_t count = in.u32();
    std::vector<std::pair<std::string, Tensor>> entries;
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = in.u32();
        std::string name = in.text(name_len);
        if (!seen.insert(name).second) throw TensorFormatError("duplicate tensor '" + name + "'");
        if (in.u32() != kFloat32) throw TensorFormatError("tensor '" + name + "': unsupported dtype");
        Tensor t;
        const std::uint32_t rank = in.u32();
        for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(in.u32());
        entries.emplace_back(std::move(name), std::move(t));
    }
    TensorBundle bundle;
    for (auto& [name, t] : entries) {
        const std::size_t n = t.element_count();
        if (in.remaining() / 4 < n) throw TensorFormatError("tensor file truncated in payload of '" + name + "'");
        t.values.resize(n);
        for (auto& v : t.values) {
            v = in.f32();
            if (!std::isfinite(v)) throw TensorFormatError("tensor '" + name + "' holds a non-finite value");
        }
        bundle.tensors_[name] = std::move(t);
    }
    if (in.remaining() != 0) throw TensorFormatError("trailing bytes after last payload");
    return bundle;
}

void TensorBundle::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TensorFormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TensorFormatError("write failed: " + path.string());
}

TensorBundle TensorBundle::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorFormatError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

void TensorBundle::put_conv(const std::string& prefix, const ConvWeights& w) {
    w.validate();
    Tensor weight{{static_cast<std::uint32_t>(w.out_channels), static_cast<std::uint32_t>(w.in_channels),
                   static_cast<std::uint32_t>(w.kernel_h), static_cast<std::uint32_t>(w.kernel_w)},
                  std::vector<float>(w.weight.begin(), w.weight.end())};
    put(prefix + ".weight", std::move(weight));
    put_vector(prefix + ".bias", w.bias);
}

ConvWeights TensorBundle::get_conv(const std::string& prefix, int out_ch, int in_ch, int kh, int kw) const {
    const Tensor& t = get(prefix + ".weight");
    const std::vector<std::uint32_t> expected{static_cast<std::uint32_t>(out_ch), static_cast<std::uint32_t>(in_ch),
                                              static_cast<std::uint32_t>(kh), static_cast<std::uint32_t>(kw)};
    if (t.shape != expected) throw TensorFormatError("tensor '" + prefix + ".weight' has unexpected shape");
    ConvWeights w(out_ch, in_ch, kh, kw);
    std::copy(t.values.begin(), t.values.end(), w.weight.begin());
    w.bias = get_vector(prefix + ".bias", static_cast<std::size_t>(out_ch));
    return w;
}

void TensorBundle::put_vector(const std::string& name, const std::vector<double>& values) {
    put(name, Tensor{{static_cast<std::uint32_t>(values.size())}, std::vector<float>(values.begin(), values.end())});
}

std::vector<double> TensorBundle::get_vector(const std::string& name, std::size_t expected) const {
    const Tensor& t = get(name);
    if (t.shape.size() != 1 || t.shape[0] != expected) throw TensorFormatError("tensor '" + name + "' has unexpected shape");
    return {t.values.begin(), t.values.end()};
}

void TensorBundle::put_matrix(const std::string& name, int rows, int cols, const std::vector<double>& values) {
    if (values.size() != static_cast<std::size_t>(rows) * cols) throw TensorFormatError("matrix '" + name + "': size mismatch");
    put(name, Tensor{{static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)},
                     std::vector<float>(values.begin(), values.end())});
}

std::vector<double> TensorBundle::get_matrix(const std::string& name, int rows, int cols) const {
    const Tensor& t = get(name);
    if (t.shape != std::vector<std::uint32_t>{static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)}) {
        throw TensorFormatError("tensor '" + name + "' has unexpected shape");
    }
    return {t.values.begin(), t.values.end()};
}

ConvWeights random_conv(int out_ch, int in_ch, int kh, int kw, std::uint64_t seed, double gain) {
    ConvWeights w(out_ch, in_ch, kh, kw);
    std::mt19937_64 rng(seed);
    const double bound = gain * std::sqrt(3.0 / (in_ch * kh * kw));
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0; };
    for (auto& v : w.weight) v = static_cast<float>(bound * uniform());
    for (auto& v : w.bias) v = static_cast<float>(0.01 * uniform());
    return w;
}

}  // namespace vinpaint
