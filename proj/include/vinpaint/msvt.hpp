#pragma once

// Mask-guided sparse window transformer block. Attention runs only in
// windows that touch the hole; the feed-forward path runs everywhere.

#include "vinpaint/kernels.hpp"
#include "vinpaint/tensor_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vinpaint {

struct MsvtConfig {
    int window_size = 8;
    int heads = 1;
    int ffn_expansion = 2;
    int depth = 1;

    void validate() const;
};

/// One block. Linear maps are row-major [out][in].
struct MsvtWeights {
    int channels = 0;
    int hidden = 0;
    std::vector<double> norm1_scale, norm1_shift;
    std::vector<double> wq, bq, wk, bk, wv, bv, wo, bo;
    std::vector<double> norm2_scale, norm2_shift;
    std::vector<double> w1, b1, w2, b2;

    static MsvtWeights zeros(int channels, int ffn_expansion);
    static MsvtWeights random(std::uint64_t seed, int channels, int ffn_expansion);
    static MsvtWeights from_bundle(const TensorBundle& bundle, const std::string& prefix, int channels,
                                   int ffn_expansion);
    void to_bundle(TensorBundle& bundle, const std::string& prefix) const;
    void validate(const MsvtConfig& cfg) const;
};

constexpr double kLayerNormEps = 1e-5;

/// Per-position layer normalization over channels.
FeatureMap layer_norm(const FeatureMap& x, const std::vector<double>& scale, const std::vector<double>& shift);
/// Per-position affine map y = W x + b with W [out][in].
FeatureMap linear(const FeatureMap& x, const std::vector<double>& weight, const std::vector<double>& bias, int out);

/// Applies the block to one frame. `mask` is at feature resolution.
FeatureMap msvt_block(const FeatureMap& features, const Mask& mask, const MsvtWeights& weights, const MsvtConfig& cfg);

/// Applies `cfg.depth` stacked blocks to every frame.
std::vector<FeatureMap> msvt_apply(const std::vector<FeatureMap>& features, const std::vector<Mask>& masks,
                                   const std::vector<MsvtWeights>& blocks, const MsvtConfig& cfg);

/// Query positions that fall inside windows selected by the mask.
std::size_t count_attended_tokens(const Mask& mask, const MsvtConfig& cfg);
std::size_t count_attended_tokens(const std::vector<Mask>& masks, const MsvtConfig& cfg);

}  // namespace vinpaint
