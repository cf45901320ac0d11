#pragma once

// Dual-domain propagation: pixels are carried along completed flows into
// holes (image domain), and encoder features are aligned with flow-guided
// deformable convolution and fused (feature domain).

#include "vinpaint/flow.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vinpaint {

/// Reliable area for warping `pair`'s target frame onto its source frame:
/// forward-backward consistent, endpoint inside the frame, and the endpoint's
/// nearest pixel is set in `known_src`.
Mask compute_reliable_area(const FlowPair& pair, const Mask& known_src, double eps = 0.5);

struct PropagationState {
    std::vector<Frame> frames;
    std::vector<Mask> masks;  // remaining holes, one per frame
    std::vector<FeatureMap> features;

    void validate() const;
};

/// One backward sweep followed by one forward sweep of flow-warped
/// compositing. Only hole pixels are written; filled pixels leave the hole.
PropagationState propagate_image(const PropagationState& state, const std::vector<FlowPair>& flows, double eps = 0.5);

/// Average-pool a flow by `factor` and divide magnitudes by the same factor.
FlowField downsample_flow(const FlowField& flow, int factor);

/// Weights of the feature-domain propagation at 1/8 resolution.
struct FeaturePropagationWeights {
    int channels = 8;
    ConvWeights residual1;  // concat(warped, current, flow, mask) -> C
    ConvWeights residual2;  // C -> 3 * taps
    ConvWeights align;      // deformable C -> C
    ConvWeights fuse1;      // 2C -> C
    ConvWeights fuse2;      // C -> C

    static FeaturePropagationWeights zeros(int channels = 8, int kernel = 3);
    static FeaturePropagationWeights random(std::uint64_t seed, int channels = 8, int kernel = 3);
    static FeaturePropagationWeights from_bundle(const TensorBundle& bundle, int channels = 8,
                                                 const std::string& prefix = "prop");
    void to_bundle(TensorBundle& bundle, const std::string& prefix = "prop") const;
};

/// Deformable alignment whose per-tap offsets are the flow plus `residual`'s
/// offsets; modulation comes from `residual`.
FeatureMap align_features(const FeatureMap& propagated, const FlowField& flow, const OffsetField& residual,
                          const ConvWeights& kernel);

/// Bidirectional feature propagation. `flows` and `masks` are at frame
/// resolution; features must be at 1/8 of it (rounded up).
PropagationState propagate_features(const PropagationState& state, const std::vector<FlowPair>& flows,
                                    const std::vector<Mask>& masks, const FeaturePropagationWeights& weights);

/// Stand-in image encoder/decoder: 3 -> 8 -> 8 -> 8 channels with stride 2
/// at each conv (net 1/8), decoded back through nearest upsampling.
struct ImageCodecWeights {
    static constexpr int kChannels = 8;
    ConvWeights enc1, enc2, enc3;
    ConvWeights dec1, dec2, dec3;

    static ImageCodecWeights zeros();
    static ImageCodecWeights random(std::uint64_t seed);
    static ImageCodecWeights from_bundle(const TensorBundle& bundle, const std::string& prefix = "codec");
    void to_bundle(TensorBundle& bundle, const std::string& prefix = "codec") const;
};

/// Encodes the frame with hole pixels zeroed.
FeatureMap encode_image(const Frame& frame, const Mask& hole, const ImageCodecWeights& weights);
/// Decodes to an RGB frame of the given size, values squashed into [0, 1].
Frame decode_features(const FeatureMap& features, int height, int width, const ImageCodecWeights& weights);

}  // namespace vinpaint
