#pragma once

#include "vinpaint/kernels.hpp"
#include "vinpaint/tensor_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vinpaint {

/// Flows between frames t and t+1: forward lives on frame t's grid and
/// points into t+1, backward lives on t+1's grid and points into t.
struct FlowPair {
    FlowField forward;
    FlowField backward;

    friend bool operator==(const FlowPair&, const FlowPair&) = default;
};

struct LucasKanadeOptions {
    int window_radius = 4;      // (2r+1)^2 integration window
    int iterations = 8;         // Gauss-Newton steps per pyramid level
    double min_eigenvalue = 1e-6;  // structure-tensor floor (per window pixel) below which a pixel is textureless
};

/// Number of pyramid levels used for an H x W frame: floor(log2(min(H, W) / 16)), at least 1.
int pyramid_levels(int height, int width);

/// Dense coarse-to-fine Lucas-Kanade flow such that a(p) ~ b(p + flow(p)).
/// Window samples whose gradient stencil touches `a_hole`, or whose
/// displaced position touches `b_hole`, carry no evidence and are skipped.
FlowField estimate_flow(const Frame& a, const Frame& b, const LucasKanadeOptions& options = {},
                        const Mask* a_hole = nullptr, const Mask* b_hole = nullptr);
FlowPair estimate_flow_pair(const Frame& a, const Frame& b, const LucasKanadeOptions& options = {},
                            const Mask* a_hole = nullptr, const Mask* b_hole = nullptr);

/// Laplace completion of both flow channels inside `mask`; pixels outside
/// the mask keep their exact input values.
FlowField complete_flow_harmonic(const FlowField& flow, const Mask& mask);

/// 1 where the forward-backward round trip closes to within eps pixels.
Mask flow_consistency(const FlowPair& pair, double eps = 0.5);

/// Parameters of the recurrent flow-completion graph.
///
/// Encoder: 2 -> 32 -> 64 -> 64 channels, each conv stride 2 (net 1/8).
/// Offset predictor: concat(current, propagated) 128 -> 64 -> 3 * 9, giving
/// per-tap (dy, dx) and a modulation logit for a 3x3 deformable kernel.
/// Fusion: current + conv(lrelu(conv(concat(aligned, current)))).
/// Decoder: nearest x2 upsampling between 64 -> 64 -> 32 -> 2 convs.
struct FlowCompletionWeights {
    static constexpr int kInput = 2;
    static constexpr int kHidden = 32;
    static constexpr int kFeatures = 64;
    static constexpr int kTaps = 9;

    ConvWeights enc1, enc2, enc3;
    ConvWeights offset1, offset2;
    ConvWeights align;
    ConvWeights fuse1, fuse2;
    ConvWeights dec1, dec2, dec3;

    static FlowCompletionWeights zeros();
    static FlowCompletionWeights random(std::uint64_t seed);
    static FlowCompletionWeights from_bundle(const TensorBundle& bundle, const std::string& prefix = "flow");
    void to_bundle(TensorBundle& bundle, const std::string& prefix = "flow") const;
};

/// Recurrent completion over a clip. `flows[i]` joins frames i and i+1, so
/// `masks` holds one hole mask per frame (flows.size() + 1 entries). Forward
/// flows are completed inside masks[i], backward flows inside masks[i+1].
std::vector<FlowPair> complete_flow_recurrent(const std::vector<FlowPair>& flows, const std::vector<Mask>& masks,
                                              const FlowCompletionWeights& weights);

}  // namespace vinpaint
