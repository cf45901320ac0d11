#pragma once

// Resolution changes around the inpainting core: scale down, pad to the
// 8-pixel feature grid and dilate masks on the way in; crop, scale back and
// composite into the untouched original on the way out.

#include "vinpaint/config.hpp"
#include "vinpaint/scene.hpp"

#include <vector>

namespace vinpaint {

struct PreprocessRecord {
    int original_height = 0;
    int original_width = 0;
    int scaled_height = 0;
    int scaled_width = 0;
    int padded_height = 0;  // scaled, rounded up to a multiple of 8
    int padded_width = 0;

    friend bool operator==(const PreprocessRecord&, const PreprocessRecord&) = default;
};

/// Throws std::invalid_argument when the scaled dims fall below 16.
PreprocessRecord make_preprocess_record(int height, int width, const SceneConfig& cfg);

/// Bilinear resize with pixel-centre alignment; an identity when dims match.
Frame resize_bilinear(const Frame& src, int height, int width);
Mask resize_nearest(const Mask& src, int height, int width);
Mask dilate_square(const Mask& mask, int radius);
Frame pad_replicate(const Frame& src, int height, int width);
Mask pad_replicate(const Mask& src, int height, int width);
Frame crop(const Frame& src, int height, int width);

SceneFrame preprocess_frame(const SceneFrame& input, const PreprocessRecord& record, const SceneConfig& cfg);
std::vector<SceneFrame> preprocess(const std::vector<SceneFrame>& seq, const SceneConfig& cfg,
                                   PreprocessRecord& record);

/// Back to the original geometry; outside `original_mask` the result is the
/// original frame, bit for bit.
Frame postprocess_frame(const Frame& inpainted, const Frame& original, const Mask& original_mask,
                        const PreprocessRecord& record);
std::vector<Frame> postprocess(const std::vector<Frame>& inpainted, const std::vector<SceneFrame>& original,
                               const PreprocessRecord& record);

}  // namespace vinpaint
