#pragma once

#include "vinpaint/feature_map.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace vinpaint {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit interleaved image as stored on disk.
struct Image8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
};

/// Decodes any PNG into 8-bit RGB (channels = 3) or 8-bit gray (channels = 1).
Image8 read_png(const std::filesystem::path& path, int channels);
void write_png(const std::filesystem::path& path, const Image8& image);

/// v / 255 per sample.
Frame to_frame(const Image8& image);
/// round(clamp(v, 0, 1) * 255) per sample.
Image8 to_image8(const Frame& frame);
/// Pixels >= threshold become hole pixels.
Mask to_mask(const Image8& gray, std::uint8_t threshold = 128);
Image8 mask_to_image8(const Mask& mask);

}  // namespace vinpaint
