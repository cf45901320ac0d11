#include "vinpaint/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace vinpaint {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image8 read_png(const std::filesystem::path& path, int channels) {
    if (channels != 1 && channels != 3) throw std::invalid_argument("read_png: channels must be 1 or 3");
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw ImageIoError("cannot open " + path.string());

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_stdio(&image, file.get())) {
        throw ImageIoError("cannot decode " + path.string() + ": " + image.message);
    }
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image8 out;
    out.height = static_cast<int>(image.height);
    out.width = static_cast<int>(image.width);
    out.channels = channels;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ImageIoError("cannot decode " + path.string() + ": " + image.message);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Image8& img) {
    if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("write_png: channels must be 1 or 3");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
        throw ImageIoError("cannot write " + path.string() + ": " + image.message);
    }
}

Frame to_frame(const Image8& image) {
    Frame f(image.height, image.width, image.channels);
    auto d = f.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = image.pixels[i] / 255.0;
    return f;
}

Image8 to_image8(const Frame& frame) {
    Image8 out{frame.height(), frame.width(), frame.channels(), {}};
    out.pixels.reserve(frame.data().size());
    for (double v : frame.data()) {
        out.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
    return out;
}

Mask to_mask(const Image8& gray, std::uint8_t threshold) {
    if (gray.channels != 1) throw std::invalid_argument("to_mask: expected a single-channel image");
    Mask m(gray.height, gray.width);
    auto bits = m.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = gray.pixels[i] >= threshold ? 1 : 0;
    return m;
}

Image8 mask_to_image8(const Mask& mask) {
    Image8 out{mask.height(), mask.width(), 1, {}};
    out.pixels.reserve(mask.pixels());
    for (auto b : mask.bits()) out.pixels.push_back(b ? 255 : 0);
    return out;
}

}  // namespace vinpaint
