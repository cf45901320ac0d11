#include "vinpaint/preprocess.hpp"

#include "vinpaint/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vinpaint {

namespace {

int round_up8(int v) { return (v + 7) / 8 * 8; }

}  // namespace

PreprocessRecord make_preprocess_record(int height, int width, const SceneConfig& cfg) {
    cfg.validate();
    PreprocessRecord r;
    r.original_height = height;
    r.original_width = width;
    r.scaled_height = static_cast<int>(std::lround(height * cfg.scale_factor));
    r.scaled_width = static_cast<int>(std::lround(width * cfg.scale_factor));
    if (r.scaled_height < 16 || r.scaled_width < 16) {
        throw std::invalid_argument("processing resolution " + std::to_string(r.scaled_width) + "x" +
                                    std::to_string(r.scaled_height) + " is below the 16 pixel minimum");
    }
    r.padded_height = round_up8(r.scaled_height);
    r.padded_width = round_up8(r.scaled_width);
    return r;
}

Frame resize_bilinear(const Frame& src, int height, int width) {
    if (height == src.height() && width == src.width()) return src;
    Frame out(height, width, src.channels());
    const double sy = static_cast<double>(src.height()) / height;
    const double sx = static_cast<double>(src.width()) / width;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) bilinear_sample(src, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5, out.pixel(y, x));
    }
    return out;
}

Mask resize_nearest(const Mask& src, int height, int width) {
    if (height == src.height() && width == src.width()) return src;
    Mask out(height, width);
    const double sy = static_cast<double>(src.height()) / height;
    const double sx = static_cast<double>(src.width()) / width;
    for (int y = 0; y < height; ++y) {
        const int yy = std::min(static_cast<int>(std::floor((y + 0.5) * sy)), src.height() - 1);
        for (int x = 0; x < width; ++x) {
            const int xx = std::min(static_cast<int>(std::floor((x + 0.5) * sx)), src.width() - 1);
            out.set(y, x, src.at(yy, xx));
        }
    }
    return out;
}

Mask dilate_square(const Mask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("dilation radius must be >= 0");
    if (radius == 0) return mask;
    const int h = mask.height();
    const int w = mask.width();
    Mask rows(h, w);
    for (int y = 0; y < h; ++y) {
        int last = -1000000;  // most recent set column seen so far
        std::vector<int> next(w + 1, 1000000);
        for (int x = w - 1; x >= 0; --x) next[x] = mask.at(y, x) ? x : next[x + 1];
        for (int x = 0; x < w; ++x) {
            if (mask.at(y, x)) last = x;
            rows.set(y, x, x - last <= radius || next[x] - x <= radius);
        }
    }
    Mask out(h, w);
    for (int x = 0; x < w; ++x) {
        int last = -1000000;
        std::vector<int> next(h + 1, 1000000);
        for (int y = h - 1; y >= 0; --y) next[y] = rows.at(y, x) ? y : next[y + 1];
        for (int y = 0; y < h; ++y) {
            if (rows.at(y, x)) last = y;
            out.set(y, x, y - last <= radius || next[y] - y <= radius);
        }
    }
    return out;
}

Frame pad_replicate(const Frame& src, int height, int width) {
    if (height < src.height() || width < src.width()) throw ShapeError("pad_replicate: target smaller than source");
    Frame out(height, width, src.channels());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const auto p = src.pixel(std::min(y, src.height() - 1), std::min(x, src.width() - 1));
            std::copy(p.begin(), p.end(), out.pixel(y, x).begin());
        }
    }
    return out;
}

Mask pad_replicate(const Mask& src, int height, int width) {
    if (height < src.height() || width < src.width()) throw ShapeError("pad_replicate: target smaller than source");
    Mask out(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out.set(y, x, src.at(std::min(y, src.height() - 1), std::min(x, src.width() - 1)));
    }
    return out;
}

Frame crop(const Frame& src, int height, int width) {
    if (height > src.height() || width > src.width()) throw ShapeError("crop: target larger than source");
    Frame out(height, width, src.channels());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const auto p = src.pixel(y, x);
            std::copy(p.begin(), p.end(), out.pixel(y, x).begin());
        }
    }
    return out;
}

SceneFrame preprocess_frame(const SceneFrame& input, const PreprocessRecord& r, const SceneConfig& cfg) {
    if (input.frame.height() != r.original_height || input.frame.width() != r.original_width ||
        !input.mask.same_dims(r.original_height, r.original_width)) {
        throw ShapeError("preprocess: frame dims differ from the scene record");
    }
    Frame scaled = resize_bilinear(input.frame, r.scaled_height, r.scaled_width);
    Mask mask = dilate_square(resize_nearest(input.mask, r.scaled_height, r.scaled_width), cfg.dilation_radius);
    return SceneFrame{pad_replicate(scaled, r.padded_height, r.padded_width),
                      pad_replicate(mask, r.padded_height, r.padded_width)};
}

std::vector<SceneFrame> preprocess(const std::vector<SceneFrame>& seq, const SceneConfig& cfg, PreprocessRecord& record) {
    if (seq.empty()) throw std::invalid_argument("preprocess: empty sequence");
    record = make_preprocess_record(seq.front().frame.height(), seq.front().frame.width(), cfg);
    std::vector<SceneFrame> out;
    out.reserve(seq.size());
    for (const auto& f : seq) out.push_back(preprocess_frame(f, record, cfg));
    return out;
}

Frame postprocess_frame(const Frame& inpainted, const Frame& original, const Mask& original_mask,
                        const PreprocessRecord& r) {
    if (inpainted.height() != r.padded_height || inpainted.width() != r.padded_width) {
        throw ShapeError("postprocess: inpainted frame does not match the recorded processing dims");
    }
    if (original.height() != r.original_height || original.width() != r.original_width ||
        !original_mask.same_dims(r.original_height, r.original_width) || original.channels() != inpainted.channels()) {
        throw ShapeError("postprocess: original frame does not match the recorded input dims");
    }
    const Frame restored = resize_bilinear(crop(inpainted, r.scaled_height, r.scaled_width), r.original_height,
                                           r.original_width);
    Frame out = original;
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            if (!original_mask.at(y, x)) continue;
            const auto p = restored.pixel(y, x);
            std::copy(p.begin(), p.end(), out.pixel(y, x).begin());
        }
    }
    return out;
}

std::vector<Frame> postprocess(const std::vector<Frame>& inpainted, const std::vector<SceneFrame>& original,
                               const PreprocessRecord& record) {
    if (inpainted.size() != original.size()) throw ShapeError("postprocess: sequence lengths differ");
    std::vector<Frame> out;
    out.reserve(inpainted.size());
    for (std::size_t i = 0; i < inpainted.size(); ++i) {
        out.push_back(postprocess_frame(inpainted[i], original[i].frame, original[i].mask, record));
    }
    return out;
}

}  // namespace vinpaint
