#include "vinpaint/feature_map.hpp"

#include <algorithm>
#include <cmath>

namespace vinpaint {

FeatureMap::FeatureMap(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    if (height < 1 || width < 1 || channels < 1) {
        throw ShapeError("FeatureMap dims must be positive");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 1 || width < 1 || channels < 1) {
        throw ShapeError("FeatureMap dims must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw ShapeError("FeatureMap payload size does not match dims");
    }
}

bool FeatureMap::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mask::Mask(int height, int width, std::uint8_t fill) : height_(height), width_(width) {
    if (height < 1 || width < 1) throw ShapeError("Mask dims must be positive");
    bits_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

Mask Mask::inverted() const {
    Mask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
}

FlowField::FlowField(int height, int width, double u, double v) : uv_(height, width, 2) {
    auto d = uv_.data();
    for (std::size_t i = 0; i < d.size(); i += 2) {
        d[i] = u;
        d[i + 1] = v;
    }
}

FlowField::FlowField(FeatureMap uv) : uv_(std::move(uv)) {
    if (uv_.channels() != 2) throw ShapeError("FlowField needs exactly two channels");
}

std::string shape_string(const FeatureMap& m) {
    return std::to_string(m.height()) + "x" + std::to_string(m.width()) + "x" + std::to_string(m.channels());
}

}  // namespace vinpaint
