#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vinpaint {

/// Raised when two operands disagree on shape (dims, channels, lengths).
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense H x W x C grid of reals, channel-interleaved (HWC, row-major).
///
/// Used for RGB frames (C = 3, values in [0, 1]), encoder features and any
/// intermediate activation. Values are immutable from the outside unless the
/// caller owns the map.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int height, int width, int channels, double fill = 0.0);
    FeatureMap(int height, int width, int channels, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const { return data_.empty(); }

    double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    std::span<double> pixel(int y, int x) { return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)}; }
    std::span<const double> pixel(int y, int x) const {
        return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const FeatureMap& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }
    bool all_finite() const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

using Frame = FeatureMap;

/// Binary H x W map; 1 marks an occluded (hole) pixel unless documented otherwise.
class Mask {
public:
    Mask() = default;
    Mask(int height, int width, std::uint8_t fill = 0);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixels() const { return bits_.size(); }

    bool at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int y, int x, bool on) { bits_[static_cast<std::size_t>(y) * width_ + x] = on ? 1 : 0; }

    std::span<const std::uint8_t> bits() const { return bits_; }
    std::span<std::uint8_t> bits() { return bits_; }

    std::size_t count() const;
    bool none() const { return count() == 0; }
    bool all() const { return count() == bits_.size(); }
    Mask inverted() const;

    bool same_dims(int height, int width) const { return height_ == height && width_ == width; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Dense displacement field in pixels. Backward-warp convention: the value
/// at p points to the source location p + (u, v), u horizontal, v vertical.
class FlowField {
public:
    FlowField() = default;
    FlowField(int height, int width, double u = 0.0, double v = 0.0);
    explicit FlowField(FeatureMap uv);

    int height() const { return uv_.height(); }
    int width() const { return uv_.width(); }

    double& u(int y, int x) { return uv_.at(y, x, 0); }
    double u(int y, int x) const { return uv_.at(y, x, 0); }
    double& v(int y, int x) { return uv_.at(y, x, 1); }
    double v(int y, int x) const { return uv_.at(y, x, 1); }

    /// Two-channel view, channel 0 = u, channel 1 = v.
    const FeatureMap& as_map() const { return uv_; }
    FeatureMap& as_map() { return uv_; }

    friend bool operator==(const FlowField&, const FlowField&) = default;

private:
    FeatureMap uv_;
};

std::string shape_string(const FeatureMap& m);

}  // namespace vinpaint
