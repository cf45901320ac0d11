#pragma once

// Numerical building blocks shared by the flow, propagation and transformer
// stages. Everything here is a pure function of its arguments.

#include "vinpaint/feature_map.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace vinpaint {

/// Bilinear interpolation with replicate (clamped) borders; writes C values.
void bilinear_sample(const FeatureMap& src, double y, double x, std::span<double> out);
std::vector<double> bilinear_sample(const FeatureMap& src, double y, double x);

/// out(p) = src(p + flow(p)).
FeatureMap warp(const FeatureMap& src, const FlowField& flow);

/// Convolution weights, layout [out][in][ky][kx]; odd kernel dims.
struct ConvWeights {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    ConvWeights() = default;
    ConvWeights(int out_ch, int in_ch, int kh, int kw);

    int taps() const { return kernel_h * kernel_w; }
    double& w(int o, int i, int ky, int kx) {
        return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
    }
    double w(int o, int i, int ky, int kx) const {
        return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
    }
    void validate() const;
};

/// Cross-correlation with replicate padding. Output dims are ceil(H/stride) x
/// ceil(W/stride); output (oy, ox) is centred on input (oy*stride, ox*stride).
FeatureMap conv2d(const FeatureMap& src, const ConvWeights& w, int stride = 1);

/// Per output position and kernel tap: a (dy, dx) sampling offset and a
/// modulation scalar in [0, 1]. Taps are ordered row-major over the kernel.
class OffsetField {
public:
    OffsetField() = default;
    /// Zero offsets, unit modulation.
    OffsetField(int height, int width, int taps);

    int height() const { return height_; }
    int width() const { return width_; }
    int taps() const { return taps_; }

    double dy(int y, int x, int k) const { return offsets_[slot(y, x, k) * 2]; }
    double dx(int y, int x, int k) const { return offsets_[slot(y, x, k) * 2 + 1]; }
    double modulation(int y, int x, int k) const { return modulation_[slot(y, x, k)]; }

    void set_offset(int y, int x, int k, double dy, double dx);
    /// Throws std::out_of_range unless m is in [0, 1].
    void set_modulation(int y, int x, int k, double m);
    /// Stores sigmoid(logit).
    void set_modulation_logit(int y, int x, int k, double logit);

private:
    std::size_t slot(int y, int x, int k) const {
        return (static_cast<std::size_t>(y) * width_ + x) * taps_ + k;
    }

    int height_ = 0;
    int width_ = 0;
    int taps_ = 0;
    std::vector<double> offsets_;
    std::vector<double> modulation_;
};

/// Builds an offset field from a 3 * taps channel prediction laid out as
/// [dy_0, dx_0, ..., dy_{taps-1}, dx_{taps-1}, logit_0, ..., logit_{taps-1}];
/// modulation is sigmoid(logit).
OffsetField offsets_from_prediction(const FeatureMap& raw, int taps);

/// Modulated deformable convolution (single deformable group, stride 1).
FeatureMap deformable_conv(const FeatureMap& src, const OffsetField& offsets, const ConvWeights& w);

struct WindowGrid {
    int window_size = 0;
    int height = 0;
    int width = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> selected;  // rows * cols

    bool is_selected(int row, int col) const { return selected[static_cast<std::size_t>(row) * cols + col] != 0; }
    std::size_t selected_count() const;
    /// Positions covered by selected windows (edge windows may be partial).
    std::size_t selected_positions() const;
};

WindowGrid make_window_grid(int height, int width, int window_size);

/// Windows containing at least one set mask pixel.
WindowGrid select_masked_windows(const Mask& mask, int window_size);

/// Scaled dot-product attention inside each selected window, with keys and
/// values drawn from the same window. Unselected windows pass v through.
FeatureMap sparse_window_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                                   const WindowGrid& grid, int heads = 1);

/// Softmax rows (one per query, row-major over the window) for one window
/// and head; used to check normalization.
std::vector<std::vector<double>> window_attention_probabilities(const FeatureMap& q, const FeatureMap& k,
                                                                const WindowGrid& grid, int row, int col,
                                                                int head, int heads);

// Small tensor helpers used by the learned graphs.
FeatureMap concat_channels(std::span<const FeatureMap* const> parts);
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);
void leaky_relu_inplace(FeatureMap& m, double slope = 0.2);
FeatureMap add(const FeatureMap& a, const FeatureMap& b);
FeatureMap upsample_nearest(const FeatureMap& src, int height, int width);
/// Max-pool a mask by an integer factor (a coarse cell is set if any covered pixel is).
Mask downsample_mask(const Mask& mask, int factor);

}  // namespace vinpaint
