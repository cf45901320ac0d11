#pragma once

// Test-only generators and brute-force reference implementations. Nothing
// here calls into the library's numeric kernels.

#include "vinpaint/feature_map.hpp"
#include "vinpaint/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using vinpaint::ConvWeights;
using vinpaint::FeatureMap;
using vinpaint::FlowField;
using vinpaint::Mask;
using vinpaint::OffsetField;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    bool chance(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

inline FeatureMap random_map(Rng& rng, int h, int w, int c, double lo = -1.0, double hi = 1.0) {
    FeatureMap m(h, w, c);
    for (auto& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

inline FlowField random_flow(Rng& rng, int h, int w, double mag) {
    return FlowField(random_map(rng, h, w, 2, -mag, mag));
}

inline ConvWeights random_weights(Rng& rng, int out, int in, int kh, int kw) {
    ConvWeights c(out, in, kh, kw);
    for (auto& v : c.weight) v = rng.uniform(-1.0, 1.0);
    for (auto& v : c.bias) v = rng.uniform(-1.0, 1.0);
    return c;
}

inline Mask random_mask(Rng& rng, int h, int w, double p) {
    Mask m(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) m.set(y, x, rng.chance(p));
    }
    return m;
}

inline Mask rect_mask(int h, int w, int y0, int x0, int rh, int rw) {
    Mask m(h, w);
    for (int y = std::max(y0, 0); y < std::min(y0 + rh, h); ++y) {
        for (int x = std::max(x0, 0); x < std::min(x0 + rw, w); ++x) m.set(y, x, true);
    }
    return m;
}

inline double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

/// Smooth band-limited RGB texture defined on continuous coordinates, so a
/// translated frame can be produced exactly by offsetting the sample grid.
class Texture {
public:
    explicit Texture(std::uint64_t seed) {
        Rng rng(seed);
        for (auto& w : waves_) {
            const double angle = rng.uniform(0.0, 3.141592653589793);
            const double freq = rng.uniform(0.2, 0.7);
            w.fy = freq * std::sin(angle);
            w.fx = freq * std::cos(angle);
            w.phase = rng.uniform(0.0, 6.283185307179586);
            for (auto& a : w.amp) a = rng.uniform(0.03, 0.09);
        }
    }

    double value(double y, double x, int c) const {
        double v = 0.5;
        for (const auto& w : waves_) v += w.amp[c] * std::sin(w.fy * y + w.fx * x + w.phase);
        return std::clamp(v, 0.0, 1.0);
    }

    /// Frame whose pixel (y, x) shows texture point (y + dy, x + dx).
    FeatureMap frame(int h, int w, double dy, double dx) const {
        FeatureMap f(h, w, 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) f.at(y, x, c) = value(y + dy, x + dx, c);
            }
        }
        return f;
    }

private:
    struct Wave {
        double fy, fx, phase;
        double amp[3];
    };
    Wave waves_[6];
};

/// Bilinear sample with coordinates clamped into the grid.
inline double sample(const FeatureMap& m, double y, double x, int c) {
    y = std::clamp(y, 0.0, static_cast<double>(m.height() - 1));
    x = std::clamp(x, 0.0, static_cast<double>(m.width() - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, m.height() - 1);
    const int x1 = std::min(x0 + 1, m.width() - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    return (1 - fy) * ((1 - fx) * m.at(y0, x0, c) + fx * m.at(y0, x1, c)) +
           fy * ((1 - fx) * m.at(y1, x0, c) + fx * m.at(y1, x1, c));
}

inline FeatureMap warp(const FeatureMap& src, const FlowField& flow) {
    FeatureMap out(src.height(), src.width(), src.channels());
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            for (int c = 0; c < src.channels(); ++c) out.at(y, x, c) = sample(src, y + flow.v(y, x), x + flow.u(y, x), c);
        }
    }
    return out;
}

/// Direct cross-correlation with replicate padding; one output value at a time.
inline FeatureMap conv2d(const FeatureMap& src, const ConvWeights& w, int stride = 1) {
    const int oh = (src.height() + stride - 1) / stride;
    const int ow = (src.width() + stride - 1) / stride;
    FeatureMap out(oh, ow, w.out_channels);
    for (int o = 0; o < w.out_channels; ++o) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = w.bias[o];
                for (int i = 0; i < w.in_channels; ++i) {
                    for (int ky = 0; ky < w.kernel_h; ++ky) {
                        for (int kx = 0; kx < w.kernel_w; ++kx) {
                            const int sy = std::clamp(y * stride + ky - w.kernel_h / 2, 0, src.height() - 1);
                            const int sx = std::clamp(x * stride + kx - w.kernel_w / 2, 0, src.width() - 1);
                            acc += w.w(o, i, ky, kx) * src.at(sy, sx, i);
                        }
                    }
                }
                out.at(y, x, o) = acc;
            }
        }
    }
    return out;
}

/// Gather every modulated tap sample into a column, then multiply.
inline FeatureMap deformable_conv(const FeatureMap& src, const OffsetField& off, const ConvWeights& w) {
    const int taps = w.kernel_h * w.kernel_w;
    FeatureMap out(src.height(), src.width(), w.out_channels);
    std::vector<double> column(static_cast<std::size_t>(taps) * w.in_channels);
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            for (int k = 0; k < taps; ++k) {
                const int ky = k / w.kernel_w;
                const int kx = k % w.kernel_w;
                const double sy = y + ky - w.kernel_h / 2 + off.dy(y, x, k);
                const double sx = x + kx - w.kernel_w / 2 + off.dx(y, x, k);
                for (int i = 0; i < w.in_channels; ++i) {
                    column[static_cast<std::size_t>(i) * taps + k] = off.modulation(y, x, k) * sample(src, sy, sx, i);
                }
            }
            for (int o = 0; o < w.out_channels; ++o) {
                double acc = w.bias[o];
                for (int i = 0; i < w.in_channels; ++i) {
                    for (int k = 0; k < taps; ++k) {
                        acc += w.w(o, i, k / w.kernel_w, k % w.kernel_w) * column[static_cast<std::size_t>(i) * taps + k];
                    }
                }
                out.at(y, x, o) = acc;
            }
        }
    }
    return out;
}

/// Dense softmax attention inside each window, every window attended.
/// With `selected`, unselected windows return v.
inline FeatureMap window_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v, int ws, int heads,
                                   const Mask* selected_windows = nullptr) {
    const int h = q.height();
    const int w = q.width();
    const int c = q.channels();
    const int d = c / heads;
    FeatureMap out = v;
    for (int wy = 0; wy < h; wy += ws) {
        for (int wx = 0; wx < w; wx += ws) {
            if (selected_windows && !selected_windows->at(wy / ws, wx / ws)) continue;
            std::vector<std::pair<int, int>> tokens;
            for (int y = wy; y < std::min(wy + ws, h); ++y) {
                for (int x = wx; x < std::min(wx + ws, w); ++x) tokens.emplace_back(y, x);
            }
            const std::size_t n = tokens.size();
            for (int hd = 0; hd < heads; ++hd) {
                for (std::size_t i = 0; i < n; ++i) {
                    std::vector<double> score(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        double s = 0;
                        for (int e = hd * d; e < (hd + 1) * d; ++e) {
                            s += q.at(tokens[i].first, tokens[i].second, e) * k.at(tokens[j].first, tokens[j].second, e);
                        }
                        score[j] = s / std::sqrt(static_cast<double>(d));
                    }
                    const double top = *std::max_element(score.begin(), score.end());
                    double z = 0;
                    for (auto& s : score) z += (s = std::exp(s - top));
                    for (int e = hd * d; e < (hd + 1) * d; ++e) {
                        double acc = 0;
                        for (std::size_t j = 0; j < n; ++j) acc += score[j] / z * v.at(tokens[j].first, tokens[j].second, e);
                        out.at(tokens[i].first, tokens[i].second, e) = acc;
                    }
                }
            }
        }
    }
    return out;
}

/// Attended query positions by enumerating every pixel against every window.
inline std::size_t attended_positions(const Mask& m, int ws) {
    const int rows = (m.height() + ws - 1) / ws;
    const int cols = (m.width() + ws - 1) / ws;
    std::size_t total = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            bool hit = false;
            std::size_t size = 0;
            for (int y = r * ws; y < std::min((r + 1) * ws, m.height()); ++y) {
                for (int x = c * ws; x < std::min((c + 1) * ws, m.width()); ++x) {
                    hit = hit || m.at(y, x);
                    ++size;
                }
            }
            if (hit) total += size;
        }
    }
    return total;
}

}  // namespace oracle
