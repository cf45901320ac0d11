#include "vinpaint/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vinpaint {

namespace {

int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Softmax attention for one window and one head; writes into out.
void attend_window(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v, int y0, int x0, int y1,
                   int x1, int c0, int head_dim, FeatureMap& out, std::vector<std::vector<double>>* probs) {
    const int ww = x1 - x0;
    const int tokens = (y1 - y0) * ww;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<double> logits(tokens);
    for (int qi = 0; qi < tokens; ++qi) {
        const auto qp = q.pixel(y0 + qi / ww, x0 + qi % ww);
        double peak = -INFINITY;
        for (int ki = 0; ki < tokens; ++ki) {
            const auto kp = k.pixel(y0 + ki / ww, x0 + ki % ww);
            double dot = 0.0;
            for (int c = 0; c < head_dim; ++c) dot += qp[c0 + c] * kp[c0 + c];
            logits[ki] = dot * scale;
            peak = std::max(peak, logits[ki]);
        }
        double total = 0.0;
        for (auto& l : logits) {
            l = std::exp(l - peak);
            total += l;
        }
        for (auto& l : logits) l /= total;

        auto op = out.pixel(y0 + qi / ww, x0 + qi % ww);
        for (int c = 0; c < head_dim; ++c) op[c0 + c] = 0.0;
        for (int ki = 0; ki < tokens; ++ki) {
            const auto vp = v.pixel(y0 + ki / ww, x0 + ki % ww);
            for (int c = 0; c < head_dim; ++c) op[c0 + c] += logits[ki] * vp[c0 + c];
        }
        if (probs) probs->push_back(logits);
    }
}

void check_attention_inputs(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v, const WindowGrid& grid,
                            int heads) {
    if (!q.same_shape(k) || !q.same_shape(v)) throw ShapeError("attention: q, k, v shapes differ");
    if (grid.height != q.height() || grid.width != q.width()) throw ShapeError("attention: grid does not match features");
    if (heads < 1 || q.channels() % heads != 0) throw ShapeError("attention: head count must divide channels");
}

}  // namespace

void bilinear_sample(const FeatureMap& src, double y, double x, std::span<double> out) {
    const int h = src.height();
    const int w = src.width();
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    const auto p00 = src.pixel(y0, x0);
    const auto p01 = src.pixel(y0, x1);
    const auto p10 = src.pixel(y1, x0);
    const auto p11 = src.pixel(y1, x1);
    for (int c = 0; c < src.channels(); ++c) {
        const double top = p00[c] * (1.0 - fx) + p01[c] * fx;
        const double bottom = p10[c] * (1.0 - fx) + p11[c] * fx;
        out[c] = top * (1.0 - fy) + bottom * fy;
    }
}

std::vector<double> bilinear_sample(const FeatureMap& src, double y, double x) {
    std::vector<double> out(src.channels());
    bilinear_sample(src, y, x, out);
    return out;
}

FeatureMap warp(const FeatureMap& src, const FlowField& flow) {
    if (flow.height() != src.height() || flow.width() != src.width()) {
        throw ShapeError("warp: flow " + shape_string(flow.as_map()) + " does not match source " + shape_string(src));
    }
    FeatureMap out(src.height(), src.width(), src.channels());
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            bilinear_sample(src, y + flow.v(y, x), x + flow.u(y, x), out.pixel(y, x));
        }
    }
    return out;
}

ConvWeights::ConvWeights(int out_ch, int in_ch, int kh, int kw)
    : out_channels(out_ch), in_channels(in_ch), kernel_h(kh), kernel_w(kw) {
    if (out_ch < 1 || in_ch < 1 || kh < 1 || kw < 1) throw ShapeError("ConvWeights: dims must be positive");
    weight.assign(static_cast<std::size_t>(out_ch) * in_ch * kh * kw, 0.0);
    bias.assign(out_ch, 0.0);
}

void ConvWeights::validate() const {
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0) throw ShapeError("ConvWeights: kernel dims must be odd");
    if (weight.size() != static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w) {
        throw ShapeError("ConvWeights: weight payload size mismatch");
    }
    if (bias.size() != static_cast<std::size_t>(out_channels)) throw ShapeError("ConvWeights: bias size mismatch");
}

namespace {

// Weights reordered to [ky][kx][in][out] so the output-channel loop is contiguous.
std::vector<double> tap_major(const ConvWeights& w) {
    std::vector<double> t(w.weight.size());
    std::size_t n = 0;
    for (int ky = 0; ky < w.kernel_h; ++ky) {
        for (int kx = 0; kx < w.kernel_w; ++kx) {
            for (int i = 0; i < w.in_channels; ++i) {
                for (int o = 0; o < w.out_channels; ++o) t[n++] = w.w(o, i, ky, kx);
            }
        }
    }
    return t;
}

}  // namespace

FeatureMap conv2d(const FeatureMap& src, const ConvWeights& w, int stride) {
    w.validate();
    if (src.channels() != w.in_channels) {
        throw ShapeError("conv2d: input has " + std::to_string(src.channels()) + " channels, weights expect " +
                         std::to_string(w.in_channels));
    }
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    const int oh = (src.height() + stride - 1) / stride;
    const int ow = (src.width() + stride - 1) / stride;
    const int ry = w.kernel_h / 2;
    const int rx = w.kernel_w / 2;
    const std::vector<double> wt = tap_major(w);
    const int oc = w.out_channels;
    FeatureMap out(oh, ow, w.out_channels);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            auto acc = out.pixel(oy, ox);
            std::copy(w.bias.begin(), w.bias.end(), acc.begin());
            for (int ky = 0; ky < w.kernel_h; ++ky) {
                const int sy = clamp_index(oy * stride + ky - ry, src.height());
                for (int kx = 0; kx < w.kernel_w; ++kx) {
                    const int sx = clamp_index(ox * stride + kx - rx, src.width());
                    const auto in = src.pixel(sy, sx);
                    const double* wk = wt.data() + static_cast<std::size_t>(ky * w.kernel_w + kx) * w.in_channels * oc;
                    for (int i = 0; i < w.in_channels; ++i, wk += oc) {
                        const double value = in[i];
                        for (int o = 0; o < oc; ++o) acc[o] += wk[o] * value;
                    }
                }
            }
        }
    }
    return out;
}

OffsetField::OffsetField(int height, int width, int taps) : height_(height), width_(width), taps_(taps) {
    if (height < 1 || width < 1 || taps < 1) throw ShapeError("OffsetField dims must be positive");
    const auto n = static_cast<std::size_t>(height) * width * taps;
    offsets_.assign(n * 2, 0.0);
    modulation_.assign(n, 1.0);
}

void OffsetField::set_offset(int y, int x, int k, double dy, double dx) {
    offsets_[slot(y, x, k) * 2] = dy;
    offsets_[slot(y, x, k) * 2 + 1] = dx;
}

void OffsetField::set_modulation(int y, int x, int k, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::out_of_range("OffsetField: modulation must lie in [0, 1]");
    modulation_[slot(y, x, k)] = m;
}

void OffsetField::set_modulation_logit(int y, int x, int k, double logit) {
    modulation_[slot(y, x, k)] = 1.0 / (1.0 + std::exp(-logit));
}

OffsetField offsets_from_prediction(const FeatureMap& raw, int taps) {
    if (raw.channels() != 3 * taps) throw ShapeError("offset prediction needs 3 * taps channels");
    OffsetField out(raw.height(), raw.width(), taps);
    for (int y = 0; y < raw.height(); ++y) {
        for (int x = 0; x < raw.width(); ++x) {
            const auto p = raw.pixel(y, x);
            for (int k = 0; k < taps; ++k) {
                out.set_offset(y, x, k, p[2 * k], p[2 * k + 1]);
                out.set_modulation_logit(y, x, k, p[2 * taps + k]);
            }
        }
    }
    return out;
}

FeatureMap deformable_conv(const FeatureMap& src, const OffsetField& offsets, const ConvWeights& w) {
    w.validate();
    if (src.channels() != w.in_channels) throw ShapeError("deformable_conv: channel mismatch");
    if (offsets.taps() != w.taps()) {
        throw ShapeError("deformable_conv: offsets carry " + std::to_string(offsets.taps()) + " taps, kernel has " +
                         std::to_string(w.taps()));
    }
    if (offsets.height() != src.height() || offsets.width() != src.width()) {
        throw ShapeError("deformable_conv: offset field dims differ from input");
    }
    const int ry = w.kernel_h / 2;
    const int rx = w.kernel_w / 2;
    const std::vector<double> wt = tap_major(w);
    const int oc = w.out_channels;
    FeatureMap out(src.height(), src.width(), w.out_channels);
    std::vector<double> sample(src.channels());
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            auto acc = out.pixel(y, x);
            std::copy(w.bias.begin(), w.bias.end(), acc.begin());
            for (int ky = 0; ky < w.kernel_h; ++ky) {
                for (int kx = 0; kx < w.kernel_w; ++kx) {
                    const int k = ky * w.kernel_w + kx;
                    bilinear_sample(src, y + (ky - ry) + offsets.dy(y, x, k), x + (kx - rx) + offsets.dx(y, x, k),
                                    sample);
                    const double m = offsets.modulation(y, x, k);
                    const double* wk = wt.data() + static_cast<std::size_t>(k) * w.in_channels * oc;
                    for (int i = 0; i < w.in_channels; ++i, wk += oc) {
                        const double value = m * sample[i];
                        for (int o = 0; o < oc; ++o) acc[o] += wk[o] * value;
                    }
                }
            }
        }
    }
    return out;
}

std::size_t WindowGrid::selected_count() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), std::uint8_t{1}));
}

std::size_t WindowGrid::selected_positions() const {
    std::size_t total = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!is_selected(r, c)) continue;
            const int h = std::min(window_size, height - r * window_size);
            const int w = std::min(window_size, width - c * window_size);
            total += static_cast<std::size_t>(h) * w;
        }
    }
    return total;
}

WindowGrid make_window_grid(int height, int width, int window_size) {
    if (window_size < 1) throw std::invalid_argument("window size must be >= 1");
    WindowGrid g;
    g.window_size = window_size;
    g.height = height;
    g.width = width;
    g.rows = (height + window_size - 1) / window_size;
    g.cols = (width + window_size - 1) / window_size;
    g.selected.assign(static_cast<std::size_t>(g.rows) * g.cols, 0);
    return g;
}

WindowGrid select_masked_windows(const Mask& mask, int window_size) {
    WindowGrid g = make_window_grid(mask.height(), mask.width(), window_size);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(y, x)) g.selected[static_cast<std::size_t>(y / window_size) * g.cols + x / window_size] = 1;
        }
    }
    return g;
}

FeatureMap sparse_window_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                                   const WindowGrid& grid, int heads) {
    check_attention_inputs(q, k, v, grid, heads);
    FeatureMap out = v;
    const int head_dim = q.channels() / heads;
    const int ws = grid.window_size;
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            if (!grid.is_selected(r, c)) continue;
            const int y0 = r * ws;
            const int x0 = c * ws;
            const int y1 = std::min(y0 + ws, q.height());
            const int x1 = std::min(x0 + ws, q.width());
            for (int h = 0; h < heads; ++h) attend_window(q, k, v, y0, x0, y1, x1, h * head_dim, head_dim, out, nullptr);
        }
    }
    return out;
}

std::vector<std::vector<double>> window_attention_probabilities(const FeatureMap& q, const FeatureMap& k,
                                                                const WindowGrid& grid, int row, int col,
                                                                int head, int heads) {
    check_attention_inputs(q, k, k, grid, heads);
    if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols) throw std::out_of_range("window index");
    const int head_dim = q.channels() / heads;
    const int ws = grid.window_size;
    const int y0 = row * ws;
    const int x0 = col * ws;
    FeatureMap scratch = k;
    std::vector<std::vector<double>> probs;
    attend_window(q, k, k, y0, x0, std::min(y0 + ws, q.height()), std::min(x0 + ws, q.width()), head * head_dim,
                  head_dim, scratch, &probs);
    return probs;
}

FeatureMap concat_channels(std::span<const FeatureMap* const> parts) {
    if (parts.empty()) throw ShapeError("concat_channels: nothing to concatenate");
    const int h = parts.front()->height();
    const int w = parts.front()->width();
    int channels = 0;
    for (const auto* p : parts) {
        if (p->height() != h || p->width() != w) throw ShapeError("concat_channels: spatial dims differ");
        channels += p->channels();
    }
    FeatureMap out(h, w, channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto dst = out.pixel(y, x).begin();
            for (const auto* p : parts) {
                const auto src = p->pixel(y, x);
                dst = std::copy(src.begin(), src.end(), dst);
            }
        }
    }
    return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
    const FeatureMap* parts[] = {&a, &b};
    return concat_channels(parts);
}

void leaky_relu_inplace(FeatureMap& m, double slope) {
    for (auto& v : m.data()) v = v < 0.0 ? v * slope : v;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shapes differ");
    FeatureMap out = a;
    auto d = out.data();
    const auto s = b.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
    return out;
}

FeatureMap upsample_nearest(const FeatureMap& src, int height, int width) {
    FeatureMap out(height, width, src.channels());
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(static_cast<int>(static_cast<long long>(y) * src.height() / height), src.height() - 1);
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(static_cast<int>(static_cast<long long>(x) * src.width() / width), src.width() - 1);
            const auto from = src.pixel(sy, sx);
            std::copy(from.begin(), from.end(), out.pixel(y, x).begin());
        }
    }
    return out;
}

Mask downsample_mask(const Mask& mask, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample_mask: factor must be >= 1");
    Mask out((mask.height() + factor - 1) / factor, (mask.width() + factor - 1) / factor);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(y, x)) out.set(y / factor, x / factor, true);
        }
    }
    return out;
}

}  // namespace vinpaint
