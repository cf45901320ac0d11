#include "vinpaint/flow.hpp"

#include "vinpaint/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vinpaint {

namespace {

// ---- pyramidal Lucas-Kanade ------------------------------------------------

constexpr double kConvergedStep = 0.01;  // pixels

FeatureMap to_gray(const Frame& f) {
    FeatureMap g(f.height(), f.width(), 1);
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            const auto p = f.pixel(y, x);
            if (f.channels() >= 3) {
                g.at(y, x, 0) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
            } else {
                g.at(y, x, 0) = p[0];
            }
        }
    }
    return g;
}

FeatureMap blur_121(const FeatureMap& src) {
    const int h = src.height();
    const int w = src.width();
    FeatureMap tmp(h, w, 1);
    FeatureMap out(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            tmp.at(y, x, 0) = 0.25 * src.at(y, std::max(x - 1, 0), 0) + 0.5 * src.at(y, x, 0) +
                              0.25 * src.at(y, std::min(x + 1, w - 1), 0);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.at(y, x, 0) = 0.25 * tmp.at(std::max(y - 1, 0), x, 0) + 0.5 * tmp.at(y, x, 0) +
                              0.25 * tmp.at(std::min(y + 1, h - 1), x, 0);
        }
    }
    return out;
}

FeatureMap half(const FeatureMap& src) {
    const FeatureMap blurred = blur_121(src);
    FeatureMap out((src.height() + 1) / 2, (src.width() + 1) / 2, 1);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) out.at(y, x, 0) = blurred.at(2 * y, 2 * x, 0);
    }
    return out;
}

// Sum over the (2r+1)^2 window clipped to the frame.
FeatureMap box_sum(const FeatureMap& src, int r) {
    const int h = src.height();
    const int w = src.width();
    FeatureMap rows(h, w, 1);
    std::vector<double> prefix(std::max(h, w) + 1);
    for (int y = 0; y < h; ++y) {
        prefix[0] = 0.0;
        for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src.at(y, x, 0);
        for (int x = 0; x < w; ++x) rows.at(y, x, 0) = prefix[std::min(x + r + 1, w)] - prefix[std::max(x - r, 0)];
    }
    FeatureMap out(h, w, 1);
    for (int x = 0; x < w; ++x) {
        prefix[0] = 0.0;
        for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + rows.at(y, x, 0);
        for (int y = 0; y < h; ++y) out.at(y, x, 0) = prefix[std::min(y + r + 1, h)] - prefix[std::max(y - r, 0)];
    }
    return out;
}

FeatureMap product(const FeatureMap& a, const FeatureMap& b) {
    FeatureMap out(a.height(), a.width(), 1);
    auto d = out.data();
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] * y[i];
    return out;
}

// Single-channel bilinear sample with border clamping.
double sample_gray(const FeatureMap& m, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(m.height() - 1));
    x = std::clamp(x, 0.0, static_cast<double>(m.width() - 1));
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, m.height() - 1);
    const int x1 = std::min(x0 + 1, m.width() - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    return (1 - fy) * ((1 - fx) * m.at(y0, x0, 0) + fx * m.at(y0, x1, 0)) +
           fy * ((1 - fx) * m.at(y1, x0, 0) + fx * m.at(y1, x1, 0));
}

// True when any bilinear corner of (y, x) is set; (y, x) must be in range.
bool touches(const Mask& m, double y, double x) {
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, m.height() - 1);
    const int x1 = std::min(x0 + 1, m.width() - 1);
    return m.at(y0, x0) || m.at(y0, x1) || m.at(y1, x0) || m.at(y1, x1);
}

// Hole plus its 8-neighbourhood, the reach of a central-difference gradient.
Mask grow(const Mask& hole) {
    Mask out(hole.height(), hole.width());
    for (int y = 0; y < hole.height(); ++y) {
        for (int x = 0; x < hole.width(); ++x) {
            if (!hole.at(y, x)) continue;
            for (int yy = std::max(y - 1, 0); yy <= std::min(y + 1, hole.height() - 1); ++yy) {
                for (int xx = std::max(x - 1, 0); xx <= std::min(x + 1, hole.width() - 1); ++xx) out.set(yy, xx, true);
            }
        }
    }
    return out;
}

double window_pixels(int y, int x, int h, int w, int r) {
    const int rows = std::min(y + r, h - 1) - std::max(y - r, 0) + 1;
    const int cols = std::min(x + r, w - 1) - std::max(x - r, 0) + 1;
    return static_cast<double>(rows) * cols;
}

double min_eigenvalue(double a, double b, double c) {
    return 0.5 * (a + c - std::sqrt((a - c) * (a - c) + 4.0 * b * b));
}

FlowField upsample_flow(const FlowField& coarse, int height, int width) {
    FlowField out(height, width);
    std::vector<double> s(2);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            bilinear_sample(coarse.as_map(), y / 2.0, x / 2.0, s);
            out.u(y, x) = 2.0 * s[0];
            out.v(y, x) = 2.0 * s[1];
        }
    }
    return out;
}

// ---- recurrent completion graph --------------------------------------------

struct Encoded {
    std::vector<std::pair<int, int>> dims;  // full, 1/2, 1/4 resolutions
    FeatureMap features;                    // 1/8 resolution
};

Encoded encode(const FlowField& flow, const Mask& mask, const FlowCompletionWeights& w) {
    FeatureMap x = flow.as_map();
    for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) {
            if (mask.at(y, xx)) {
                x.at(y, xx, 0) = 0.0;
                x.at(y, xx, 1) = 0.0;
            }
        }
    }
    Encoded e;
    e.dims.emplace_back(x.height(), x.width());
    FeatureMap h1 = conv2d(x, w.enc1, 2);
    leaky_relu_inplace(h1);
    e.dims.emplace_back(h1.height(), h1.width());
    FeatureMap h2 = conv2d(h1, w.enc2, 2);
    leaky_relu_inplace(h2);
    e.dims.emplace_back(h2.height(), h2.width());
    e.features = conv2d(h2, w.enc3, 2);
    return e;
}

FlowField decode(const FeatureMap& features, const Encoded& shape, const FlowCompletionWeights& w) {
    FeatureMap x = upsample_nearest(features, shape.dims[2].first, shape.dims[2].second);
    x = conv2d(x, w.dec1);
    leaky_relu_inplace(x);
    x = upsample_nearest(x, shape.dims[1].first, shape.dims[1].second);
    x = conv2d(x, w.dec2);
    leaky_relu_inplace(x);
    x = upsample_nearest(x, shape.dims[0].first, shape.dims[0].second);
    return FlowField(conv2d(x, w.dec3));
}

// current + R(concat(D(propagated; o, m), current))
FeatureMap propagate_step(const FeatureMap& propagated, const FeatureMap& current, const FlowCompletionWeights& w) {
    FeatureMap h = conv2d(concat_channels(current, propagated), w.offset1);
    leaky_relu_inplace(h);
    const OffsetField offsets = offsets_from_prediction(conv2d(h, w.offset2), FlowCompletionWeights::kTaps);
    const FeatureMap aligned = deformable_conv(propagated, offsets, w.align);
    FeatureMap fused = conv2d(concat_channels(aligned, current), w.fuse1);
    leaky_relu_inplace(fused);
    return add(current, conv2d(fused, w.fuse2));
}

std::vector<FlowField> complete_stream(const std::vector<const FlowField*>& flows, const std::vector<const Mask*>& masks,
                                       const FlowCompletionWeights& w) {
    const std::size_t n = flows.size();
    std::vector<Encoded> enc;
    enc.reserve(n);
    for (std::size_t i = 0; i < n; ++i) enc.push_back(encode(*flows[i], *masks[i], w));

    std::vector<FeatureMap> backward(n);
    backward[n - 1] = enc[n - 1].features;
    for (std::size_t i = n - 1; i-- > 0;) backward[i] = propagate_step(backward[i + 1], enc[i].features, w);

    std::vector<FeatureMap> forward(n);
    forward[0] = backward[0];
    for (std::size_t i = 1; i < n; ++i) forward[i] = propagate_step(forward[i - 1], backward[i], w);

    std::vector<FlowField> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FlowField decoded = decode(forward[i], enc[i], w);
        FlowField blended = *flows[i];
        for (int y = 0; y < blended.height(); ++y) {
            for (int x = 0; x < blended.width(); ++x) {
                if (!masks[i]->at(y, x)) continue;
                blended.u(y, x) = decoded.u(y, x);
                blended.v(y, x) = decoded.v(y, x);
            }
        }
        out.push_back(std::move(blended));
    }
    return out;
}

}  // namespace

int pyramid_levels(int height, int width) {
    const double ratio = std::min(height, width) / 16.0;
    const int levels = ratio >= 2.0 ? static_cast<int>(std::floor(std::log2(ratio))) : 1;
    return std::max(levels, 1);
}

FlowField estimate_flow(const Frame& a, const Frame& b, const LucasKanadeOptions& options, const Mask* a_hole,
                        const Mask* b_hole) {
    if (!a.same_shape(b)) throw ShapeError("estimate_flow: frames differ in shape");
    for (const Mask* m : {a_hole, b_hole}) {
        if (m && !m->same_dims(a.height(), a.width())) throw ShapeError("estimate_flow: hole mask dims differ");
    }
    const int levels = pyramid_levels(a.height(), a.width());
    std::vector<FeatureMap> pa{to_gray(a)};
    std::vector<FeatureMap> pb{to_gray(b)};
    std::vector<Mask> ma{a_hole ? grow(*a_hole) : Mask(a.height(), a.width())};
    std::vector<Mask> mb{b_hole ? *b_hole : Mask(a.height(), a.width())};
    for (int l = 1; l < levels; ++l) {
        pa.push_back(half(pa.back()));
        pb.push_back(half(pb.back()));
        ma.push_back(downsample_mask(ma.back(), 2));
        mb.push_back(downsample_mask(mb.back(), 2));
    }

    const int r = options.window_radius;
    FlowField flow(pa.back().height(), pa.back().width());
    std::vector<std::uint8_t> textured;
    for (int l = levels - 1; l >= 0; --l) {
        const FeatureMap& A = pa[l];
        const FeatureMap& B = pb[l];
        const Mask& skip_a = ma[l];
        const Mask& skip_b = mb[l];
        const bool any_b = !skip_b.none();
        const int h = A.height();
        const int w = A.width();
        if (l != levels - 1) flow = upsample_flow(flow, h, w);

        FeatureMap ix(h, w, 1);
        FeatureMap iy(h, w, 1);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                ix.at(y, x, 0) = 0.5 * (A.at(y, std::min(x + 1, w - 1), 0) - A.at(y, std::max(x - 1, 0), 0));
                iy.at(y, x, 0) = 0.5 * (A.at(std::min(y + 1, h - 1), x, 0) - A.at(std::max(y - 1, 0), x, 0));
            }
        }
        const FeatureMap sxx = box_sum(product(ix, ix), r);
        const FeatureMap sxy = box_sum(product(ix, iy), r);
        const FeatureMap syy = box_sum(product(iy, iy), r);

        textured.assign(static_cast<std::size_t>(h) * w, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double e = min_eigenvalue(sxx.at(y, x, 0), sxy.at(y, x, 0), syy.at(y, x, 0));
                textured[static_cast<std::size_t>(y) * w + x] = e / window_pixels(y, x, h, w, r) >= options.min_eigenvalue;
            }
        }

        // Each pixel iterates on its own window, sampling B at its own flow.
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!textured[static_cast<std::size_t>(y) * w + x]) continue;
                const int y0 = std::max(y - r, 0), y1 = std::min(y + r, h - 1);
                const int x0 = std::max(x - r, 0), x1 = std::min(x + r, w - 1);
                for (int it = 0; it < options.iterations; ++it) {
                    const double fu = flow.u(y, x);
                    const double fv = flow.v(y, x);
                    // Window pixels whose displaced position leaves B are dropped.
                    double g11 = 0.0, g12 = 0.0, g22 = 0.0, bx = 0.0, by = 0.0;
                    for (int qy = y0; qy <= y1; ++qy) {
                        const double sy = qy + fv;
                        if (sy < 0.0 || sy > h - 1) continue;
                        for (int qx = x0; qx <= x1; ++qx) {
                            const double sx = qx + fu;
                            if (sx < 0.0 || sx > w - 1) continue;
                            if (skip_a.at(qy, qx) || (any_b && touches(skip_b, sy, sx))) continue;
                            const double gx = ix.at(qy, qx, 0);
                            const double gy = iy.at(qy, qx, 0);
                            const double e = sample_gray(B, sy, sx) - A.at(qy, qx, 0);
                            g11 += gx * gx;
                            g12 += gx * gy;
                            g22 += gy * gy;
                            bx += gx * e;
                            by += gy * e;
                        }
                    }
                    const double det = g11 * g22 - g12 * g12;
                    if (!(det > 0.0) || min_eigenvalue(g11, g12, g22) < options.min_eigenvalue) break;
                    double du = -(g22 * bx - g12 * by) / det;
                    double dv = -(g11 * by - g12 * bx) / det;
                    const double step = std::hypot(du, dv);
                    if (step > r) {
                        du *= r / step;
                        dv *= r / step;
                    }
                    flow.u(y, x) = fu + du;
                    flow.v(y, x) = fv + dv;
                    if (step < kConvergedStep) break;
                }
            }
        }
    }

    // Textureless pixels carry no motion evidence at full resolution.
    const int w = flow.width();
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            if (textured[static_cast<std::size_t>(y) * w + x]) continue;
            flow.u(y, x) = 0.0;
            flow.v(y, x) = 0.0;
        }
    }
    return flow;
}

FlowPair estimate_flow_pair(const Frame& a, const Frame& b, const LucasKanadeOptions& options, const Mask* a_hole,
                            const Mask* b_hole) {
    return FlowPair{estimate_flow(a, b, options, a_hole, b_hole), estimate_flow(b, a, options, b_hole, a_hole)};
}

FlowField complete_flow_harmonic(const FlowField& flow, const Mask& mask) {
    if (!mask.same_dims(flow.height(), flow.width())) throw ShapeError("complete_flow_harmonic: mask dims differ");
    FlowField out = flow;
    harmonic_fill(out.as_map(), mask);
    return out;
}

Mask flow_consistency(const FlowPair& pair, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("flow_consistency: eps must be positive");
    const FlowField& f = pair.forward;
    const FlowField& b = pair.backward;
    if (f.height() != b.height() || f.width() != b.width()) throw ShapeError("flow_consistency: flow dims differ");
    Mask valid(f.height(), f.width());
    std::vector<double> back(2);
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            bilinear_sample(b.as_map(), y + f.v(y, x), x + f.u(y, x), back);
            valid.set(y, x, std::hypot(f.u(y, x) + back[0], f.v(y, x) + back[1]) < eps);
        }
    }
    return valid;
}

FlowCompletionWeights FlowCompletionWeights::zeros() {
    constexpr int F = kFeatures;
    FlowCompletionWeights w;
    w.enc1 = ConvWeights(kHidden, kInput, 3, 3);
    w.enc2 = ConvWeights(F, kHidden, 3, 3);
    w.enc3 = ConvWeights(F, F, 3, 3);
    w.offset1 = ConvWeights(F, 2 * F, 3, 3);
    w.offset2 = ConvWeights(3 * kTaps, F, 3, 3);
    w.align = ConvWeights(F, F, 3, 3);
    w.fuse1 = ConvWeights(F, 2 * F, 3, 3);
    w.fuse2 = ConvWeights(F, F, 3, 3);
    w.dec1 = ConvWeights(F, F, 3, 3);
    w.dec2 = ConvWeights(kHidden, F, 3, 3);
    w.dec3 = ConvWeights(kInput, kHidden, 3, 3);
    return w;
}

FlowCompletionWeights FlowCompletionWeights::random(std::uint64_t seed) {
    FlowCompletionWeights w = zeros();
    std::uint64_t s = seed * 1000;
    for (ConvWeights* c : {&w.enc1, &w.enc2, &w.enc3, &w.offset1, &w.offset2, &w.align, &w.fuse1, &w.fuse2, &w.dec1,
                           &w.dec2, &w.dec3}) {
        *c = random_conv(c->out_channels, c->in_channels, c->kernel_h, c->kernel_w, ++s);
    }
    return w;
}

namespace {

template <typename Fn>
void for_each_flow_conv(FlowCompletionWeights& w, Fn&& fn) {
    fn("enc1", w.enc1);
    fn("enc2", w.enc2);
    fn("enc3", w.enc3);
    fn("offset1", w.offset1);
    fn("offset2", w.offset2);
    fn("align", w.align);
    fn("fuse1", w.fuse1);
    fn("fuse2", w.fuse2);
    fn("dec1", w.dec1);
    fn("dec2", w.dec2);
    fn("dec3", w.dec3);
}

}  // namespace

FlowCompletionWeights FlowCompletionWeights::from_bundle(const TensorBundle& bundle, const std::string& prefix) {
    FlowCompletionWeights w = zeros();
    for_each_flow_conv(w, [&](const char* name, ConvWeights& c) {
        c = bundle.get_conv(prefix + "." + name, c.out_channels, c.in_channels, c.kernel_h, c.kernel_w);
    });
    return w;
}

void FlowCompletionWeights::to_bundle(TensorBundle& bundle, const std::string& prefix) const {
    auto copy = *this;
    for_each_flow_conv(copy, [&](const char* name, ConvWeights& c) { bundle.put_conv(prefix + "." + name, c); });
}

std::vector<FlowPair> complete_flow_recurrent(const std::vector<FlowPair>& flows, const std::vector<Mask>& masks,
                                              const FlowCompletionWeights& weights) {
    if (flows.empty()) return {};
    if (masks.size() != flows.size() + 1) {
        throw ShapeError("complete_flow_recurrent: expected " + std::to_string(flows.size() + 1) + " masks, got " +
                         std::to_string(masks.size()));
    }
    const int h = flows.front().forward.height();
    const int w = flows.front().forward.width();
    for (const auto& p : flows) {
        if (p.forward.height() != h || p.forward.width() != w || p.backward.height() != h || p.backward.width() != w) {
            throw ShapeError("complete_flow_recurrent: flow dims differ across the clip");
        }
    }
    for (const auto& m : masks) {
        if (!m.same_dims(h, w)) throw ShapeError("complete_flow_recurrent: mask dims differ from flows");
    }

    std::vector<const FlowField*> fwd, bwd;
    std::vector<const Mask*> fwd_masks, bwd_masks;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        fwd.push_back(&flows[i].forward);
        bwd.push_back(&flows[i].backward);
        fwd_masks.push_back(&masks[i]);
        bwd_masks.push_back(&masks[i + 1]);
    }
    auto done_fwd = complete_stream(fwd, fwd_masks, weights);
    auto done_bwd = complete_stream(bwd, bwd_masks, weights);

    std::vector<FlowPair> out;
    out.reserve(flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) out.push_back({std::move(done_fwd[i]), std::move(done_bwd[i])});
    return out;
}

}  // namespace vinpaint
