#include "vinpaint/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vinpaint {

namespace {

bool reliable_at(const FlowPair& pair, const Mask& known_src, double eps, int y, int x, std::span<double> scratch) {
    const double ey = y + pair.forward.v(y, x);
    const double ex = x + pair.forward.u(y, x);
    const int h = known_src.height();
    const int w = known_src.width();
    if (!(ey >= 0.0 && ey <= h - 1 && ex >= 0.0 && ex <= w - 1)) return false;
    if (!known_src.at(static_cast<int>(std::lround(ey)), static_cast<int>(std::lround(ex)))) return false;
    bilinear_sample(pair.backward.as_map(), ey, ex, scratch);
    return std::hypot(pair.forward.u(y, x) + scratch[0], pair.forward.v(y, x) + scratch[1]) < eps;
}

void check_pair(const FlowPair& pair, int h, int w) {
    if (pair.forward.height() != h || pair.forward.width() != w || pair.backward.height() != h ||
        pair.backward.width() != w) {
        throw ShapeError("flow pair dims differ from frames");
    }
}

// Fill hole pixels of frame `t` from frame `src` where the pair is reliable.
void composite_from(PropagationState& s, std::size_t t, std::size_t src, const FlowPair& pair, double eps) {
    Mask& hole = s.masks[t];
    if (hole.none()) return;
    const Mask& src_hole = s.masks[src];
    const Frame& source = s.frames[src];
    Frame& target = s.frames[t];
    std::vector<double> scratch(2);
    // Reliability is judged against the hole state before this step.
    const Mask known = src_hole.inverted();
    std::vector<std::pair<int, int>> filled;
    for (int y = 0; y < target.height(); ++y) {
        for (int x = 0; x < target.width(); ++x) {
            if (!hole.at(y, x)) continue;
            if (!reliable_at(pair, known, eps, y, x, scratch)) continue;
            bilinear_sample(source, y + pair.forward.v(y, x), x + pair.forward.u(y, x), target.pixel(y, x));
            filled.emplace_back(y, x);
        }
    }
    for (auto [y, x] : filled) hole.set(y, x, false);
}

FeatureMap fuse(const FeatureMap& aligned, const FeatureMap& current, const FeaturePropagationWeights& w) {
    FeatureMap h = conv2d(concat_channels(aligned, current), w.fuse1);
    leaky_relu_inplace(h);
    return add(current, conv2d(h, w.fuse2));
}

FeatureMap mask_channel(const Mask& m) {
    FeatureMap out(m.height(), m.width(), 1);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) out.at(y, x, 0) = m.at(y, x) ? 1.0 : 0.0;
    }
    return out;
}

FeatureMap feature_step(const FeatureMap& propagated, const FeatureMap& current, const FlowField& flow,
                        const Mask& mask, const FeaturePropagationWeights& w) {
    const FeatureMap warped = warp(propagated, flow);
    const FeatureMap mask_map = mask_channel(mask);
    const FeatureMap* parts[] = {&warped, &current, &flow.as_map(), &mask_map};
    FeatureMap h = conv2d(concat_channels(parts), w.residual1);
    leaky_relu_inplace(h);
    const OffsetField residual = offsets_from_prediction(conv2d(h, w.residual2), w.align.taps());
    return fuse(align_features(propagated, flow, residual, w.align), current, w);
}

std::vector<std::pair<int, int>> stride2_dims(int height, int width) {
    std::vector<std::pair<int, int>> dims{{height, width}};
    for (int i = 0; i < 3; ++i) dims.emplace_back((dims.back().first + 1) / 2, (dims.back().second + 1) / 2);
    return dims;
}

template <typename Fn>
void for_each_codec_conv(ImageCodecWeights& w, Fn&& fn) {
    fn("enc1", w.enc1);
    fn("enc2", w.enc2);
    fn("enc3", w.enc3);
    fn("dec1", w.dec1);
    fn("dec2", w.dec2);
    fn("dec3", w.dec3);
}

template <typename Fn>
void for_each_prop_conv(FeaturePropagationWeights& w, Fn&& fn) {
    fn("residual1", w.residual1);
    fn("residual2", w.residual2);
    fn("align", w.align);
    fn("fuse1", w.fuse1);
    fn("fuse2", w.fuse2);
}

}  // namespace

Mask compute_reliable_area(const FlowPair& pair, const Mask& known_src, double eps) {
    const int h = known_src.height();
    const int w = known_src.width();
    check_pair(pair, h, w);
    Mask out(h, w);
    std::vector<double> scratch(2);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.set(y, x, reliable_at(pair, known_src, eps, y, x, scratch));
    }
    return out;
}

void PropagationState::validate() const {
    if (frames.size() != masks.size()) throw ShapeError("propagation state: frame and mask counts differ");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!masks[i].same_dims(frames[i].height(), frames[i].width()) || !frames[i].same_shape(frames.front())) {
            throw ShapeError("propagation state: frame/mask dims differ");
        }
    }
}

PropagationState propagate_image(const PropagationState& state, const std::vector<FlowPair>& flows, double eps) {
    state.validate();
    const std::size_t n = state.frames.size();
    if (n != 0 && flows.size() != n - 1) {
        throw ShapeError("propagate_image: " + std::to_string(n) + " frames need " + std::to_string(n - 1) +
                         " flow pairs, got " + std::to_string(flows.size()));
    }
    PropagationState out = state;
    if (n < 2) return out;
    for (const auto& p : flows) check_pair(p, state.frames.front().height(), state.frames.front().width());

    for (std::size_t t = n - 1; t-- > 0;) composite_from(out, t, t + 1, flows[t], eps);
    for (std::size_t t = 1; t < n; ++t) {
        const FlowPair reversed{flows[t - 1].backward, flows[t - 1].forward};
        composite_from(out, t, t - 1, reversed, eps);
    }
    return out;
}

FlowField downsample_flow(const FlowField& flow, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample_flow: factor must be >= 1");
    const int h = (flow.height() + factor - 1) / factor;
    const int w = (flow.width() + factor - 1) / factor;
    FlowField out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double su = 0.0, sv = 0.0;
            int n = 0;
            for (int yy = y * factor; yy < std::min((y + 1) * factor, flow.height()); ++yy) {
                for (int xx = x * factor; xx < std::min((x + 1) * factor, flow.width()); ++xx) {
                    su += flow.u(yy, xx);
                    sv += flow.v(yy, xx);
                    ++n;
                }
            }
            out.u(y, x) = su / n / factor;
            out.v(y, x) = sv / n / factor;
        }
    }
    return out;
}

FeaturePropagationWeights FeaturePropagationWeights::zeros(int channels, int kernel) {
    FeaturePropagationWeights w;
    w.channels = channels;
    w.align = ConvWeights(channels, channels, kernel, kernel);
    w.residual1 = ConvWeights(channels, 2 * channels + 3, 3, 3);
    w.residual2 = ConvWeights(3 * w.align.taps(), channels, 3, 3);
    w.fuse1 = ConvWeights(channels, 2 * channels, 3, 3);
    w.fuse2 = ConvWeights(channels, channels, 3, 3);
    return w;
}

FeaturePropagationWeights FeaturePropagationWeights::random(std::uint64_t seed, int channels, int kernel) {
    FeaturePropagationWeights w = zeros(channels, kernel);
    std::uint64_t s = seed * 1000 + 500;
    for_each_prop_conv(w, [&](const char*, ConvWeights& c) {
        c = random_conv(c.out_channels, c.in_channels, c.kernel_h, c.kernel_w, ++s);
    });
    return w;
}

FeaturePropagationWeights FeaturePropagationWeights::from_bundle(const TensorBundle& bundle, int channels,
                                                                 const std::string& prefix) {
    FeaturePropagationWeights w = zeros(channels);
    for_each_prop_conv(w, [&](const char* name, ConvWeights& c) {
        c = bundle.get_conv(prefix + "." + name, c.out_channels, c.in_channels, c.kernel_h, c.kernel_w);
    });
    return w;
}

void FeaturePropagationWeights::to_bundle(TensorBundle& bundle, const std::string& prefix) const {
    auto copy = *this;
    for_each_prop_conv(copy, [&](const char* name, ConvWeights& c) { bundle.put_conv(prefix + "." + name, c); });
}

FeatureMap align_features(const FeatureMap& propagated, const FlowField& flow, const OffsetField& residual,
                          const ConvWeights& kernel) {
    if (flow.height() != propagated.height() || flow.width() != propagated.width() ||
        residual.height() != propagated.height() || residual.width() != propagated.width()) {
        throw ShapeError("align_features: flow/offset dims differ from features");
    }
    OffsetField total(residual.height(), residual.width(), residual.taps());
    for (int y = 0; y < total.height(); ++y) {
        for (int x = 0; x < total.width(); ++x) {
            for (int k = 0; k < total.taps(); ++k) {
                total.set_offset(y, x, k, flow.v(y, x) + residual.dy(y, x, k), flow.u(y, x) + residual.dx(y, x, k));
                total.set_modulation(y, x, k, residual.modulation(y, x, k));
            }
        }
    }
    return deformable_conv(propagated, total, kernel);
}

PropagationState propagate_features(const PropagationState& state, const std::vector<FlowPair>& flows,
                                    const std::vector<Mask>& masks, const FeaturePropagationWeights& weights) {
    const std::size_t n = state.features.size();
    PropagationState out = state;
    if (n == 0) return out;
    if (flows.size() != n - 1 || masks.size() != n) {
        throw ShapeError("propagate_features: need n-1 flow pairs and n masks for n feature maps");
    }
    const int fh = state.features.front().height();
    const int fw = state.features.front().width();
    for (const auto& f : state.features) {
        if (f.height() != fh || f.width() != fw || f.channels() != weights.channels) {
            throw ShapeError("propagate_features: feature maps must share shape and match the weights' channels");
        }
    }
    for (const auto& m : masks) {
        if ((m.height() + 7) / 8 != fh || (m.width() + 7) / 8 != fw) {
            throw ShapeError("propagate_features: features are not at 1/8 of mask resolution");
        }
    }

    std::vector<FlowField> fwd, bwd;
    std::vector<Mask> small;
    for (const auto& p : flows) {
        fwd.push_back(downsample_flow(p.forward, 8));
        bwd.push_back(downsample_flow(p.backward, 8));
    }
    for (const auto& m : masks) small.push_back(downsample_mask(m, 8));

    std::vector<FeatureMap> backward(n);
    backward[n - 1] = state.features[n - 1];
    for (std::size_t t = n - 1; t-- > 0;) {
        backward[t] = feature_step(backward[t + 1], state.features[t], fwd[t], small[t], weights);
    }
    out.features[0] = backward[0];
    for (std::size_t t = 1; t < n; ++t) {
        out.features[t] = feature_step(out.features[t - 1], backward[t], bwd[t - 1], small[t], weights);
    }
    return out;
}

ImageCodecWeights ImageCodecWeights::zeros() {
    constexpr int C = kChannels;
    ImageCodecWeights w;
    w.enc1 = ConvWeights(C, 3, 3, 3);
    w.enc2 = ConvWeights(C, C, 3, 3);
    w.enc3 = ConvWeights(C, C, 3, 3);
    w.dec1 = ConvWeights(C, C, 3, 3);
    w.dec2 = ConvWeights(C, C, 3, 3);
    w.dec3 = ConvWeights(3, C, 3, 3);
    return w;
}

ImageCodecWeights ImageCodecWeights::random(std::uint64_t seed) {
    ImageCodecWeights w = zeros();
    std::uint64_t s = seed * 1000 + 700;
    for_each_codec_conv(w, [&](const char*, ConvWeights& c) {
        c = random_conv(c.out_channels, c.in_channels, c.kernel_h, c.kernel_w, ++s);
    });
    return w;
}

ImageCodecWeights ImageCodecWeights::from_bundle(const TensorBundle& bundle, const std::string& prefix) {
    ImageCodecWeights w = zeros();
    for_each_codec_conv(w, [&](const char* name, ConvWeights& c) {
        c = bundle.get_conv(prefix + "." + name, c.out_channels, c.in_channels, c.kernel_h, c.kernel_w);
    });
    return w;
}

void ImageCodecWeights::to_bundle(TensorBundle& bundle, const std::string& prefix) const {
    auto copy = *this;
    for_each_codec_conv(copy, [&](const char* name, ConvWeights& c) { bundle.put_conv(prefix + "." + name, c); });
}

FeatureMap encode_image(const Frame& frame, const Mask& hole, const ImageCodecWeights& weights) {
    if (!hole.same_dims(frame.height(), frame.width())) throw ShapeError("encode_image: mask dims differ");
    Frame masked = frame;
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            if (hole.at(y, x)) std::fill(masked.pixel(y, x).begin(), masked.pixel(y, x).end(), 0.0);
        }
    }
    FeatureMap h = conv2d(masked, weights.enc1, 2);
    leaky_relu_inplace(h);
    h = conv2d(h, weights.enc2, 2);
    leaky_relu_inplace(h);
    return conv2d(h, weights.enc3, 2);
}

Frame decode_features(const FeatureMap& features, int height, int width, const ImageCodecWeights& weights) {
    const auto dims = stride2_dims(height, width);
    if (features.height() != dims[3].first || features.width() != dims[3].second) {
        throw ShapeError("decode_features: features are not at 1/8 of the requested size");
    }
    FeatureMap x = conv2d(upsample_nearest(features, dims[2].first, dims[2].second), weights.dec1);
    leaky_relu_inplace(x);
    x = conv2d(upsample_nearest(x, dims[1].first, dims[1].second), weights.dec2);
    leaky_relu_inplace(x);
    x = conv2d(upsample_nearest(x, dims[0].first, dims[0].second), weights.dec3);
    for (auto& v : x.data()) v = 1.0 / (1.0 + std::exp(-v));
    return x;
}

}  // namespace vinpaint
