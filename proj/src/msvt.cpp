#include "vinpaint/msvt.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace vinpaint {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double bound) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<float>(bound * ((static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0));
    return v;
}

void check_size(const std::vector<double>& v, std::size_t n, const char* what) {
    if (v.size() != n) throw ShapeError(std::string("MsvtWeights: ") + what + " has wrong size");
}

}  // namespace

void MsvtConfig::validate() const {
    if (window_size < 1 || heads < 1 || ffn_expansion < 1 || depth < 1) {
        throw std::invalid_argument("MsvtConfig: all fields must be >= 1");
    }
}

MsvtWeights MsvtWeights::zeros(int channels, int ffn_expansion) {
    if (channels < 1 || ffn_expansion < 1) throw ShapeError("MsvtWeights: dims must be positive");
    MsvtWeights w;
    w.channels = channels;
    w.hidden = channels * ffn_expansion;
    const auto c = static_cast<std::size_t>(channels);
    const auto h = static_cast<std::size_t>(w.hidden);
    w.norm1_scale.assign(c, 0.0);
    w.norm1_shift.assign(c, 0.0);
    w.norm2_scale.assign(c, 0.0);
    w.norm2_shift.assign(c, 0.0);
    for (auto* m : {&w.wq, &w.wk, &w.wv, &w.wo}) m->assign(c * c, 0.0);
    for (auto* b : {&w.bq, &w.bk, &w.bv, &w.bo, &w.b2}) b->assign(c, 0.0);
    w.w1.assign(h * c, 0.0);
    w.b1.assign(h, 0.0);
    w.w2.assign(c * h, 0.0);
    return w;
}

MsvtWeights MsvtWeights::random(std::uint64_t seed, int channels, int ffn_expansion) {
    MsvtWeights w = zeros(channels, ffn_expansion);
    std::mt19937_64 rng(seed * 7919 + 17);
    const double lin = std::sqrt(3.0 / channels);
    const double lin_hidden = std::sqrt(3.0 / w.hidden);
    w.norm1_scale = random_vector(rng, channels, 0.2);
    w.norm2_scale = random_vector(rng, channels, 0.2);
    for (auto& s : w.norm1_scale) s = static_cast<float>(s + 1.0);
    for (auto& s : w.norm2_scale) s = static_cast<float>(s + 1.0);
    w.norm1_shift = random_vector(rng, channels, 0.1);
    w.norm2_shift = random_vector(rng, channels, 0.1);
    for (auto* m : {&w.wq, &w.wk, &w.wv, &w.wo}) *m = random_vector(rng, m->size(), lin);
    for (auto* b : {&w.bq, &w.bk, &w.bv, &w.bo, &w.b2}) *b = random_vector(rng, b->size(), 0.05);
    w.w1 = random_vector(rng, w.w1.size(), lin);
    w.b1 = random_vector(rng, w.b1.size(), 0.05);
    w.w2 = random_vector(rng, w.w2.size(), lin_hidden);
    return w;
}

MsvtWeights MsvtWeights::from_bundle(const TensorBundle& bundle, const std::string& prefix, int channels,
                                     int ffn_expansion) {
    MsvtWeights w = zeros(channels, ffn_expansion);
    const auto c = static_cast<std::size_t>(channels);
    w.norm1_scale = bundle.get_vector(prefix + ".norm1.scale", c);
    w.norm1_shift = bundle.get_vector(prefix + ".norm1.shift", c);
    w.norm2_scale = bundle.get_vector(prefix + ".norm2.scale", c);
    w.norm2_shift = bundle.get_vector(prefix + ".norm2.shift", c);
    w.wq = bundle.get_matrix(prefix + ".q.weight", channels, channels);
    w.wk = bundle.get_matrix(prefix + ".k.weight", channels, channels);
    w.wv = bundle.get_matrix(prefix + ".v.weight", channels, channels);
    w.wo = bundle.get_matrix(prefix + ".out.weight", channels, channels);
    w.bq = bundle.get_vector(prefix + ".q.bias", c);
    w.bk = bundle.get_vector(prefix + ".k.bias", c);
    w.bv = bundle.get_vector(prefix + ".v.bias", c);
    w.bo = bundle.get_vector(prefix + ".out.bias", c);
    w.w1 = bundle.get_matrix(prefix + ".ffn1.weight", w.hidden, channels);
    w.b1 = bundle.get_vector(prefix + ".ffn1.bias", static_cast<std::size_t>(w.hidden));
    w.w2 = bundle.get_matrix(prefix + ".ffn2.weight", channels, w.hidden);
    w.b2 = bundle.get_vector(prefix + ".ffn2.bias", c);
    return w;
}

void MsvtWeights::to_bundle(TensorBundle& bundle, const std::string& prefix) const {
    bundle.put_vector(prefix + ".norm1.scale", norm1_scale);
    bundle.put_vector(prefix + ".norm1.shift", norm1_shift);
    bundle.put_vector(prefix + ".norm2.scale", norm2_scale);
    bundle.put_vector(prefix + ".norm2.shift", norm2_shift);
    bundle.put_matrix(prefix + ".q.weight", channels, channels, wq);
    bundle.put_matrix(prefix + ".k.weight", channels, channels, wk);
    bundle.put_matrix(prefix + ".v.weight", channels, channels, wv);
    bundle.put_matrix(prefix + ".out.weight", channels, channels, wo);
    bundle.put_vector(prefix + ".q.bias", bq);
    bundle.put_vector(prefix + ".k.bias", bk);
    bundle.put_vector(prefix + ".v.bias", bv);
    bundle.put_vector(prefix + ".out.bias", bo);
    bundle.put_matrix(prefix + ".ffn1.weight", hidden, channels, w1);
    bundle.put_vector(prefix + ".ffn1.bias", b1);
    bundle.put_matrix(prefix + ".ffn2.weight", channels, hidden, w2);
    bundle.put_vector(prefix + ".ffn2.bias", b2);
}

void MsvtWeights::validate(const MsvtConfig& cfg) const {
    cfg.validate();
    if (channels % cfg.heads != 0) throw ShapeError("MsvtWeights: head count must divide channels");
    if (hidden != channels * cfg.ffn_expansion) throw ShapeError("MsvtWeights: hidden width disagrees with config");
    const auto c = static_cast<std::size_t>(channels);
    const auto h = static_cast<std::size_t>(hidden);
    for (const auto* v : {&norm1_scale, &norm1_shift, &norm2_scale, &norm2_shift, &bq, &bk, &bv, &bo, &b2}) {
        check_size(*v, c, "vector");
    }
    for (const auto* m : {&wq, &wk, &wv, &wo}) check_size(*m, c * c, "projection");
    check_size(w1, h * c, "ffn1.weight");
    check_size(b1, h, "ffn1.bias");
    check_size(w2, c * h, "ffn2.weight");
}

FeatureMap layer_norm(const FeatureMap& x, const std::vector<double>& scale, const std::vector<double>& shift) {
    const int c = x.channels();
    FeatureMap out(x.height(), x.width(), c);
    for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) {
            const auto p = x.pixel(y, xx);
            double mean = 0.0;
            for (double v : p) mean += v;
            mean /= c;
            double var = 0.0;
            for (double v : p) var += (v - mean) * (v - mean);
            var /= c;
            const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
            auto o = out.pixel(y, xx);
            for (int k = 0; k < c; ++k) o[k] = (p[k] - mean) * inv * scale[k] + shift[k];
        }
    }
    return out;
}

FeatureMap linear(const FeatureMap& x, const std::vector<double>& weight, const std::vector<double>& bias, int out) {
    const int in = x.channels();
    if (weight.size() != static_cast<std::size_t>(out) * in || bias.size() != static_cast<std::size_t>(out)) {
        throw ShapeError("linear: weight shape does not match input");
    }
    FeatureMap y(x.height(), x.width(), out);
    for (int r = 0; r < x.height(); ++r) {
        for (int c = 0; c < x.width(); ++c) {
            const auto p = x.pixel(r, c);
            auto o = y.pixel(r, c);
            for (int j = 0; j < out; ++j) {
                double acc = bias[j];
                for (int i = 0; i < in; ++i) acc += weight[static_cast<std::size_t>(j) * in + i] * p[i];
                o[j] = acc;
            }
        }
    }
    return y;
}

FeatureMap msvt_block(const FeatureMap& features, const Mask& mask, const MsvtWeights& weights, const MsvtConfig& cfg) {
    weights.validate(cfg);
    if (features.channels() != weights.channels) throw ShapeError("msvt_block: channel count differs from weights");
    if (!mask.same_dims(features.height(), features.width())) {
        throw ShapeError("msvt_block: mask is not at feature resolution");
    }
    const int c = weights.channels;
    const WindowGrid grid = select_masked_windows(mask, cfg.window_size);

    FeatureMap x = features;
    if (grid.selected_count() > 0) {
        const FeatureMap normed = layer_norm(features, weights.norm1_scale, weights.norm1_shift);
        const FeatureMap q = linear(normed, weights.wq, weights.bq, c);
        const FeatureMap k = linear(normed, weights.wk, weights.bk, c);
        const FeatureMap v = linear(normed, weights.wv, weights.bv, c);
        const FeatureMap attended =
            linear(sparse_window_attention(q, k, v, grid, cfg.heads), weights.wo, weights.bo, c);
        const int ws = cfg.window_size;
        for (int y = 0; y < x.height(); ++y) {
            for (int xx = 0; xx < x.width(); ++xx) {
                if (!grid.is_selected(y / ws, xx / ws)) continue;
                auto p = x.pixel(y, xx);
                const auto a = attended.pixel(y, xx);
                for (int i = 0; i < c; ++i) p[i] += a[i];
            }
        }
    }

    FeatureMap hidden = linear(layer_norm(x, weights.norm2_scale, weights.norm2_shift), weights.w1, weights.b1,
                               weights.hidden);
    for (auto& v : hidden.data()) v = gelu(v);
    return add(x, linear(hidden, weights.w2, weights.b2, c));
}

std::vector<FeatureMap> msvt_apply(const std::vector<FeatureMap>& features, const std::vector<Mask>& masks,
                                   const std::vector<MsvtWeights>& blocks, const MsvtConfig& cfg) {
    cfg.validate();
    if (features.size() != masks.size()) throw ShapeError("msvt_apply: feature and mask counts differ");
    if (blocks.size() != static_cast<std::size_t>(cfg.depth)) throw ShapeError("msvt_apply: block count != depth");
    std::vector<FeatureMap> out = features;
    for (std::size_t f = 0; f < out.size(); ++f) {
        for (const auto& block : blocks) out[f] = msvt_block(out[f], masks[f], block, cfg);
    }
    return out;
}

std::size_t count_attended_tokens(const Mask& mask, const MsvtConfig& cfg) {
    return select_masked_windows(mask, cfg.window_size).selected_positions();
}

std::size_t count_attended_tokens(const std::vector<Mask>& masks, const MsvtConfig& cfg) {
    std::size_t total = 0;
    for (const auto& m : masks) total += count_attended_tokens(m, cfg);
    return total;
}

}  // namespace vinpaint
