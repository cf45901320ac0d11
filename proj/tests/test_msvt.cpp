#include "oracles.hpp"

#include "vinpaint/msvt.hpp"

#include <doctest.h>

#include <filesystem>

using namespace vinpaint;

namespace {

FeatureMap ref_layer_norm(const FeatureMap& x, const std::vector<double>& g, const std::vector<double>& b) {
    FeatureMap out(x.height(), x.width(), x.channels());
    const int c = x.channels();
    for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) {
            double s = 0, s2 = 0;
            for (int k = 0; k < c; ++k) s += x.at(y, xx, k);
            const double mean = s / c;
            for (int k = 0; k < c; ++k) s2 += (x.at(y, xx, k) - mean) * (x.at(y, xx, k) - mean);
            const double sd = std::sqrt(s2 / c + 1e-5);
            for (int k = 0; k < c; ++k) out.at(y, xx, k) = g[k] * (x.at(y, xx, k) - mean) / sd + b[k];
        }
    }
    return out;
}

FeatureMap ref_linear(const FeatureMap& x, const std::vector<double>& w, const std::vector<double>& b, int out) {
    FeatureMap y(x.height(), x.width(), out);
    for (int r = 0; r < x.height(); ++r) {
        for (int c = 0; c < x.width(); ++c) {
            for (int j = 0; j < out; ++j) {
                double acc = b[j];
                for (int i = 0; i < x.channels(); ++i) acc += w[static_cast<std::size_t>(j) * x.channels() + i] * x.at(r, c, i);
                y.at(r, c, j) = acc;
            }
        }
    }
    return y;
}

Mask windows_touching(const Mask& m, int ws) {
    Mask sel((m.height() + ws - 1) / ws, (m.width() + ws - 1) / ws);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m.at(y, x)) sel.set(y / ws, x / ws, true);
        }
    }
    return sel;
}

// Pre-norm transformer block written out directly; attention residual only
// where the window touches the mask.
FeatureMap ref_block(const FeatureMap& in, const Mask& mask, const MsvtWeights& w, const MsvtConfig& cfg) {
    const int c = w.channels;
    const Mask sel = windows_touching(mask, cfg.window_size);
    const FeatureMap n1 = ref_layer_norm(in, w.norm1_scale, w.norm1_shift);
    const FeatureMap att = oracle::window_attention(ref_linear(n1, w.wq, w.bq, c), ref_linear(n1, w.wk, w.bk, c),
                                                    ref_linear(n1, w.wv, w.bv, c), cfg.window_size, cfg.heads, &sel);
    const FeatureMap proj = ref_linear(att, w.wo, w.bo, c);
    FeatureMap x = in;
    for (int y = 0; y < x.height(); ++y) {
        for (int xx = 0; xx < x.width(); ++xx) {
            if (!sel.at(y / cfg.window_size, xx / cfg.window_size)) continue;
            for (int k = 0; k < c; ++k) x.at(y, xx, k) += proj.at(y, xx, k);
        }
    }
    FeatureMap hid = ref_linear(ref_layer_norm(x, w.norm2_scale, w.norm2_shift), w.w1, w.b1, w.hidden);
    for (auto& v : hid.data()) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    const FeatureMap ff = ref_linear(hid, w.w2, w.b2, c);
    for (std::size_t i = 0; i < x.data().size(); ++i) x.data()[i] += ff.data()[i];
    return x;
}

}  // namespace

TEST_CASE("msvt: zero weights are the identity") {
    oracle::Rng rng(60);
    const FeatureMap f = oracle::random_map(rng, 12, 20, 8);
    const MsvtConfig cfg;
    const MsvtWeights w = MsvtWeights::zeros(8, cfg.ffn_expansion);
    for (const Mask& m : {Mask(12, 20), Mask(12, 20, 1), oracle::random_mask(rng, 12, 20, 0.1)}) {
        CHECK(msvt_block(f, m, w, cfg) == f);
    }
}

TEST_CASE("msvt: fully masked block matches a dense transformer") {
    oracle::Rng rng(61);
    for (int heads : {1, 2, 4}) {
        MsvtConfig cfg;
        cfg.heads = heads;
        cfg.window_size = 4;
        const MsvtWeights w = MsvtWeights::random(static_cast<std::uint64_t>(heads), 8, cfg.ffn_expansion);
        const FeatureMap f = oracle::random_map(rng, 10, 13, 8);
        const Mask all(10, 13, 1);
        CHECK(oracle::max_abs_diff(msvt_block(f, all, w, cfg), ref_block(f, all, w, cfg)) <= 1e-5);
    }
}

TEST_CASE("msvt: partial masks attend only in touched windows") {
    oracle::Rng rng(62);
    for (int trial = 0; trial < 10; ++trial) {
        MsvtConfig cfg;
        cfg.window_size = rng.integer(2, 6);
        cfg.heads = trial % 2 == 0 ? 1 : 2;
        const MsvtWeights w = MsvtWeights::random(100 + trial, 8, cfg.ffn_expansion);
        const int h = rng.integer(5, 17), wd = rng.integer(5, 17);
        const FeatureMap f = oracle::random_map(rng, h, wd, 8);
        const Mask m = oracle::random_mask(rng, h, wd, 0.03);
        CHECK(oracle::max_abs_diff(msvt_block(f, m, w, cfg), ref_block(f, m, w, cfg)) <= 1e-5);
    }
}

TEST_CASE("msvt: empty mask runs only the feed-forward path") {
    oracle::Rng rng(63);
    const MsvtConfig cfg;
    MsvtWeights w = MsvtWeights::random(7, 8, cfg.ffn_expansion);
    const FeatureMap f = oracle::random_map(rng, 9, 9, 8);
    const FeatureMap out = msvt_block(f, Mask(9, 9), w, cfg);
    // Wrecking the attention weights must not change anything.
    for (auto& v : w.wq) v *= 100;
    for (auto& v : w.wo) v = -v;
    CHECK(msvt_block(f, Mask(9, 9), w, cfg) == out);
    CHECK(oracle::max_abs_diff(out, ref_block(f, Mask(9, 9), w, cfg)) <= 1e-5);
}

TEST_CASE("msvt: stacked blocks apply in order to every frame") {
    oracle::Rng rng(64);
    MsvtConfig cfg;
    cfg.depth = 2;
    const std::vector<MsvtWeights> blocks{MsvtWeights::random(1, 8, 2), MsvtWeights::random(2, 8, 2)};
    const std::vector<FeatureMap> feats{oracle::random_map(rng, 8, 8, 8), oracle::random_map(rng, 8, 8, 8)};
    const std::vector<Mask> masks{oracle::random_mask(rng, 8, 8, 0.1), Mask(8, 8)};
    const auto out = msvt_apply(feats, masks, blocks, cfg);
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const FeatureMap expect = ref_block(ref_block(feats[i], masks[i], blocks[0], cfg), masks[i], blocks[1], cfg);
        CHECK(oracle::max_abs_diff(out[i], expect) <= 1e-5);
    }
    CHECK_THROWS_AS(msvt_apply(feats, masks, {blocks[0]}, cfg), ShapeError);
    CHECK_THROWS_AS(msvt_apply(feats, {masks[0]}, blocks, cfg), ShapeError);
}

TEST_CASE("msvt: attended token counts") {
    MsvtConfig cfg;
    cfg.window_size = 8;
    CHECK(count_attended_tokens(Mask(16, 16), cfg) == 0);
    CHECK(count_attended_tokens(Mask(16, 16, 1), cfg) == 256);
    Mask one(16, 16);
    one.set(9, 3, true);
    CHECK(count_attended_tokens(one, cfg) == 64);
    // Partial edge windows count only their real positions.
    Mask edge(10, 10);
    edge.set(9, 9, true);
    CHECK(count_attended_tokens(edge, cfg) == 4);
    oracle::Rng rng(65);
    for (int trial = 0; trial < 30; ++trial) {
        cfg.window_size = rng.integer(1, 9);
        const Mask m = oracle::random_mask(rng, rng.integer(1, 40), rng.integer(1, 40), rng.uniform(0, 0.05));
        CHECK(count_attended_tokens(m, cfg) == oracle::attended_positions(m, cfg.window_size));
    }
    CHECK(count_attended_tokens(std::vector<Mask>{one, one, Mask(16, 16)}, MsvtConfig{}) == 128);
}

TEST_CASE("msvt: weights round trip through a bundle") {
    const MsvtWeights w = MsvtWeights::random(3, 8, 2);
    TensorBundle b;
    w.to_bundle(b, "msvt.0");
    const auto path = std::filesystem::temp_directory_path() / "vinpaint_msvt_test.bin";
    b.save(path);
    const MsvtWeights back = MsvtWeights::from_bundle(TensorBundle::load(path), "msvt.0", 8, 2);
    std::filesystem::remove(path);
    // Random weights are float-representable, so the float32 file is lossless.
    CHECK(back.wq == w.wq);
    CHECK(back.w2 == w.w2);
    CHECK(back.norm1_scale == w.norm1_scale);
    oracle::Rng rng(66);
    const FeatureMap f = oracle::random_map(rng, 8, 8, 8);
    const Mask m = oracle::random_mask(rng, 8, 8, 0.2);
    CHECK(msvt_block(f, m, back, MsvtConfig{}) == msvt_block(f, m, w, MsvtConfig{}));
    CHECK_THROWS_AS(MsvtWeights::from_bundle(b, "msvt.0", 8, 3), TensorFormatError);
}

TEST_CASE("msvt: configuration and shape errors") {
    MsvtConfig bad;
    bad.window_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    MsvtConfig heads;
    heads.heads = 3;
    const MsvtWeights w = MsvtWeights::zeros(8, 2);
    CHECK_THROWS_AS(msvt_block(FeatureMap(4, 4, 8), Mask(4, 4), w, heads), ShapeError);
    CHECK_THROWS_AS(msvt_block(FeatureMap(4, 4, 6), Mask(4, 4), w, MsvtConfig{}), ShapeError);
    CHECK_THROWS_AS(msvt_block(FeatureMap(4, 4, 8), Mask(4, 5), w, MsvtConfig{}), ShapeError);
}
