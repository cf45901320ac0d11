#include "oracles.hpp"

#include "vinpaint/harmonic.hpp"

#include <doctest.h>

#include <limits>

using namespace vinpaint;

namespace {

// Per-channel min/max over known pixels 4-adjacent to the hole.
std::pair<std::vector<double>, std::vector<double>> boundary_range(const FeatureMap& f, const Mask& hole) {
    std::vector<double> lo(f.channels(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(f.channels(), -std::numeric_limits<double>::infinity());
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            if (hole.at(y, x)) continue;
            bool touches = false;
            for (auto [dy, dx] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
                const int yy = y + dy, xx = x + dx;
                if (yy >= 0 && yy < f.height() && xx >= 0 && xx < f.width() && hole.at(yy, xx)) touches = true;
            }
            if (!touches) continue;
            for (int c = 0; c < f.channels(); ++c) {
                lo[c] = std::min(lo[c], f.at(y, x, c));
                hi[c] = std::max(hi[c], f.at(y, x, c));
            }
        }
    }
    return {lo, hi};
}

FeatureMap linear_field(int h, int w, double a, double b, double c0) {
    FeatureMap f(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f.at(y, x, 0) = a * y + b * x + c0;
    }
    return f;
}

void scribble(FeatureMap& f, const Mask& hole, double value) {
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            if (hole.at(y, x)) {
                for (int c = 0; c < f.channels(); ++c) f.at(y, x, c) = value;
            }
        }
    }
}

}  // namespace

TEST_CASE("harmonic_fill: empty hole is a no-op, full hole throws") {
    oracle::Rng rng(40);
    FeatureMap f = oracle::random_map(rng, 10, 10, 2);
    const FeatureMap before = f;
    const HarmonicStats s = harmonic_fill(f, Mask(10, 10));
    CHECK(f == before);
    CHECK(s.sweeps == 0);
    CHECK_THROWS_AS(harmonic_fill(f, Mask(10, 10, 1)), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_fill(f, Mask(10, 11)), ShapeError);
}

TEST_CASE("harmonic_fill: constants are restored") {
    FeatureMap f(30, 30, 3, 0.4);
    const Mask hole = oracle::rect_mask(30, 30, 5, 7, 15, 11);
    scribble(f, hole, 9.0);
    harmonic_fill(f, hole);
    CHECK(oracle::max_abs_diff(f, FeatureMap(30, 30, 3, 0.4)) <= 1e-4);
}

TEST_CASE("harmonic_fill: linear fields are restored to the closed form") {
    struct Case {
        int h, w, y0, x0, rh, rw;
        double a, b;
    };
    for (const Case& k : {Case{32, 32, 10, 9, 12, 14, 0.0, 1.0}, Case{40, 30, 4, 4, 30, 20, 0.7, -0.3},
                          Case{64, 64, 8, 8, 48, 48, 1.0, 1.0}}) {
        const FeatureMap truth = linear_field(k.h, k.w, k.a, k.b, 2.0);
        FeatureMap f = truth;
        const Mask hole = oracle::rect_mask(k.h, k.w, k.y0, k.x0, k.rh, k.rw);
        scribble(f, hole, -50);
        const HarmonicStats s = harmonic_fill(f, hole);
        CHECK(oracle::max_abs_diff(f, truth) <= 1e-3);
        CHECK(s.final_residual < 1e-5);
    }
}

TEST_CASE("harmonic_fill: frame border acts as a reflecting boundary") {
    // u = y has zero normal derivative on the left border, so a hole touching
    // that border still recovers it exactly.
    const FeatureMap truth = linear_field(24, 24, 1.0, 0.0, 0.0);
    FeatureMap f = truth;
    const Mask hole = oracle::rect_mask(24, 24, 6, 0, 10, 7);
    scribble(f, hole, 0);
    harmonic_fill(f, hole);
    CHECK(oracle::max_abs_diff(f, truth) <= 1e-3);
}

TEST_CASE("harmonic_fill: maximum principle on random boundary data") {
    oracle::Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int h = rng.integer(8, 28);
        const int w = rng.integer(8, 28);
        FeatureMap f = oracle::random_map(rng, h, w, 2, -5, 5);
        Mask hole = trial % 2 == 0 ? oracle::random_mask(rng, h, w, 0.5)
                                   : oracle::rect_mask(h, w, rng.integer(0, h / 2), rng.integer(0, w / 2),
                                                       rng.integer(2, h), rng.integer(2, w));
        if (hole.all()) hole.set(0, 0, false);
        if (hole.none()) hole.set(h / 2, w / 2, true);
        const FeatureMap before = f;
        const auto [lo, hi] = boundary_range(f, hole);
        harmonic_fill(f, hole);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 2; ++c) {
                    if (hole.at(y, x)) {
                        CHECK(f.at(y, x, c) >= lo[c]);
                        CHECK(f.at(y, x, c) <= hi[c]);
                    } else {
                        CHECK(f.at(y, x, c) == before.at(y, x, c));
                    }
                }
            }
        }
    }
}

TEST_CASE("harmonic_fill: sweep cap is honoured") {
    FeatureMap f = linear_field(40, 40, 1, 1, 0);
    const Mask hole = oracle::rect_mask(40, 40, 5, 5, 30, 30);
    scribble(f, hole, 0);
    HarmonicOptions opts;
    opts.max_sweeps = 3;
    const HarmonicStats s = harmonic_fill(f, hole, opts);
    CHECK(s.sweeps == 3);
}

TEST_CASE("harmonic_fill: deterministic") {
    oracle::Rng rng(42);
    const FeatureMap base = oracle::random_map(rng, 20, 20, 3);
    const Mask hole = oracle::random_mask(rng, 20, 20, 0.4);
    FeatureMap a = base, b = base;
    harmonic_fill(a, hole);
    harmonic_fill(b, hole);
    CHECK(a == b);
}
