#include "vinpaint/harmonic.hpp"

#include "vinpaint/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace vinpaint {

namespace {

constexpr int kDirect = 8;  // hole extent at or below which no coarse guess is built

struct HoleExtent {
    int rows = 0;
    int cols = 0;
};

HoleExtent extent_of(const Mask& hole) {
    int y0 = hole.height(), y1 = -1, x0 = hole.width(), x1 = -1;
    for (int y = 0; y < hole.height(); ++y) {
        for (int x = 0; x < hole.width(); ++x) {
            if (!hole.at(y, x)) continue;
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
        }
    }
    return y1 < 0 ? HoleExtent{} : HoleExtent{y1 - y0 + 1, x1 - x0 + 1};
}

void mean_boundary_guess(FeatureMap& field, const Mask& hole) {
    const int c = field.channels();
    std::vector<double> sum(c, 0.0);
    std::size_t n = 0;
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            if (hole.at(y, x)) continue;
            const auto p = field.pixel(y, x);
            for (int k = 0; k < c; ++k) sum[k] += p[k];
            ++n;
        }
    }
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            if (!hole.at(y, x)) continue;
            auto p = field.pixel(y, x);
            for (int k = 0; k < c; ++k) p[k] = sum[k] / static_cast<double>(n);
        }
    }
}

HarmonicStats relax(FeatureMap& field, const Mask& hole, const HarmonicOptions& options);

// Solve a half-resolution problem and interpolate it into the hole as the
// starting point for relaxation.
void coarse_guess(FeatureMap& field, const Mask& hole, const HarmonicOptions& options) {
    const int h = field.height();
    const int w = field.width();
    const int c = field.channels();
    const int ch = (h + 1) / 2;
    const int cw = (w + 1) / 2;
    FeatureMap coarse(ch, cw, c);
    Mask coarse_hole(ch, cw, 1);
    for (int cy = 0; cy < ch; ++cy) {
        for (int cx = 0; cx < cw; ++cx) {
            int known = 0;
            auto dst = coarse.pixel(cy, cx);
            for (int y = 2 * cy; y < std::min(2 * cy + 2, h); ++y) {
                for (int x = 2 * cx; x < std::min(2 * cx + 2, w); ++x) {
                    if (hole.at(y, x)) continue;
                    const auto p = field.pixel(y, x);
                    for (int k = 0; k < c; ++k) dst[k] += p[k];
                    ++known;
                }
            }
            if (known > 0) {
                for (int k = 0; k < c; ++k) dst[k] /= known;
                coarse_hole.set(cy, cx, false);
            }
        }
    }
    if (!coarse_hole.none()) relax(coarse, coarse_hole, options);

    std::vector<double> sample(c);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!hole.at(y, x)) continue;
            bilinear_sample(coarse, (y - 0.5) / 2.0, (x - 0.5) / 2.0, sample);
            std::copy(sample.begin(), sample.end(), field.pixel(y, x).begin());
        }
    }
}

HarmonicStats relax(FeatureMap& field, const Mask& hole, const HarmonicOptions& options) {
    const HoleExtent ext = extent_of(hole);
    const int span = std::max(ext.rows, ext.cols);
    if (span > kDirect && field.height() >= 4 && field.width() >= 4) {
        coarse_guess(field, hole, options);
    } else {
        mean_boundary_guess(field, hole);
    }

    const double omega = std::min(1.95, 2.0 / (1.0 + std::sin(std::numbers::pi / (span + 1))));
    const int h = field.height();
    const int w = field.width();
    const int c = field.channels();

    std::vector<int> cells;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (hole.at(y, x)) cells.push_back(y * w + x);
        }
    }

    HarmonicStats stats;
    std::vector<double> avg(c);
    for (stats.sweeps = 1; stats.sweeps <= options.max_sweeps; ++stats.sweeps) {
        double worst = 0.0;
        for (const int cell : cells) {
            const int y = cell / w;
            const int x = cell % w;
            std::fill(avg.begin(), avg.end(), 0.0);
            int n = 0;
            auto accumulate = [&](int yy, int xx) {
                const auto p = field.pixel(yy, xx);
                for (int k = 0; k < c; ++k) avg[k] += p[k];
                ++n;
            };
            if (y > 0) accumulate(y - 1, x);
            if (y + 1 < h) accumulate(y + 1, x);
            if (x > 0) accumulate(y, x - 1);
            if (x + 1 < w) accumulate(y, x + 1);
            auto p = field.pixel(y, x);
            for (int k = 0; k < c; ++k) {
                const double r = avg[k] / n - p[k];
                p[k] += omega * r;
                worst = std::max(worst, std::abs(r));
            }
        }
        stats.final_residual = worst;
        if (worst < options.tolerance) break;
    }
    stats.sweeps = std::min(stats.sweeps, options.max_sweeps);
    return stats;
}

}  // namespace

HarmonicStats harmonic_fill(FeatureMap& field, const Mask& hole, const HarmonicOptions& options) {
    if (!hole.same_dims(field.height(), field.width())) throw ShapeError("harmonic_fill: mask dims differ from field");
    if (hole.none()) return {};
    if (hole.all()) throw std::invalid_argument("harmonic_fill: hole covers the whole frame, no boundary data");

    const int h = field.height();
    const int w = field.width();
    const int c = field.channels();
    std::vector<double> lo(c, std::numeric_limits<double>::infinity());
    std::vector<double> hi(c, -std::numeric_limits<double>::infinity());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (hole.at(y, x)) continue;
            const bool touches = (y > 0 && hole.at(y - 1, x)) || (y + 1 < h && hole.at(y + 1, x)) ||
                                 (x > 0 && hole.at(y, x - 1)) || (x + 1 < w && hole.at(y, x + 1));
            if (!touches) continue;
            const auto p = field.pixel(y, x);
            for (int k = 0; k < c; ++k) {
                lo[k] = std::min(lo[k], p[k]);
                hi[k] = std::max(hi[k], p[k]);
            }
        }
    }

    const HarmonicStats stats = relax(field, hole, options);

    // The exact solution obeys the maximum principle; clip relaxation overshoot.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!hole.at(y, x)) continue;
            auto p = field.pixel(y, x);
            for (int k = 0; k < c; ++k) p[k] = std::clamp(p[k], lo[k], hi[k]);
        }
    }
    return stats;
}

}  // namespace vinpaint
