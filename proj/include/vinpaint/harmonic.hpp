#pragma once

#include "vinpaint/feature_map.hpp"

namespace vinpaint {

struct HarmonicOptions {
    double tolerance = 1e-5;  // max Gauss-Seidel correction per sweep
    int max_sweeps = 10000;
};

struct HarmonicStats {
    int sweeps = 0;
    double final_residual = 0.0;
};

/// Replaces every channel of `field` inside `hole` by the solution of the
/// discrete Laplace equation whose Dirichlet data are the known pixels.
/// Frame borders act as reflecting (zero-flux) boundaries. Known pixels are
/// left untouched. Throws std::invalid_argument if `hole` covers every pixel.
HarmonicStats harmonic_fill(FeatureMap& field, const Mask& hole, const HarmonicOptions& options = {});

}  // namespace vinpaint
