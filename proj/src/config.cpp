#include "vinpaint/config.hpp"

#include <stdexcept>

namespace vinpaint {

InpaintMode parse_mode(const std::string& text) {
    if (text == "classical") return InpaintMode::Classical;
    if (text == "neural") return InpaintMode::Neural;
    throw std::invalid_argument("unknown mode '" + text + "' (expected classical or neural)");
}

std::string to_string(InpaintMode mode) { return mode == InpaintMode::Classical ? "classical" : "neural"; }

void SceneConfig::validate() const {
    if (!(scale_factor > 0.0 && scale_factor <= 1.0)) throw std::invalid_argument("scale factor must lie in (0, 1]");
    if (dilation_radius < 0) throw std::invalid_argument("dilation radius must be >= 0");
    if (neighbor_count < 1) throw std::invalid_argument("neighbor count must be >= 1");
    if (ref_stride < 1) throw std::invalid_argument("reference stride must be >= 1");
    if (!(eps_flow > 0.0)) throw std::invalid_argument("flow consistency eps must be positive");
    if (reference_fill_count < 0) throw std::invalid_argument("reference fill count must be >= 0");
    msvt.validate();
}

}  // namespace vinpaint
