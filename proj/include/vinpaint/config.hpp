#pragma once

#include "vinpaint/msvt.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

namespace vinpaint {

enum class InpaintMode { Classical, Neural };

InpaintMode parse_mode(const std::string& text);
std::string to_string(InpaintMode mode);

struct SceneConfig {
    double scale_factor = 0.7;   // processing resolution relative to the input
    int dilation_radius = 4;     // square structuring element, processing pixels
    int neighbor_count = 18;     // local window per output frame
    int ref_stride = 20;         // global references at 0, stride, 2 * stride, ...
    double eps_flow = 0.5;       // forward-backward consistency threshold, pixels
    InpaintMode mode = InpaintMode::Classical;
    std::optional<std::filesystem::path> weights_path;
    std::size_t resident_budget = 0;  // 0 selects residency_bound()
    int reference_fill_count = 4;     // nearest references tried for leftover holes
    MsvtConfig msvt;

    void validate() const;
};

}  // namespace vinpaint
