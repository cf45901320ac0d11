#pragma once

#include "vinpaint/feature_map.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace vinpaint {

enum class SceneErrorKind {
    MissingDirectory,
    Empty,
    CountMismatch,
    DimensionMismatch,
    Unreadable,
};

class SceneError : public std::runtime_error {
public:
    SceneError(SceneErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    SceneErrorKind kind() const { return kind_; }

private:
    SceneErrorKind kind_;
};

struct SceneFrame {
    Frame frame;  // unit-interval RGB
    Mask mask;    // 1 = occluded
};

/// Sorted PNG file lists of a scene plus the dims of its first frame.
struct SceneListing {
    std::vector<std::filesystem::path> frames;
    std::vector<std::filesystem::path> masks;
    int height = 0;
    int width = 0;

    std::size_t size() const { return frames.size(); }
};

/// Sorted `*.png` regular files in `dir`.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

/// Lists `*.png` in both directories (lexicographic order, which is frame
/// order for zero-padded names) and checks that the counts agree.
SceneListing list_scene(const std::filesystem::path& frames_dir, const std::filesystem::path& masks_dir);

/// Decodes one frame and its mask; masks are binarized at 128.
SceneFrame load_scene_frame(const SceneListing& listing, std::size_t index);

std::vector<SceneFrame> load_scene(const std::filesystem::path& frames_dir, const std::filesystem::path& masks_dir);

}  // namespace vinpaint
