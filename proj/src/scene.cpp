#include "vinpaint/scene.hpp"

#include "vinpaint/image_io.hpp"

#include <algorithm>

namespace vinpaint {

namespace fs = std::filesystem;

std::vector<fs::path> list_png_files(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw SceneError(SceneErrorKind::MissingDirectory, "not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

SceneListing list_scene(const fs::path& frames_dir, const fs::path& masks_dir) {
    SceneListing listing;
    listing.frames = list_png_files(frames_dir);
    listing.masks = list_png_files(masks_dir);
    if (listing.frames.empty()) throw SceneError(SceneErrorKind::Empty, "no PNG frames in " + frames_dir.string());
    if (listing.frames.size() != listing.masks.size()) {
        throw SceneError(SceneErrorKind::CountMismatch, std::to_string(listing.frames.size()) + " frames but " +
                                                            std::to_string(listing.masks.size()) + " masks");
    }
    try {
        const Image8 first = read_png(listing.frames.front(), 3);
        listing.height = first.height;
        listing.width = first.width;
    } catch (const ImageIoError& e) {
        throw SceneError(SceneErrorKind::Unreadable, e.what());
    }
    return listing;
}

SceneFrame load_scene_frame(const SceneListing& listing, std::size_t index) {
    Image8 rgb, gray;
    try {
        rgb = read_png(listing.frames.at(index), 3);
        gray = read_png(listing.masks.at(index), 1);
    } catch (const ImageIoError& e) {
        throw SceneError(SceneErrorKind::Unreadable, e.what());
    }
    if (rgb.height != listing.height || rgb.width != listing.width || gray.height != listing.height ||
        gray.width != listing.width) {
        throw SceneError(SceneErrorKind::DimensionMismatch,
                         "frame " + std::to_string(index) + " dims differ from the first frame (" +
                             std::to_string(listing.width) + "x" + std::to_string(listing.height) + ")");
    }
    return SceneFrame{to_frame(rgb), to_mask(gray)};
}

std::vector<SceneFrame> load_scene(const fs::path& frames_dir, const fs::path& masks_dir) {
    const SceneListing listing = list_scene(frames_dir, masks_dir);
    std::vector<SceneFrame> seq;
    seq.reserve(listing.size());
    for (std::size_t i = 0; i < listing.size(); ++i) seq.push_back(load_scene_frame(listing, i));
    return seq;
}

}  // namespace vinpaint
