#pragma once

#include "vinpaint/config.hpp"
#include "vinpaint/flow.hpp"
#include "vinpaint/msvt.hpp"
#include "vinpaint/preprocess.hpp"
#include "vinpaint/propagation.hpp"
#include "vinpaint/residency.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace vinpaint {

/// Every learned parameter the neural mode needs, stored in one tensor file
/// under the prefixes "flow", "prop", "codec" and "msvt.<block>".
struct NeuralWeights {
    FlowCompletionWeights flow;
    FeaturePropagationWeights prop;
    ImageCodecWeights codec;
    std::vector<MsvtWeights> msvt;

    static NeuralWeights random(std::uint64_t seed, const MsvtConfig& cfg);
    static NeuralWeights from_bundle(const TensorBundle& bundle, const MsvtConfig& cfg);
    static NeuralWeights load(const std::filesystem::path& path, const MsvtConfig& cfg);
    TensorBundle to_bundle() const;
};

/// Per-channel harmonic fill of the hole; throws if the hole is the whole frame.
Frame residual_fill(const Frame& frame, const Mask& mask);

/// Fills hole pixels of `frame` from a distant reference frame using flows
/// estimated directly between the two; returns the number of pixels filled.
std::size_t fill_from_reference(Frame& frame, Mask& hole, const SceneFrame& reference, double eps);

struct StageTimings {
    double load_ms = 0;
    double flow_ms = 0;
    double completion_ms = 0;
    double propagation_ms = 0;
    double reference_ms = 0;
    double neural_ms = 0;
    double residual_ms = 0;
    double output_ms = 0;
};

struct RunStats {
    StageTimings timings;
    std::size_t frames = 0;
    std::size_t frames_inpainted = 0;  // frames that had a non-empty hole
    std::size_t peak_resident_frames = 0;
    std::size_t residency_bound = 0;
    std::size_t frame_loads = 0;
    std::size_t flow_estimations = 0;
    std::size_t flow_completions = 0;
    std::size_t attended_tokens = 0;
    std::size_t total_tokens = 0;

    double attended_token_ratio() const {
        return total_tokens == 0 ? 0.0 : static_cast<double>(attended_tokens) / static_cast<double>(total_tokens);
    }
};

nlohmann::json to_json(const RunStats& stats);

/// Test hook: exact flows between frames t and t+1.
using FlowProvider = std::function<FlowPair(std::size_t t)>;

/// Streams a preprocessed scene through flow completion, propagation and
/// filling, one output frame at a time, under the residency budget.
class SceneInpainter {
public:
    using Emit = std::function<void(std::size_t index, const Frame& inpainted)>;

    explicit SceneInpainter(SceneConfig cfg, const NeuralWeights* weights = nullptr, FlowProvider flows = {});

    RunStats run(const FrameSource& source, const Emit& emit, ResidencyMeter& meter) const;

private:
    SceneConfig cfg_;
    const NeuralWeights* weights_;
    FlowProvider flows_;
};

/// In-memory convenience over SceneInpainter: returns one inpainted frame per
/// input, at processing resolution.
std::vector<Frame> inpaint_sequence(const std::vector<SceneFrame>& seq, const SceneConfig& cfg,
                                    RunStats* stats = nullptr, const NeuralWeights* weights = nullptr,
                                    FlowProvider flows = {});

struct RunOptions {
    std::filesystem::path frames_dir;
    std::filesystem::path masks_dir;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> report_path;
    SceneConfig cfg;
};

/// Loads a scene from disk, inpaints it and writes `<out_dir>/<name>.png`
/// per input frame plus an optional JSON run report.
RunStats run_inpaint(const RunOptions& options);

}  // namespace vinpaint
