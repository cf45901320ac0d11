#include "vinpaint/pipeline.hpp"

#include "vinpaint/harmonic.hpp"
#include "vinpaint/image_io.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <stdexcept>

namespace vinpaint {

namespace {

class ScopedTimer {
public:
    explicit ScopedTimer(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        sink_ += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

FlowField complete_or_zero(const FlowField& flow, const Mask& hole) {
    if (hole.all()) return FlowField(flow.height(), flow.width());
    return complete_flow_harmonic(flow, hole);
}

std::vector<int> nearest_references(const std::vector<int>& refs, int t, int limit) {
    std::vector<int> sorted = refs;
    std::sort(sorted.begin(), sorted.end(), [t](int a, int b) {
        const int da = std::abs(a - t);
        const int db = std::abs(b - t);
        return da != db ? da < db : a < b;
    });
    if (static_cast<int>(sorted.size()) > limit) sorted.resize(static_cast<std::size_t>(limit));
    return sorted;
}

class DirectorySource : public FrameSource {
public:
    DirectorySource(const SceneListing& listing, const PreprocessRecord& record, const SceneConfig& cfg)
        : listing_(listing), record_(record), cfg_(cfg) {}

    std::size_t size() const override { return listing_.size(); }
    SceneFrame load(std::size_t index) const override {
        return preprocess_frame(load_scene_frame(listing_, index), record_, cfg_);
    }

private:
    const SceneListing& listing_;
    const PreprocessRecord& record_;
    const SceneConfig& cfg_;
};

}  // namespace

NeuralWeights NeuralWeights::random(std::uint64_t seed, const MsvtConfig& cfg) {
    cfg.validate();
    NeuralWeights w;
    w.flow = FlowCompletionWeights::random(seed);
    w.prop = FeaturePropagationWeights::random(seed + 1, ImageCodecWeights::kChannels);
    w.codec = ImageCodecWeights::random(seed + 2);
    for (int i = 0; i < cfg.depth; ++i) {
        w.msvt.push_back(MsvtWeights::random(seed + 10 + static_cast<std::uint64_t>(i), ImageCodecWeights::kChannels,
                                             cfg.ffn_expansion));
    }
    return w;
}

NeuralWeights NeuralWeights::from_bundle(const TensorBundle& bundle, const MsvtConfig& cfg) {
    cfg.validate();
    NeuralWeights w;
    w.flow = FlowCompletionWeights::from_bundle(bundle);
    w.prop = FeaturePropagationWeights::from_bundle(bundle, ImageCodecWeights::kChannels);
    w.codec = ImageCodecWeights::from_bundle(bundle);
    for (int i = 0; i < cfg.depth; ++i) {
        w.msvt.push_back(MsvtWeights::from_bundle(bundle, "msvt." + std::to_string(i), ImageCodecWeights::kChannels,
                                                  cfg.ffn_expansion));
        w.msvt.back().validate(cfg);
    }
    return w;
}

NeuralWeights NeuralWeights::load(const std::filesystem::path& path, const MsvtConfig& cfg) {
    return from_bundle(TensorBundle::load(path), cfg);
}

TensorBundle NeuralWeights::to_bundle() const {
    TensorBundle b;
    flow.to_bundle(b);
    prop.to_bundle(b);
    codec.to_bundle(b);
    for (std::size_t i = 0; i < msvt.size(); ++i) msvt[i].to_bundle(b, "msvt." + std::to_string(i));
    return b;
}

Frame residual_fill(const Frame& frame, const Mask& mask) {
    Frame out = frame;
    harmonic_fill(out, mask);
    return out;
}

std::size_t fill_from_reference(Frame& frame, Mask& hole, const SceneFrame& reference, double eps) {
    if (hole.none() || hole.all() || reference.mask.all()) return 0;
    const FlowPair raw = estimate_flow_pair(frame, reference.frame, {}, &hole, &reference.mask);
    const FlowPair pair{complete_flow_harmonic(raw.forward, hole), complete_flow_harmonic(raw.backward, reference.mask)};
    const Mask reliable = compute_reliable_area(pair, reference.mask.inverted(), eps);
    std::size_t filled = 0;
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            if (!hole.at(y, x) || !reliable.at(y, x)) continue;
            bilinear_sample(reference.frame, y + pair.forward.v(y, x), x + pair.forward.u(y, x), frame.pixel(y, x));
            hole.set(y, x, false);
            ++filled;
        }
    }
    return filled;
}

nlohmann::json to_json(const RunStats& s) {
    return {
        {"frames", s.frames},
        {"frames_inpainted", s.frames_inpainted},
        {"peak_resident_frames", s.peak_resident_frames},
        {"residency_bound", s.residency_bound},
        {"frame_loads", s.frame_loads},
        {"flow_estimations", s.flow_estimations},
        {"flow_completions", s.flow_completions},
        {"attended_tokens", s.attended_tokens},
        {"total_tokens", s.total_tokens},
        {"attended_token_ratio", s.attended_token_ratio()},
        {"stage_ms",
         {{"load", s.timings.load_ms},
          {"flow", s.timings.flow_ms},
          {"completion", s.timings.completion_ms},
          {"propagation", s.timings.propagation_ms},
          {"reference_fill", s.timings.reference_ms},
          {"neural", s.timings.neural_ms},
          {"residual_fill", s.timings.residual_ms},
          {"output", s.timings.output_ms}}},
    };
}

SceneInpainter::SceneInpainter(SceneConfig cfg, const NeuralWeights* weights, FlowProvider flows)
    : cfg_(std::move(cfg)), weights_(weights), flows_(std::move(flows)) {
    cfg_.validate();
    if (cfg_.mode == InpaintMode::Neural && weights_ == nullptr) {
        throw std::invalid_argument("neural mode needs loaded weights");
    }
}

RunStats SceneInpainter::run(const FrameSource& source, const Emit& emit, ResidencyMeter& meter) const {
    RunStats stats;
    const int n = static_cast<int>(source.size());
    stats.frames = source.size();
    if (n == 0) return stats;

    const ChunkPlan plan = plan_chunks(n, cfg_);
    stats.residency_bound = residency_bound(n, cfg_);
    const std::size_t budget = cfg_.resident_budget != 0 ? cfg_.resident_budget : stats.residency_bound;
    std::map<int, FlowPair> raw_flows;
    std::map<int, FlowPair> completed_flows;
    int recurrent_first = -1;  // window start of the cached recurrent completion
    std::vector<FlowPair> recurrent_flows;

    {
        ResidentSet resident(source, budget, meter);
        for (int t = 0; t < n; ++t) {
            const ChunkEntry& entry = plan.frames[static_cast<std::size_t>(t)];
            std::vector<int> needed = entry.locals;
            needed.insert(needed.end(), entry.references.begin(), entry.references.end());
            resident.begin_chunk(needed);

            const SceneFrame* current = nullptr;
            {
                ScopedTimer timer(stats.timings.load_ms);
                current = &resident.get(t);
            }
            const Mask coarse = downsample_mask(current->mask, 8);
            stats.attended_tokens += count_attended_tokens(coarse, cfg_.msvt);
            stats.total_tokens += coarse.pixels();

            if (current->mask.none()) {
                ScopedTimer timer(stats.timings.output_ms);
                emit(static_cast<std::size_t>(t), current->frame);
                continue;
            }
            ++stats.frames_inpainted;

            const int first = entry.locals.front();
            const int last = entry.locals.back();
            PropagationState state;
            {
                ScopedTimer timer(stats.timings.load_ms);
                for (int i : entry.locals) {
                    const SceneFrame& f = resident.get(i);
                    state.frames.push_back(f.frame);
                    state.masks.push_back(f.mask);
                }
            }
            std::erase_if(raw_flows, [&](const auto& kv) { return kv.first < first || kv.first >= last; });
            std::erase_if(completed_flows, [&](const auto& kv) { return kv.first < first || kv.first >= last; });

            std::vector<FlowPair> raw;
            {
                ScopedTimer timer(stats.timings.flow_ms);
                for (int i = first; i < last; ++i) {
                    auto it = raw_flows.find(i);
                    if (it == raw_flows.end()) {
                        const auto a = static_cast<std::size_t>(i - first);
                        FlowPair pair = flows_ ? flows_(static_cast<std::size_t>(i))
                                               : estimate_flow_pair(state.frames[a], state.frames[a + 1], {},
                                                                    &state.masks[a], &state.masks[a + 1]);
                        if (!flows_) ++stats.flow_estimations;
                        it = raw_flows.emplace(i, std::move(pair)).first;
                    }
                    raw.push_back(it->second);
                }
            }

            std::vector<FlowPair> completed;
            {
                ScopedTimer timer(stats.timings.completion_ms);
                if (cfg_.mode == InpaintMode::Neural) {
                    if (!raw.empty() && recurrent_first != first) {
                        recurrent_flows = complete_flow_recurrent(raw, state.masks, weights_->flow);
                        recurrent_first = first;
                        ++stats.flow_completions;
                    }
                    if (!raw.empty()) completed = recurrent_flows;
                } else {
                    for (int i = first; i < last; ++i) {
                        auto it = completed_flows.find(i);
                        if (it == completed_flows.end()) {
                            const auto k = static_cast<std::size_t>(i - first);
                            FlowPair done{complete_or_zero(raw[k].forward, state.masks[k]),
                                          complete_or_zero(raw[k].backward, state.masks[k + 1])};
                            ++stats.flow_completions;
                            it = completed_flows.emplace(i, std::move(done)).first;
                        }
                        completed.push_back(it->second);
                    }
                }
            }

            {
                ScopedTimer timer(stats.timings.propagation_ms);
                state = propagate_image(state, completed, cfg_.eps_flow);
            }
            const auto local = static_cast<std::size_t>(t - first);
            Frame out = state.frames[local];
            Mask hole = state.masks[local];

            if (!hole.none() && !entry.references.empty()) {
                ScopedTimer timer(stats.timings.reference_ms);
                for (int r : nearest_references(entry.references, t, cfg_.reference_fill_count)) {
                    if (hole.none()) break;
                    fill_from_reference(out, hole, resident.get(r), cfg_.eps_flow);
                }
            }

            if (cfg_.mode == InpaintMode::Neural && !hole.none()) {
                ScopedTimer timer(stats.timings.neural_ms);
                state.frames[local] = out;
                state.masks[local] = hole;
                for (std::size_t i = 0; i < state.frames.size(); ++i) {
                    state.features.push_back(encode_image(state.frames[i], state.masks[i], weights_->codec));
                }
                const PropagationState features = propagate_features(state, completed, state.masks, weights_->prop);
                const auto refined = msvt_apply({features.features[local]}, {downsample_mask(hole, 8)}, weights_->msvt,
                                                cfg_.msvt);
                const Frame decoded = decode_features(refined.front(), out.height(), out.width(), weights_->codec);
                for (int y = 0; y < out.height(); ++y) {
                    for (int x = 0; x < out.width(); ++x) {
                        if (!hole.at(y, x)) continue;
                        const auto p = decoded.pixel(y, x);
                        std::copy(p.begin(), p.end(), out.pixel(y, x).begin());
                        hole.set(y, x, false);
                    }
                }
            }

            if (!hole.none()) {
                ScopedTimer timer(stats.timings.residual_ms);
                out = residual_fill(out, hole);
            }

            ScopedTimer timer(stats.timings.output_ms);
            emit(static_cast<std::size_t>(t), out);
        }
        stats.frame_loads = resident.loads();
    }
    stats.peak_resident_frames = meter.peak();
    return stats;
}

std::vector<Frame> inpaint_sequence(const std::vector<SceneFrame>& seq, const SceneConfig& cfg, RunStats* stats,
                                    const NeuralWeights* weights, FlowProvider flows) {
    SceneInpainter inpainter(cfg, weights, std::move(flows));
    VectorSource source(seq);
    ResidencyMeter meter;
    std::vector<Frame> out(seq.size());
    const RunStats s = inpainter.run(source, [&](std::size_t i, const Frame& f) { out[i] = f; }, meter);
    if (stats) *stats = s;
    return out;
}

RunStats run_inpaint(const RunOptions& options) {
    const SceneConfig& cfg = options.cfg;
    cfg.validate();
    std::optional<NeuralWeights> weights;
    if (cfg.mode == InpaintMode::Neural) {
        if (!cfg.weights_path) throw std::invalid_argument("neural mode needs --weights");
        weights = NeuralWeights::load(*cfg.weights_path, cfg.msvt);
    }

    const SceneListing listing = list_scene(options.frames_dir, options.masks_dir);
    const PreprocessRecord record = make_preprocess_record(listing.height, listing.width, cfg);
    const DirectorySource source(listing, record, cfg);
    std::filesystem::create_directories(options.out_dir);

    ResidencyMeter meter;
    const SceneInpainter inpainter(cfg, weights ? &*weights : nullptr);
    auto emit = [&](std::size_t index, const Frame& inpainted) {
        const ResidencyMeter::Hold hold(meter);
        const SceneFrame original = load_scene_frame(listing, index);
        const Frame out = postprocess_frame(inpainted, original.frame, original.mask, record);
        write_png(options.out_dir / listing.frames[index].filename(), to_image8(out));
    };
    RunStats stats = inpainter.run(source, emit, meter);

    if (options.report_path) {
        nlohmann::json report = to_json(stats);
        report["mode"] = to_string(cfg.mode);
        report["input_size"] = {listing.width, listing.height};
        report["processing_size"] = {record.padded_width, record.padded_height};
        report["config"] = {{"scale", cfg.scale_factor},
                            {"dilate", cfg.dilation_radius},
                            {"neighbors", cfg.neighbor_count},
                            {"ref_stride", cfg.ref_stride},
                            {"eps_flow", cfg.eps_flow}};
        std::ofstream out(*options.report_path);
        if (!out) throw std::runtime_error("cannot write report " + options.report_path->string());
        out << report.dump(2) << '\n';
    }
    return stats;
}

}  // namespace vinpaint
