#include "vinpaint/residency.hpp"

#include <algorithm>

namespace vinpaint {

ChunkPlan plan_chunks(int n, const SceneConfig& cfg) {
    if (n < 1) throw std::invalid_argument("plan_chunks: need at least one frame");
    if (cfg.neighbor_count < 1 || cfg.ref_stride < 1) throw std::invalid_argument("plan_chunks: invalid config");
    ChunkPlan plan;
    for (int r = 0; r < n; r += cfg.ref_stride) plan.reference_set.push_back(r);

    const int span = std::min(n, cfg.neighbor_count);
    plan.frames.reserve(n);
    for (int t = 0; t < n; ++t) {
        const int start = std::clamp(t - span / 2, 0, n - span);
        ChunkEntry e;
        for (int i = start; i < start + span; ++i) e.locals.push_back(i);
        for (int r : plan.reference_set) {
            if (r < start || r >= start + span) e.references.push_back(r);
        }
        plan.frames.push_back(std::move(e));
    }
    return plan;
}

std::size_t residency_bound(int n, const SceneConfig& cfg) {
    const std::size_t refs = (static_cast<std::size_t>(n) + cfg.ref_stride - 1) / cfg.ref_stride;
    return static_cast<std::size_t>(cfg.neighbor_count) + refs + 2;
}

ResidentSet::ResidentSet(const FrameSource& source, std::size_t budget, ResidencyMeter& meter)
    : source_(source), budget_(budget), meter_(meter) {
    if (budget == 0) throw ResidencyError("resident budget must be at least one frame");
}

ResidentSet::~ResidentSet() { meter_.remove(frames_.size()); }

void ResidentSet::evict(int index) {
    frames_.erase(index);
    recency_.remove(index);
    meter_.remove();
}

void ResidentSet::begin_chunk(const std::vector<int>& needed) {
    pinned_ = needed;
    std::sort(pinned_.begin(), pinned_.end());
    std::vector<int> drop;
    for (const auto& [index, frame] : frames_) {
        if (!std::binary_search(pinned_.begin(), pinned_.end(), index)) drop.push_back(index);
    }
    for (int index : drop) evict(index);
}

const SceneFrame& ResidentSet::get(int index) {
    auto it = frames_.find(index);
    if (it != frames_.end()) {
        recency_.remove(index);
        recency_.push_back(index);
        return it->second;
    }
    if (frames_.size() >= budget_) {
        auto victim = std::find_if(recency_.begin(), recency_.end(),
                                   [&](int i) { return !std::binary_search(pinned_.begin(), pinned_.end(), i); });
        if (victim == recency_.end()) {
            throw ResidencyError("resident budget of " + std::to_string(budget_) +
                                 " frames is too small for the active chunk");
        }
        evict(*victim);
    }
    SceneFrame frame = source_.load(static_cast<std::size_t>(index));
    ++loads_;
    meter_.add();
    recency_.push_back(index);
    return frames_.emplace(index, std::move(frame)).first->second;
}

}  // namespace vinpaint
