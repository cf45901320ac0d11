#pragma once

// Chunk planning and the bounded resident set of decoded frames.

#include "vinpaint/config.hpp"
#include "vinpaint/scene.hpp"

#include <algorithm>
#include <cstddef>
#include <list>
#include <map>
#include <stdexcept>
#include <vector>

namespace vinpaint {

struct ChunkEntry {
    std::vector<int> locals;      // contiguous, ascending, contains the output frame
    std::vector<int> references;  // ascending, disjoint from locals
};

struct ChunkPlan {
    std::vector<ChunkEntry> frames;  // one entry per output frame
    std::vector<int> reference_set;  // 0, stride, 2 * stride, ... < n
};

/// Locals: a window of min(n, neighbor_count) frames centred on t, shifted
/// to stay inside [0, n). References: the global reference set minus locals.
ChunkPlan plan_chunks(int n, const SceneConfig& cfg);

/// neighbor_count + |reference set| + 2.
std::size_t residency_bound(int n, const SceneConfig& cfg);

class ResidencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Counts frames held in memory across every holder and records the peak.
class ResidencyMeter {
public:
    void add(std::size_t n = 1) {
        current_ += n;
        peak_ = std::max(peak_, current_);
    }
    void remove(std::size_t n = 1) { current_ -= n; }
    std::size_t current() const { return current_; }
    std::size_t peak() const { return peak_; }

    /// Holds `n` frames for its lifetime.
    class Hold {
    public:
        Hold(ResidencyMeter& meter, std::size_t n = 1) : meter_(meter), n_(n) { meter_.add(n_); }
        ~Hold() { meter_.remove(n_); }
        Hold(const Hold&) = delete;
        Hold& operator=(const Hold&) = delete;

    private:
        ResidencyMeter& meter_;
        std::size_t n_;
    };

private:
    std::size_t current_ = 0;
    std::size_t peak_ = 0;
};

/// Random access to a scene's processing-resolution frames; the backing
/// store the resident set decodes from.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::size_t size() const = 0;
    virtual SceneFrame load(std::size_t index) const = 0;
};

class VectorSource : public FrameSource {
public:
    explicit VectorSource(const std::vector<SceneFrame>& frames) : frames_(frames) {}
    std::size_t size() const override { return frames_.size(); }
    SceneFrame load(std::size_t index) const override { return frames_.at(index); }

private:
    const std::vector<SceneFrame>& frames_;
};

/// Decoded frames currently in memory, at most `budget` of them. Frames are
/// pinned for the active chunk; loading past the budget evicts the unpinned
/// frame that was least recently needed.
class ResidentSet {
public:
    ResidentSet(const FrameSource& source, std::size_t budget, ResidencyMeter& meter);
    ~ResidentSet();
    ResidentSet(const ResidentSet&) = delete;
    ResidentSet& operator=(const ResidentSet&) = delete;

    /// Starts a chunk: pins `needed` and drops every other resident frame.
    void begin_chunk(const std::vector<int>& needed);
    const SceneFrame& get(int index);

    std::size_t size() const { return frames_.size(); }
    std::size_t loads() const { return loads_; }
    bool resident(int index) const { return frames_.count(index) != 0; }

private:
    void evict(int index);

    const FrameSource& source_;
    std::size_t budget_;
    ResidencyMeter& meter_;
    std::map<int, SceneFrame> frames_;
    std::list<int> recency_;  // front = least recently needed
    std::vector<int> pinned_;
    std::size_t loads_ = 0;
};

}  // namespace vinpaint
