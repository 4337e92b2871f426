#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mcast {

/// DT-managed virtual buffers of one SMG, in seconds of playable video.
///
/// Level f holds content for the video f positions ahead of the one the SMG
/// is watching; level 0 is the current video. An SMG with index g (1-based)
/// out of G keeps G - g + 1 levels.
class VirtualBufferSet {
public:
    VirtualBufferSet() = default;
    explicit VirtualBufferSet(std::size_t count);
    explicit VirtualBufferSet(std::vector<double> levels);

    /// Slot update. `buffered_counts[f]` is |Omega_{g+f}|, the number of
    /// segments planned this slot for the SMG f positions ahead. Starts a new
    /// slot for the one-swipe-per-slot rule.
    void advance(std::span<const int> buffered_counts, double slot_seconds, double segment_seconds);

    /// Shift-and-zero when `swiped`; identity otherwise. Throws
    /// std::logic_error on a second swipe within the same slot.
    void apply_swipe(bool swiped);

    /// The SMG finished its video by playback: same shift as a swipe.
    void video_transition();

    [[nodiscard]] double current() const { return levels_.empty() ? 0.0 : levels_.front(); }
    /// Sum over all levels.
    [[nodiscard]] double total() const;
    [[nodiscard]] std::span<const double> levels() const { return levels_; }
    [[nodiscard]] std::size_t size() const { return levels_.size(); }

    [[nodiscard]] bool valid() const;

private:
    void shift();

    std::vector<double> levels_;
    bool swiped_this_slot_ = false;
};

}  // namespace mcast
