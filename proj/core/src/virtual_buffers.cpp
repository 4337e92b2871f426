#include "mcast/virtual_buffers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mcast {

VirtualBufferSet::VirtualBufferSet(std::size_t count) : levels_(count, 0.0) {
    if (count == 0) throw std::invalid_argument("an SMG keeps at least one virtual buffer");
}

VirtualBufferSet::VirtualBufferSet(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("an SMG keeps at least one virtual buffer");
    if (!valid()) throw std::invalid_argument("virtual buffer levels must be nonnegative");
}

void VirtualBufferSet::advance(std::span<const int> buffered_counts, double slot_seconds, double segment_seconds) {
    if (buffered_counts.size() != levels_.size())
        throw std::invalid_argument("one buffered count per virtual buffer is required");
    levels_[0] = std::max(levels_[0] - slot_seconds + segment_seconds * buffered_counts[0], 0.0);
    for (std::size_t f = 1; f < levels_.size(); ++f) levels_[f] += segment_seconds * buffered_counts[f];
    swiped_this_slot_ = false;
}

void VirtualBufferSet::apply_swipe(bool swiped) {
    if (!swiped) return;
    if (swiped_this_slot_) throw std::logic_error("at most one swipe per SMG per slot");
    swiped_this_slot_ = true;
    shift();
}

void VirtualBufferSet::video_transition() { shift(); }

void VirtualBufferSet::shift() {
    std::rotate(levels_.begin(), levels_.begin() + 1, levels_.end());
    levels_.back() = 0.0;
}

double VirtualBufferSet::total() const { return std::accumulate(levels_.begin(), levels_.end(), 0.0); }

bool VirtualBufferSet::valid() const {
    return std::all_of(levels_.begin(), levels_.end(), [](double q) { return q >= 0.0; });
}

}  // namespace mcast
