#pragma once

#include <set>
#include <string>
#include <vector>

#include "mcast/domain.hpp"
#include "mcast/virtual_buffers.hpp"

namespace mcast {

/// One sub-multicast group as tracked by the digital twin.
struct SmgState {
    int id = 1;                  ///< g, 1-based; index order follows viewing position.
    std::vector<int> users;      ///< K_g
    std::vector<double> gains;   ///< h_{g,k}, parallel to `users`
    VirtualBufferSet buffers;    ///< levels f = 0..G-g
    double last_quality = 0.0;   ///< Q_{g,0}
    double lambda_rebuffer = 0.3;
    double lambda_variation = 0.6;
    SegmentId playhead{};
    double segment_offset_s = 0.0;  ///< playback position inside the playhead segment
    bool finished = false;          ///< played past the end of the catalog
    std::set<SegmentId> buffered;   ///< segments already delivered to this SMG

    [[nodiscard]] std::vector<std::string> violations() const;
};

}  // namespace mcast
