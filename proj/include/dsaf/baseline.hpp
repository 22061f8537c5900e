#pragma once

#include "dsaf/optimizer.hpp"
#include "dsaf/slice_model.hpp"
#include "dsaf/topology.hpp"

namespace dsaf {

/// First Come First Serve, First Available.
///
/// VNFs are placed in chain order, each on the lowest-id hypervisor that has
/// room (CPU/RAM/HDD), has not reached the slice's isolation limit, and whose
/// route from the previous VNF has the bandwidth for the hop. The delay bound
/// is not checked. Nothing is reserved unless every VNF finds a host.
SolveOutcome fcfsfa_allocate(const SliceRequest& request, const Topology& topology,
                             const PathTable& paths);

}  // namespace dsaf
