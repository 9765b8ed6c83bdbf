#pragma once

#include <string>

#include "rcfusion/metrics.hpp"
#include "rcfusion/simulator.hpp"

namespace rcfusion {

/// Renders ground-plane trajectories as a standalone SVG document: one solid
/// polyline per track id, one dashed polyline per ground-truth object, plus
/// axes with metric ticks. Both inputs may be empty (axes-only plot).
std::string render_tracks_svg(const TrackLog& tracks, const GroundTruth& truth);

}  // namespace rcfusion
