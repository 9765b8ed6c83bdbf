#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcfusion/geometry.hpp"
#include "rcfusion/simulator.hpp"

namespace rcfusion {

/// One reported track position at one frame, as written to the track log.
struct TrackSnapshot {
    std::int64_t id = 0;
    Point2 position;
    std::optional<std::string> category;
};

struct TrackFrame {
    double t = 0.0;
    std::vector<TrackSnapshot> tracks;
};

using TrackLog = std::vector<TrackFrame>;

struct CategoryReport {
    std::size_t gt_total = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;  // false tracks whose own label is this category
    std::size_t idsw = 0;
    std::size_t matched = 0;
    double motp = 0.0;  // mean matched distance, meters
};

/// Per-frame accounting kept for error plots and CSV export.
struct FrameAccount {
    double t = 0.0;
    std::size_t gt = 0;
    std::size_t matched = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t idsw = 0;
    double mean_distance = 0.0;  // over this frame's matches, 0 when none
};

struct ClearReport {
    std::size_t frames = 0;
    std::size_t gt_total = 0;
    std::size_t matched = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t idsw = 0;
    double fpr = 0.0;
    double fnr = 0.0;
    double idswr = 0.0;
    double mota = 0.0;        // 1 - fnr - fpr - idswr, exactly
    double motp = 0.0;        // sum of matched distances / matched count
    double motp_paper = 0.0;  // sum of matched distances / gt_total
    std::map<std::string, CategoryReport> per_category;
    std::vector<FrameAccount> frame_accounts;
};

/// CLEAR-MOT over aligned logs: carry over still-valid pairings, match the
/// rest by Hungarian with distances above the threshold infeasible, count
/// FP/FN/IDSW, and aggregate MOTA/MOTP. Both logs must cover the same frame
/// timestamps (FrameMismatch otherwise).
ClearReport clear_mot(const GroundTruth& gt, const TrackLog& tracks, double dist_threshold);

}  // namespace rcfusion
