#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rcfusion/detection.hpp"
#include "rcfusion/geometry.hpp"

namespace rcfusion {

/// One cross-modal point pair: a camera anchor in pixels against the radar
/// polar position it was feature-matched to.
struct Correspondence {
    Point2 image_point;      // pixels (u, v)
    PolarPoint radar_point;  // (r meters, theta radians)
    double t = 0.0;          // seconds
    double score = 0.0;      // similarity at collection time
};

struct BlockSamplingConfig {
    int block_size = 5;     // square cell side, pixels
    int stride_blocks = 1;  // 1 = every-other-block checkerboard

    void validate() const;
};

struct RegionStats {
    std::size_t total = 0;     // correspondences assigned to the region
    std::size_t train = 0;     // used for fitting
    std::size_t inliers = 0;   // RANSAC consensus within train
    double train_error_m = 0.0;
    std::optional<double> holdout_error_m;  // absent when the split left none
};

struct CalibrationStats {
    RegionStats upper;
    RegionStats lower;
    bool shared_fallback = false;  // one region failed; both use a shared fit
};

/// Two-region image->polar calibration: one homography for the distal upper
/// image band, one for the proximal lower band.
struct CalibrationModel {
    Homography h_upper = Homography::identity();
    Homography h_lower = Homography::identity();
    double image_width = 640.0;
    double image_height = 480.0;
    double split_fraction = 2.0 / 3.0;
    CalibrationStats stats;

    void validate() const;
};

struct CalibrationConfig {
    double similarity_threshold = 0.8;
    BlockSamplingConfig block;
    double split_fraction = 2.0 / 3.0;
    double image_width = 640.0;
    double image_height = 480.0;
    RansacConfig ransac;            // seed is re-derived per region
    double holdout_fraction = 0.2;  // withheld for the reported error
    std::uint64_t seed = 0;         // drives the holdout split
    SimilarityFn similarity;        // defaults to the logistic provider
};

/// Feature matching across each frame pair: every (radar, camera) pair
/// scoring above the threshold becomes a correspondence, greedily by
/// descending score with each detection used at most once per frame.
std::vector<Correspondence> collect_correspondences(const std::vector<FramePair>& pairs,
                                                    double threshold,
                                                    const SimilarityFn& similarity = {});

/// Spatial decimation to one correspondence per selected grid cell. Cells
/// form a checkerboard of stride_blocks-sized groups; within a kept cell the
/// correspondence nearest the cell center survives (ties: earliest t, then
/// lowest image point).
std::vector<Correspondence> block_sample(const std::vector<Correspondence>& corrs,
                                         const BlockSamplingConfig& cfg, double image_width,
                                         double image_height);

/// Partition at v = split_fraction * image_height: strictly above the line ->
/// upper (distal), at or below -> lower (proximal).
std::pair<std::vector<Correspondence>, std::vector<Correspondence>> split_up_down(
    const std::vector<Correspondence>& corrs, double image_height, double split_fraction);

/// The full online calibration pipeline: per-frame collection and block
/// sampling, up-down split, per-region RANSAC homography with a seeded
/// holdout for the reported errors. If one region cannot be fit, both fall
/// back to a single homography over every region's training pairs (flagged);
/// if both regions fail, throws CalibrationFailed.
CalibrationModel calibrate(const std::vector<FramePair>& pairs, const CalibrationConfig& cfg);

/// Applies the region-appropriate homography: (u, v) -> (r, theta).
PolarPoint project_to_radar(const CalibrationModel& model, const Point2& pixel);

/// project_to_radar composed with the polar->Cartesian conversion. Uses the
/// raw trigonometric form so slightly out-of-range projections (negative
/// range from extrapolation) still map to a ground point.
Point2 project_to_ground(const CalibrationModel& model, const Point2& pixel);

}  // namespace rcfusion
