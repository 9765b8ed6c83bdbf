#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcfusion/association.hpp"
#include "rcfusion/detection.hpp"
#include "rcfusion/geometry.hpp"

namespace rcfusion {

/// Constant-velocity filter state: x = (x, y, vx, vy), with a row-major 4x4
/// covariance. Positions in meters, velocities in meters/second.
struct KalmanState {
    std::array<double, 4> x{};
    std::array<double, 16> p{};

    Point2 position() const { return {x[0], x[1]}; }
    Point2 velocity() const { return {x[2], x[3]}; }
    double p_at(int r, int c) const { return p[static_cast<std::size_t>(r) * 4 + c]; }
};

/// State at a detection position with zero velocity and an inflated
/// covariance, so early updates dominate the prior.
KalmanState make_initial_state(const Point2& position, double pos_std, double vel_std);

/// Propagates through the constant-velocity model with white-acceleration
/// process noise of standard deviation accel_std.
KalmanState kf_predict(const KalmanState& s, double dt, double accel_std);

/// Measurement update on (x, y) with isotropic noise meas_noise_std, using the
/// Joseph-form covariance update.
KalmanState kf_update(const KalmanState& s, const Point2& z, double meas_noise_std);

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

enum class FusionSource { kRadar, kCamera, kFused };

/// Which tracker branch owns a track.
enum class BranchKind { kRadar, kCamera, kFusion };

const char* to_string(TrackStatus status);
const char* to_string(FusionSource source);
const char* to_string(BranchKind kind);

/// Detection on the ground plane after decision-level fusion: position from
/// the better-located sensor, category from the camera when available.
struct FusedDetection {
    Point2 position;
    std::optional<std::string> category;
    FusionSource source = FusionSource::kFused;
    std::optional<std::size_t> radar_index;
    std::optional<std::size_t> camera_index;
};

struct Track {
    std::int64_t id = 0;
    KalmanState state;
    std::optional<std::string> category;
    TrackStatus status = TrackStatus::kTentative;
    int hits = 0;
    int misses = 0;
    int age = 0;
    BranchKind provenance = BranchKind::kFusion;
};

struct TrackerConfig {
    double process_noise_accel = 1.0;  // m/s^2
    double meas_noise_radar = 0.3;     // m
    double meas_noise_camera = 1.0;    // m
    int confirm_hits = 3;
    int max_misses = 5;
    double gate_distance = 3.0;   // m, detection-track association
    double sim_threshold = 0.8;   // radar-camera feature stage
    double dist_threshold = 3.0;  // m, radar-camera matching
    bool category_gating = true;
    SimilarityFn similarity;  // defaults to the logistic provider

    void validate() const;
};

/// Combines two-stage match output with the original detections per the
/// decision-level fusion rule: matched pairs take the radar position and the
/// camera category; leftovers keep their own sensor's output (radar leftovers
/// carry no category). Output order: matched, unmatched camera, unmatched
/// radar.
std::vector<FusedDetection> fuse_detections(const MatchResult& match,
                                            const std::vector<RadarDetection>& radar,
                                            const std::vector<GroundCameraDetection>& camera_ground);

struct TrackAssignment {
    std::vector<std::pair<std::size_t, std::size_t>> matched;  // (detection, track)
    std::vector<std::size_t> unmatched_detections;
    std::vector<std::size_t> unmatched_tracks;
};

/// Gated nearest-neighbor assignment: Euclidean distance between detection
/// positions and predicted track positions, with cells failing the category
/// gate or the distance gate infeasible; Hungarian on the rest.
TrackAssignment match_detections_to_tracks(const std::vector<FusedDetection>& dets,
                                           const std::vector<Track>& tracks,
                                           const TrackerConfig& cfg);

/// Applies one frame's assignment to the track list: update + confirm matched
/// tracks, coast + expire unmatched ones, spawn tentative tracks for leftover
/// detections (stamped with `provenance`). next_id supplies fresh ids and is
/// advanced, never reused.
void manage_tracks(std::vector<Track>& tracks, const TrackAssignment& assignment,
                   const std::vector<FusedDetection>& detections, const TrackerConfig& cfg,
                   std::int64_t& next_id, BranchKind provenance = BranchKind::kFusion);

/// Single-branch tracker: predict, associate, update, manage lifecycle.
class BranchTracker {
public:
    explicit BranchTracker(TrackerConfig cfg, BranchKind provenance = BranchKind::kFusion);

    /// Advances to time t and consumes the frame's detections. Measurement
    /// noise is chosen per detection source (radar/fused vs camera).
    void step(double t, const std::vector<FusedDetection>& detections);

    /// Confirmed tracks at the current time, coasted ones included.
    std::vector<Track> snapshot() const;

    const std::vector<Track>& live_tracks() const { return tracks_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    TrackerConfig cfg_;
    BranchKind provenance_ = BranchKind::kFusion;
    std::vector<Track> tracks_;
    std::int64_t next_id_ = 1;
    std::optional<double> last_t_;
};

/// Per-frame snapshots of the three branches.
struct BranchOutputs {
    std::vector<Track> radar;
    std::vector<Track> camera;
    std::vector<Track> fusion;
};

/// The full three-branch tracker: radar-only, camera-only, and fusion, all
/// fed from one time-aligned frame pair. Camera anchors are pre-projected to
/// the ground plane by the caller (calibration module).
class FusionTracker {
public:
    explicit FusionTracker(TrackerConfig cfg);

    BranchOutputs step(double t, const std::vector<RadarDetection>& radar,
                       const std::vector<GroundCameraDetection>& camera_ground);

    const BranchTracker& radar_branch() const { return radar_; }
    const BranchTracker& camera_branch() const { return camera_; }
    const BranchTracker& fusion_branch() const { return fusion_; }

private:
    TrackerConfig cfg_;
    BranchTracker radar_;
    BranchTracker camera_;
    BranchTracker fusion_;
};

}  // namespace rcfusion
