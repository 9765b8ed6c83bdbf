#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcfusion/detection.hpp"
#include "rcfusion/geometry.hpp"

namespace rcfusion {

/// Pinhole camera used by the scene oracle. World frame: x right, y forward
/// (radar boresight), z up, ground plane z = 0 with the radar at the origin.
/// Camera frame: x right, y down, z along the optical axis.
struct CameraModel {
    double fx = 500.0;  // pixels
    double fy = 500.0;
    double u0 = 320.0;
    double v0 = 240.0;
    double skew = 0.0;
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // world->camera, row-major
    std::array<double, 3> translation{0, 0, 0};                 // world->camera offset, meters
    double image_width = 640.0;
    double image_height = 480.0;

    /// Throws InvalidInput unless focal lengths are positive and the rotation
    /// is orthonormal within 1e-9.
    void validate() const;
};

/// Camera at (0, 0, height) looking along +y, pitched down. Intrinsics are
/// the struct defaults unless overridden.
CameraModel make_tilted_camera(double height_m, double pitch_down_rad, double fx = 500.0,
                               double fy = 500.0, double image_width = 640.0,
                               double image_height = 480.0);

/// Projects a world point (meters) to pixels. Throws BehindCamera when the
/// point has non-positive depth.
Point2 project_point(const CameraModel& cam, double x, double y, double z);

/// Projection of the ground point (x, y, 0).
Point2 ground_truth_projection(const CameraModel& cam, const Point2& ground);

/// The exact ground-plane -> image-plane homography induced by the camera
/// pose: columns K[r1 r2 T]. Exposed so tests can bound calibration error.
Homography ground_to_image_homography(const CameraModel& cam);

struct Waypoint {
    double t = 0.0;  // seconds
    double x = 0.0;  // ground meters
    double y = 0.0;
};

struct ObjectSpec {
    std::int64_t id = 0;
    std::string category;
    std::vector<Waypoint> waypoints;  // time-sorted; single waypoint = static
    double extent = 0.0;              // footprint radius, meters
    double reflectivity = 1.0;

    void validate() const;
    /// Piecewise-linear position, clamped to the endpoint positions.
    Point2 position_at(double t) const;
    /// Outside [first.t, last.t] the object emits nothing and leaves the
    /// ground truth. Single-waypoint objects are always alive.
    bool alive_at(double t) const;
};

struct SensorNoiseModel {
    double radar_range_std = 0.0;     // meters
    double radar_azimuth_std = 0.0;   // radians
    double camera_pixel_std = 0.0;    // pixels
    double radar_dropout_prob = 0.0;  // per detection per frame
    double camera_dropout_prob = 0.0;
    double radar_false_positive_rate = 0.0;  // per-frame Poisson mean
    double camera_false_positive_rate = 0.0;
    double embedding_noise_std = 0.0;  // expected perturbation norm

    void validate() const;
};

enum class SensorKind { kRadar, kCamera };

const char* to_string(SensorKind sensor);

/// Half-open time window [t_start, t_end) during which a sensor emits
/// nothing at all.
struct FailureWindow {
    SensorKind sensor = SensorKind::kRadar;
    double t_start = 0.0;
    double t_end = 0.0;

    void validate() const;
    bool covers(double t) const { return t >= t_start && t < t_end; }
};

struct Scenario {
    double duration_s = 10.0;
    double frame_rate_hz = 10.0;
    double area_length_m = 25.0;  // forward (y) extent of the scene
    double area_width_m = 12.0;   // lateral (x) extent, centered on the boresight
    CameraModel camera = make_tilted_camera(2.5, 0.26);
    std::vector<ObjectSpec> objects;

    void validate() const;
};

struct GroundTruthEntry {
    std::int64_t object_id = 0;
    std::string category;
    Point2 position;  // ground meters
};

struct GroundTruthFrame {
    double t = 0.0;
    std::vector<GroundTruthEntry> entries;
};

using GroundTruth = std::vector<GroundTruthFrame>;

struct SceneData {
    std::vector<FramePair> frames;
    GroundTruth truth;
};

/// Renders the scenario to detection frames plus ground truth: interpolated
/// objects observed by both sensors with the configured noise, dropouts,
/// Poisson false positives, and failure windows. Bit-deterministic in seed.
SceneData synthesize_scene(const Scenario& scenario, const SensorNoiseModel& noise,
                           const std::vector<FailureWindow>& failures, std::uint64_t seed);

/// Two independent noisy unit-normalized copies of a latent (radar-side and
/// camera-side embedding of one object). noise_std is the expected norm of
/// the perturbation, spread evenly across components.
std::pair<Embedding, Embedding> sample_embeddings(const Embedding& latent, double noise_std,
                                                  std::uint64_t seed);

/// Seeded random unit vector; distinct streams give near-orthogonal latents.
Embedding make_latent(std::uint64_t seed, std::int64_t object_id);

}  // namespace rcfusion
