#include "rcfusion/tracking.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rcfusion/errors.hpp"

namespace rcfusion {

namespace {

using Matrix4d = Eigen::Matrix4d;
using Vector4d = Eigen::Vector4d;

Matrix4d to_matrix(const std::array<double, 16>& p) {
    Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = p[static_cast<std::size_t>(r) * 4 + c];
    }
    return m;
}

void from_matrix(const Matrix4d& m, std::array<double, 16>& p) {
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) p[static_cast<std::size_t>(r) * 4 + c] = m(r, c);
    }
}

Matrix4d symmetrized(const Matrix4d& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

KalmanState make_initial_state(const Point2& position, double pos_std, double vel_std) {
    if (!std::isfinite(position.x) || !std::isfinite(position.y)) {
        throw InvalidInput("make_initial_state: position must be finite");
    }
    if (!(pos_std > 0.0) || !(vel_std > 0.0)) {
        throw InvalidInput("make_initial_state: standard deviations must be positive");
    }
    KalmanState s;
    s.x = {position.x, position.y, 0.0, 0.0};
    Matrix4d p = Matrix4d::Zero();
    p(0, 0) = p(1, 1) = pos_std * pos_std;
    p(2, 2) = p(3, 3) = vel_std * vel_std;
    from_matrix(p, s.p);
    return s;
}

KalmanState kf_predict(const KalmanState& s, double dt, double accel_std) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidInput("kf_predict: dt must be positive and finite");
    }
    if (!(accel_std >= 0.0) || !std::isfinite(accel_std)) {
        throw InvalidInput("kf_predict: accel_std must be non-negative and finite");
    }
    Matrix4d f = Matrix4d::Identity();
    f(0, 2) = dt;
    f(1, 3) = dt;

    // White-acceleration (discrete Wiener) process noise.
    const double q2 = accel_std * accel_std;
    const double dt2 = dt * dt;
    Matrix4d q = Matrix4d::Zero();
    q(0, 0) = q(1, 1) = 0.25 * dt2 * dt2 * q2;
    q(0, 2) = q(2, 0) = 0.5 * dt2 * dt * q2;
    q(1, 3) = q(3, 1) = 0.5 * dt2 * dt * q2;
    q(2, 2) = q(3, 3) = dt2 * q2;

    const Vector4d x(s.x[0], s.x[1], s.x[2], s.x[3]);
    const Matrix4d p = to_matrix(s.p);

    KalmanState out;
    const Vector4d xp = f * x;
    for (int i = 0; i < 4; ++i) out.x[static_cast<std::size_t>(i)] = xp(i);
    from_matrix(symmetrized(f * p * f.transpose() + q), out.p);
    return out;
}

KalmanState kf_update(const KalmanState& s, const Point2& z, double meas_noise_std) {
    if (!std::isfinite(z.x) || !std::isfinite(z.y)) {
        throw InvalidInput("kf_update: measurement must be finite");
    }
    if (!(meas_noise_std >= 0.0) || !std::isfinite(meas_noise_std)) {
        throw InvalidInput("kf_update: meas_noise_std must be non-negative and finite");
    }
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    const Eigen::Matrix2d r = meas_noise_std * meas_noise_std * Eigen::Matrix2d::Identity();

    const Vector4d x(s.x[0], s.x[1], s.x[2], s.x[3]);
    const Matrix4d p = to_matrix(s.p);

    const Eigen::Matrix2d innov_cov = h * p * h.transpose() + r;
    const double det = innov_cov.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
        throw DegenerateConfiguration("kf_update: singular innovation covariance");
    }
    const Eigen::Matrix<double, 4, 2> k = p * h.transpose() * innov_cov.inverse();
    const Eigen::Vector2d innovation(z.x - x(0), z.y - x(1));

    KalmanState out;
    const Vector4d xp = x + k * innovation;
    for (int i = 0; i < 4; ++i) out.x[static_cast<std::size_t>(i)] = xp(i);
    // Joseph form keeps the covariance PSD regardless of gain rounding.
    const Matrix4d ikh = Matrix4d::Identity() - k * h;
    from_matrix(symmetrized(ikh * p * ikh.transpose() + k * r * k.transpose()), out.p);
    return out;
}

const char* to_string(TrackStatus status) {
    switch (status) {
        case TrackStatus::kTentative: return "tentative";
        case TrackStatus::kConfirmed: return "confirmed";
        case TrackStatus::kDeleted: return "deleted";
    }
    return "unknown";
}

const char* to_string(FusionSource source) {
    switch (source) {
        case FusionSource::kRadar: return "radar";
        case FusionSource::kCamera: return "camera";
        case FusionSource::kFused: return "fused";
    }
    return "unknown";
}

const char* to_string(BranchKind kind) {
    switch (kind) {
        case BranchKind::kRadar: return "radar";
        case BranchKind::kCamera: return "camera";
        case BranchKind::kFusion: return "fusion";
    }
    return "unknown";
}

void TrackerConfig::validate() const {
    if (!(process_noise_accel > 0.0) || !(meas_noise_radar > 0.0) || !(meas_noise_camera > 0.0) ||
        confirm_hits <= 0 || max_misses <= 0 || !(gate_distance > 0.0) || !(dist_threshold > 0.0) ||
        !(sim_threshold > 0.0) || !(sim_threshold <= 1.0)) {
        throw InvalidInput("TrackerConfig: all parameters must be positive");
    }
}

std::vector<FusedDetection> fuse_detections(const MatchResult& match,
                                            const std::vector<RadarDetection>& radar,
                                            const std::vector<GroundCameraDetection>& camera_ground) {
    std::vector<FusedDetection> fused;
    fused.reserve(match.matched.size() + match.unmatched_radar.size() +
                  match.unmatched_camera.size());
    for (const MatchedPair& pair : match.matched) {
        if (pair.radar_index >= radar.size() || pair.camera_index >= camera_ground.size()) {
            throw InvalidInput("fuse_detections: match indices exceed detection lists");
        }
        FusedDetection det;
        det.position = polar_to_cartesian(radar[pair.radar_index].position);
        det.category = camera_ground[pair.camera_index].detection.category;
        det.source = FusionSource::kFused;
        det.radar_index = pair.radar_index;
        det.camera_index = pair.camera_index;
        fused.push_back(std::move(det));
    }
    for (std::size_t j : match.unmatched_camera) {
        if (j >= camera_ground.size()) {
            throw InvalidInput("fuse_detections: match indices exceed detection lists");
        }
        FusedDetection det;
        det.position = camera_ground[j].ground;
        det.category = camera_ground[j].detection.category;
        det.source = FusionSource::kCamera;
        det.camera_index = j;
        fused.push_back(std::move(det));
    }
    for (std::size_t i : match.unmatched_radar) {
        if (i >= radar.size()) {
            throw InvalidInput("fuse_detections: match indices exceed detection lists");
        }
        FusedDetection det;
        det.position = polar_to_cartesian(radar[i].position);
        det.category = std::nullopt;  // radar leftovers carry no class label
        det.source = FusionSource::kRadar;
        det.radar_index = i;
        fused.push_back(std::move(det));
    }
    return fused;
}

TrackAssignment match_detections_to_tracks(const std::vector<FusedDetection>& dets,
                                           const std::vector<Track>& tracks,
                                           const TrackerConfig& cfg) {
    cfg.validate();
    TrackAssignment out;
    if (dets.empty() || tracks.empty()) {
        for (std::size_t i = 0; i < dets.size(); ++i) out.unmatched_detections.push_back(i);
        for (std::size_t j = 0; j < tracks.size(); ++j) out.unmatched_tracks.push_back(j);
        return out;
    }

    CostMatrix costs(dets.size(), tracks.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        for (std::size_t j = 0; j < tracks.size(); ++j) {
            if (cfg.category_gating && !gate_by_category(dets[i].category, tracks[j].category)) {
                continue;  // stays infeasible
            }
            const Point2 predicted = tracks[j].state.position();
            const double d = std::hypot(dets[i].position.x - predicted.x,
                                        dets[i].position.y - predicted.y);
            if (d > cfg.gate_distance) continue;
            costs.set(i, j, d);
        }
    }

    std::vector<bool> det_done(dets.size(), false);
    std::vector<bool> track_done(tracks.size(), false);
    for (const auto& [i, j] : hungarian(costs)) {
        det_done[i] = true;
        track_done[j] = true;
        out.matched.emplace_back(i, j);
    }
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (!det_done[i]) out.unmatched_detections.push_back(i);
    }
    for (std::size_t j = 0; j < tracks.size(); ++j) {
        if (!track_done[j]) out.unmatched_tracks.push_back(j);
    }
    return out;
}

namespace {

double meas_noise_for(const FusedDetection& det, const TrackerConfig& cfg) {
    // Fused positions come from the radar, so they share its noise.
    return det.source == FusionSource::kCamera ? cfg.meas_noise_camera : cfg.meas_noise_radar;
}

}  // namespace

void manage_tracks(std::vector<Track>& tracks, const TrackAssignment& assignment,
                   const std::vector<FusedDetection>& detections, const TrackerConfig& cfg,
                   std::int64_t& next_id, BranchKind provenance) {
    cfg.validate();
    for (const auto& [det_idx, track_idx] : assignment.matched) {
        Track& track = tracks[track_idx];
        const FusedDetection& det = detections[det_idx];
        track.state = kf_update(track.state, det.position, meas_noise_for(det, cfg));
        track.hits += 1;
        track.misses = 0;
        if (track.status == TrackStatus::kTentative && track.hits >= cfg.confirm_hits) {
            track.status = TrackStatus::kConfirmed;
        }
        if (det.category) track.category = det.category;  // else keep history
    }
    for (std::size_t track_idx : assignment.unmatched_tracks) {
        Track& track = tracks[track_idx];
        track.misses += 1;
        if (track.misses > cfg.max_misses) track.status = TrackStatus::kDeleted;
    }
    for (std::size_t det_idx : assignment.unmatched_detections) {
        const FusedDetection& det = detections[det_idx];
        Track track;
        track.id = next_id++;
        // Inflated prior: trust the first detection's position, know nothing
        // about velocity yet.
        track.state = make_initial_state(det.position, 2.0 * meas_noise_for(det, cfg), 10.0);
        track.category = det.category;
        track.status = TrackStatus::kTentative;
        track.hits = 1;
        track.misses = 0;
        track.age = 0;
        track.provenance = provenance;
        tracks.push_back(std::move(track));
    }
    for (Track& track : tracks) track.age += 1;
    std::erase_if(tracks, [](const Track& t) { return t.status == TrackStatus::kDeleted; });
}

BranchTracker::BranchTracker(TrackerConfig cfg, BranchKind provenance)
    : cfg_(std::move(cfg)), provenance_(provenance) {
    cfg_.validate();
}

void BranchTracker::step(double t, const std::vector<FusedDetection>& detections) {
    if (!std::isfinite(t)) throw InvalidInput("BranchTracker::step: time must be finite");
    if (last_t_) {
        const double dt = t - *last_t_;
        if (!(dt > 0.0)) {
            throw InvalidInput("BranchTracker::step: timestamps must strictly increase");
        }
        for (Track& track : tracks_) {
            track.state = kf_predict(track.state, dt, cfg_.process_noise_accel);
        }
    }
    last_t_ = t;

    const TrackAssignment assignment = match_detections_to_tracks(detections, tracks_, cfg_);
    manage_tracks(tracks_, assignment, detections, cfg_, next_id_, provenance_);
}

std::vector<Track> BranchTracker::snapshot() const {
    std::vector<Track> confirmed;
    for (const Track& track : tracks_) {
        if (track.status == TrackStatus::kConfirmed) confirmed.push_back(track);
    }
    return confirmed;
}

FusionTracker::FusionTracker(TrackerConfig cfg)
    : cfg_(std::move(cfg)),
      radar_(cfg_, BranchKind::kRadar),
      camera_(cfg_, BranchKind::kCamera),
      fusion_(cfg_, BranchKind::kFusion) {}

BranchOutputs FusionTracker::step(double t, const std::vector<RadarDetection>& radar,
                                  const std::vector<GroundCameraDetection>& camera_ground) {
    // Radar branch: positions straight from the polar measurements.
    std::vector<FusedDetection> radar_dets;
    radar_dets.reserve(radar.size());
    for (std::size_t i = 0; i < radar.size(); ++i) {
        FusedDetection det;
        det.position = polar_to_cartesian(radar[i].position);
        det.category = radar[i].category;
        det.source = FusionSource::kRadar;
        det.radar_index = i;
        radar_dets.push_back(std::move(det));
    }
    radar_.step(t, radar_dets);

    // Camera branch: calibrated ground projections.
    std::vector<FusedDetection> camera_dets;
    camera_dets.reserve(camera_ground.size());
    for (std::size_t j = 0; j < camera_ground.size(); ++j) {
        FusedDetection det;
        det.position = camera_ground[j].ground;
        det.category = camera_ground[j].detection.category;
        det.source = FusionSource::kCamera;
        det.camera_index = j;
        camera_dets.push_back(std::move(det));
    }
    camera_.step(t, camera_dets);

    // Fusion branch: two-stage matching then decision-level fusion. A failed
    // sensor shows up as an empty list and degrades this to single-sensor
    // input with the category gate passing automatically.
    MatcherConfig matcher;
    matcher.similarity_threshold = cfg_.sim_threshold;
    matcher.gate_distance_m = cfg_.dist_threshold;
    matcher.similarity = cfg_.similarity;
    const MatchResult match = match_radar_camera(radar, camera_ground, matcher);
    fusion_.step(t, fuse_detections(match, radar, camera_ground));

    BranchOutputs out;
    out.radar = radar_.snapshot();
    out.camera = camera_.snapshot();
    out.fusion = fusion_.snapshot();
    return out;
}

}  // namespace rcfusion
