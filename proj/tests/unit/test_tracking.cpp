#include "doctest.h"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "rcfusion/errors.hpp"
#include "rcfusion/rng.hpp"
#include "rcfusion/tracking.hpp"

using namespace rcfusion;

namespace {

double min_eigenvalue(const KalmanState& s) {
    Eigen::Matrix4d p;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) p(r, c) = s.p_at(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(p);
    return solver.eigenvalues().minCoeff();
}

double max_asymmetry(const KalmanState& s) {
    double worst = 0.0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(s.p_at(r, c) - s.p_at(c, r)));
    return worst;
}

KalmanState state_with(const std::array<double, 4>& x, double p_diag) {
    KalmanState s;
    s.x = x;
    for (int i = 0; i < 4; ++i) s.p[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(i)] = p_diag;
    return s;
}

}  // namespace

TEST_CASE("kf_predict integrates constant velocity") {
    const KalmanState s = state_with({0, 0, 1, 0}, 1.0);
    const KalmanState out = kf_predict(s, 1.0, 0.0);
    CHECK(out.x[0] == doctest::Approx(1.0));
    CHECK(out.x[1] == doctest::Approx(0.0));
    CHECK(out.x[2] == doctest::Approx(1.0));
    CHECK(out.x[3] == doctest::Approx(0.0));
}

TEST_CASE("kf_predict leaves a stationary state in place") {
    const KalmanState s = state_with({2, 3, 0, 0}, 1.0);
    const KalmanState out = kf_predict(s, 5.0, 0.0);
    CHECK(out.x[0] == doctest::Approx(2.0));
    CHECK(out.x[1] == doctest::Approx(3.0));
    CHECK(out.x[2] == doctest::Approx(0.0));
    CHECK(out.x[3] == doctest::Approx(0.0));
}

TEST_CASE("kf_predict covariance: P=I, dt=1, accel std 1") {
    // F I F^T + Q with the white-acceleration Q:
    //   [[2.25, 0, 1.5, 0], [0, 2.25, 0, 1.5], [1.5, 0, 2, 0], [0, 1.5, 0, 2]]
    const KalmanState s = state_with({0, 0, 0, 0}, 1.0);
    const KalmanState out = kf_predict(s, 1.0, 1.0);
    const std::array<double, 16> want = {2.25, 0,    1.5, 0,    //
                                         0,    2.25, 0,   1.5,  //
                                         1.5,  0,    2.0, 0,    //
                                         0,    1.5,  0,   2.0};
    for (int i = 0; i < 16; ++i) {
        CHECK(out.p[static_cast<std::size_t>(i)] ==
              doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("kf_predict rejects non-positive dt") {
    const KalmanState s = state_with({0, 0, 0, 0}, 1.0);
    CHECK_THROWS_AS(kf_predict(s, 0.0, 1.0), InvalidInput);
    CHECK_THROWS_AS(kf_predict(s, -0.1, 1.0), InvalidInput);
}

TEST_CASE("kf_update with a perfect measurement lands on it") {
    const KalmanState s = state_with({0, 0, 0, 0}, 1.0);
    const KalmanState out = kf_update(s, {5, 5}, 0.0);
    CHECK(std::abs(out.x[0] - 5.0) < 1e-9);
    CHECK(std::abs(out.x[1] - 5.0) < 1e-9);
}

TEST_CASE("kf_update with an uninformative measurement keeps the prior") {
    const KalmanState s = state_with({2, -1, 0.5, 0.25}, 1.0);
    const KalmanState out = kf_update(s, {100, 100}, 1e9);
    for (int i = 0; i < 4; ++i) {
        const double prior = s.x[static_cast<std::size_t>(i)];
        CHECK(std::abs(out.x[static_cast<std::size_t>(i)] - prior) <=
              1e-6 * std::max(1.0, std::abs(prior)));
    }
}

TEST_CASE("kf_update halves the gap when P = R = I") {
    const KalmanState s = state_with({0, 0, 0, 0}, 1.0);
    const KalmanState out = kf_update(s, {1, 1}, 1.0);
    CHECK(out.x[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.x[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kalman covariance stays symmetric PSD over random cycles") {
    auto rng = make_rng(51);
    std::uniform_real_distribution<double> dt(0.01, 0.5);
    std::uniform_real_distribution<double> accel(0.0, 3.0);
    std::uniform_real_distribution<double> noise(0.05, 2.0);
    std::uniform_real_distribution<double> z(-20.0, 20.0);
    KalmanState s = make_initial_state({0, 10}, 2.0, 10.0);
    for (int i = 0; i < 2000; ++i) {
        s = kf_predict(s, dt(rng), accel(rng));
        s = kf_update(s, {z(rng), z(rng)}, noise(rng));
        CHECK(max_asymmetry(s) == 0.0);
        CHECK(min_eigenvalue(s) >= -1e-9);
    }
}

TEST_CASE("noiseless linear motion: position RMSE under 1e-6 after 10 updates") {
    // Measurements are exact; the filter runs with zero process noise and a
    // tiny (nonzero, so S stays invertible) measurement variance.
    KalmanState s = make_initial_state({0, 0}, 2.0, 10.0);
    const double dt = 0.1, vx = 2.0, vy = -1.0;
    double err = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double t = dt * k;
        s = kf_predict(s, dt, 0.0);
        s = kf_update(s, {vx * t, vy * t}, 1e-4);
        err = std::hypot(s.x[0] - vx * t, s.x[1] - vy * t);
    }
    CHECK(err < 1e-6);
}

TEST_CASE("kf_update signals a collapsed innovation covariance") {
    KalmanState s = make_initial_state({0, 0}, 2.0, 10.0);
    const double dt = 0.1;
    CHECK_THROWS_AS(
        [&] {
            for (int k = 1; k <= 10; ++k) {
                s = kf_predict(s, dt, 0.0);
                s = kf_update(s, {0.0, 0.0}, 0.0);  // R = 0 collapses P
            }
        }(),
        DegenerateConfiguration);
}

namespace {

RadarDetection radar_det(double x, double y) {
    RadarDetection det;
    det.position = cartesian_to_polar({x, y});
    det.bbox = {0, 0, 1, 1};
    return det;
}

GroundCameraDetection camera_det(double x, double y, const std::string& category) {
    GroundCameraDetection det;
    det.detection.bbox = {0, 0, 10, 10};
    det.detection.category = category;
    det.ground = {x, y};
    return det;
}

}  // namespace

TEST_CASE("fuse_detections: matched pair takes radar position, camera category") {
    const std::vector<RadarDetection> radar = {radar_det(0, 5)};
    const std::vector<GroundCameraDetection> camera = {camera_det(0.3, 5.2, "car")};
    MatchResult match;
    match.matched.push_back({0, 0, MatchStage::kFeature});
    const auto fused = fuse_detections(match, radar, camera);
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].source == FusionSource::kFused);
    CHECK(fused[0].position.x == doctest::Approx(0.0));
    CHECK(fused[0].position.y == doctest::Approx(5.0));
    REQUIRE(fused[0].category.has_value());
    CHECK(*fused[0].category == "car");
    // Bit-exact provenance: position is the radar conversion, untouched.
    const Point2 ground = polar_to_cartesian(radar[0].position);
    CHECK(fused[0].position.x == ground.x);
    CHECK(fused[0].position.y == ground.y);
    REQUIRE(fused[0].radar_index.has_value());
    REQUIRE(fused[0].camera_index.has_value());
    CHECK(*fused[0].radar_index == 0);
    CHECK(*fused[0].camera_index == 0);
}

TEST_CASE("fuse_detections: unmatched camera keeps its ground fix and label") {
    const std::vector<RadarDetection> radar;
    const std::vector<GroundCameraDetection> camera = {camera_det(1, 4, "person")};
    MatchResult match;
    match.unmatched_camera.push_back(0);
    const auto fused = fuse_detections(match, radar, camera);
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].source == FusionSource::kCamera);
    CHECK(fused[0].position.x == doctest::Approx(1.0));
    CHECK(fused[0].position.y == doctest::Approx(4.0));
    REQUIRE(fused[0].category.has_value());
    CHECK(*fused[0].category == "person");
    CHECK(!fused[0].radar_index.has_value());
}

TEST_CASE("fuse_detections: unmatched radar carries position only") {
    const std::vector<RadarDetection> radar = {
        {{8.0, M_PI / 6.0}, {0, 0, 1, 1}, std::string("truck"), std::nullopt}};
    const std::vector<GroundCameraDetection> camera;
    MatchResult match;
    match.unmatched_radar.push_back(0);
    const auto fused = fuse_detections(match, radar, camera);
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].source == FusionSource::kRadar);
    CHECK(fused[0].position.x == doctest::Approx(4.0).epsilon(1e-7));
    CHECK(fused[0].position.y == doctest::Approx(6.9282).epsilon(1e-5));
    CHECK(!fused[0].category.has_value());
    CHECK(!fused[0].camera_index.has_value());
}

TEST_CASE("fuse_detections output order: matched, camera leftovers, radar leftovers") {
    const std::vector<RadarDetection> radar = {radar_det(0, 5), radar_det(3, 8)};
    const std::vector<GroundCameraDetection> camera = {camera_det(0, 5.5, "car"),
                                                       camera_det(-4, 9, "person")};
    MatchResult match;
    match.matched.push_back({0, 0, MatchStage::kPosition});
    match.unmatched_radar.push_back(1);
    match.unmatched_camera.push_back(1);
    const auto fused = fuse_detections(match, radar, camera);
    REQUIRE(fused.size() == 3);
    CHECK(fused[0].source == FusionSource::kFused);
    CHECK(fused[1].source == FusionSource::kCamera);
    CHECK(fused[2].source == FusionSource::kRadar);
}

namespace {

FusedDetection fused_at(double x, double y, std::optional<std::string> category) {
    FusedDetection d;
    d.position = {x, y};
    d.category = std::move(category);
    return d;
}

}  // namespace

TEST_CASE("manage_tracks spawns a tentative track per leftover detection") {
    std::vector<Track> tracks;
    std::int64_t next_id = 1;
    const std::vector<FusedDetection> dets = {fused_at(0, 5, "car")};
    TrackAssignment assignment;
    assignment.unmatched_detections.push_back(0);
    manage_tracks(tracks, assignment, dets, TrackerConfig{}, next_id, BranchKind::kRadar);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].status == TrackStatus::kTentative);
    CHECK(tracks[0].id == 1);
    CHECK(tracks[0].hits == 1);
    CHECK(tracks[0].misses == 0);
    CHECK(tracks[0].provenance == BranchKind::kRadar);
    REQUIRE(tracks[0].category.has_value());
    CHECK(*tracks[0].category == "car");
    CHECK(next_id == 2);
}

TEST_CASE("manage_tracks confirms on the third hit") {
    std::vector<Track> tracks;
    std::int64_t next_id = 1;
    TrackerConfig cfg;  // confirm_hits = 3

    std::vector<FusedDetection> dets = {fused_at(0, 5, "car")};
    TrackAssignment spawn;
    spawn.unmatched_detections.push_back(0);
    manage_tracks(tracks, spawn, dets, cfg, next_id);
    CHECK(tracks[0].status == TrackStatus::kTentative);

    TrackAssignment hit;
    hit.matched.emplace_back(0, 0);
    dets = {fused_at(0, 5.1, "car")};
    manage_tracks(tracks, hit, dets, cfg, next_id);
    CHECK(tracks[0].status == TrackStatus::kTentative);
    CHECK(tracks[0].hits == 2);

    dets = {fused_at(0, 5.2, "car")};
    manage_tracks(tracks, hit, dets, cfg, next_id);
    CHECK(tracks[0].status == TrackStatus::kConfirmed);
    CHECK(tracks[0].hits == 3);
}

TEST_CASE("manage_tracks deletes after six consecutive misses") {
    std::vector<Track> tracks;
    std::int64_t next_id = 1;
    TrackerConfig cfg;  // max_misses = 5

    std::vector<FusedDetection> dets = {fused_at(0, 5, "car")};
    TrackAssignment spawn;
    spawn.unmatched_detections.push_back(0);
    manage_tracks(tracks, spawn, dets, cfg, next_id);
    TrackAssignment hit;
    hit.matched.emplace_back(0, 0);
    manage_tracks(tracks, hit, dets, cfg, next_id);
    manage_tracks(tracks, hit, dets, cfg, next_id);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].status == TrackStatus::kConfirmed);

    TrackAssignment miss;
    miss.unmatched_tracks.push_back(0);
    const std::vector<FusedDetection> none;
    for (int k = 1; k <= 5; ++k) {
        manage_tracks(tracks, miss, none, cfg, next_id);
        REQUIRE(tracks.size() == 1);  // retained through max_misses misses
        CHECK(tracks[0].misses == k);
    }
    manage_tracks(tracks, miss, none, cfg, next_id);  // sixth miss
    CHECK(tracks.empty());
}

TEST_CASE("manage_tracks refreshes category and keeps it when absent") {
    std::vector<Track> tracks;
    std::int64_t next_id = 1;
    TrackerConfig cfg;
    cfg.category_gating = false;

    std::vector<FusedDetection> dets = {fused_at(0, 5, "car")};
    TrackAssignment spawn;
    spawn.unmatched_detections.push_back(0);
    manage_tracks(tracks, spawn, dets, cfg, next_id);

    TrackAssignment hit;
    hit.matched.emplace_back(0, 0);
    dets = {fused_at(0, 5.1, std::nullopt)};  // radar-only frame
    manage_tracks(tracks, hit, dets, cfg, next_id);
    REQUIRE(tracks[0].category.has_value());
    CHECK(*tracks[0].category == "car");

    dets = {fused_at(0, 5.2, "truck")};
    manage_tracks(tracks, hit, dets, cfg, next_id);
    CHECK(*tracks[0].category == "truck");
}

TEST_CASE("manage_tracks ids are strictly increasing and never reused") {
    std::vector<Track> tracks;
    std::int64_t next_id = 1;
    TrackerConfig cfg;
    std::set<std::int64_t> seen;

    auto spawn_one = [&](double x) {
        const std::vector<FusedDetection> dets = {fused_at(x, 5, "car")};
        TrackAssignment a;
        a.unmatched_detections.push_back(0);
        manage_tracks(tracks, a, dets, cfg, next_id);
    };
    auto kill_all = [&] {
        const std::vector<FusedDetection> none;
        for (int k = 0; k <= cfg.max_misses; ++k) {
            TrackAssignment a;
            for (std::size_t i = 0; i < tracks.size(); ++i) a.unmatched_tracks.push_back(i);
            manage_tracks(tracks, a, none, cfg, next_id);
        }
    };

    for (int round = 0; round < 5; ++round) {
        spawn_one(static_cast<double>(round));
        for (const Track& t : tracks) {
            CHECK(!seen.contains(t.id));
            seen.insert(t.id);
        }
        kill_all();
        CHECK(tracks.empty());
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("single object through the fusion tracker confirms exactly one track") {
    TrackerConfig cfg;
    FusionTracker tracker(cfg);
    BranchOutputs out;
    for (int k = 0; k < 6; ++k) {
        const double t = 0.1 * k;
        const double y = 10.0 + 1.0 * t;
        const std::vector<RadarDetection> radar = {radar_det(0, y)};
        const std::vector<GroundCameraDetection> camera = {camera_det(0.1, y + 0.2, "car")};
        out = tracker.step(t, radar, camera);
        if (k < 2) CHECK(out.fusion.empty());  // not yet confirmed
    }
    REQUIRE(out.fusion.size() == 1);
    CHECK(out.fusion[0].status == TrackStatus::kConfirmed);
    CHECK(out.fusion[0].provenance == BranchKind::kFusion);
    REQUIRE(out.fusion[0].category.has_value());
    CHECK(*out.fusion[0].category == "car");
    CHECK(out.radar.size() == 1);
    CHECK(out.camera.size() == 1);
    CHECK(out.radar[0].provenance == BranchKind::kRadar);
    CHECK(out.camera[0].provenance == BranchKind::kCamera);
}

TEST_CASE("fusion branch rides through a camera blackout") {
    TrackerConfig cfg;
    FusionTracker tracker(cfg);
    const auto frame_y = [](int k) { return 10.0 + 0.1 * k; };
    // Warm up with both sensors.
    BranchOutputs out;
    for (int k = 0; k < 4; ++k) {
        out = tracker.step(0.1 * k, {radar_det(0, frame_y(k))},
                           {camera_det(0, frame_y(k), "car")});
    }
    REQUIRE(out.fusion.size() == 1);
    const std::int64_t id = out.fusion[0].id;

    // Camera fails for 4 frames: radar-only input keeps the fusion track
    // alive, and its category survives from track history.
    for (int k = 4; k < 8; ++k) {
        out = tracker.step(0.1 * k, {radar_det(0, frame_y(k))}, {});
    }
    REQUIRE(out.fusion.size() == 1);
    CHECK(out.fusion[0].id == id);
    REQUIRE(out.fusion[0].category.has_value());
    CHECK(*out.fusion[0].category == "car");
}

TEST_CASE("fusion branch rides through a radar blackout") {
    TrackerConfig cfg;
    FusionTracker tracker(cfg);
    const auto frame_y = [](int k) { return 10.0 + 0.1 * k; };
    BranchOutputs out;
    for (int k = 0; k < 4; ++k) {
        out = tracker.step(0.1 * k, {radar_det(0, frame_y(k))},
                           {camera_det(0, frame_y(k), "car")});
    }
    REQUIRE(out.fusion.size() == 1);
    const std::int64_t id = out.fusion[0].id;

    for (int k = 4; k < 8; ++k) {
        out = tracker.step(0.1 * k, {}, {camera_det(0, frame_y(k), "car")});
    }
    REQUIRE(out.fusion.size() == 1);
    CHECK(out.fusion[0].id == id);
}

TEST_CASE("radar-only and camera-only branches run independently") {
    TrackerConfig cfg;
    FusionTracker tracker(cfg);
    BranchOutputs out;
    for (int k = 0; k < 4; ++k) {
        out = tracker.step(0.1 * k, {radar_det(0, 10)}, {});
    }
    CHECK(out.radar.size() == 1);
    CHECK(out.camera.empty());
    CHECK(out.fusion.size() == 1);
    // Radar-only fused detections carry no category.
    CHECK(!out.fusion[0].category.has_value());
}

TEST_CASE("TrackerConfig validation") {
    TrackerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.meas_noise_radar = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = TrackerConfig{};
    cfg.confirm_hits = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = TrackerConfig{};
    cfg.gate_distance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}
