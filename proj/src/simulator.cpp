#include "rcfusion/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rcfusion/errors.hpp"
#include "rcfusion/rng.hpp"

namespace rcfusion {

namespace {

constexpr double kOrthonormalTol = 1e-9;

// Per-frame random stream labels; each (seed, frame, purpose) triple gets an
// independent generator so adding draws to one purpose never shifts another.
enum StreamPurpose : std::uint64_t {
    kStreamCameraNoise = 1,
    kStreamRadarNoise = 2,
    kStreamCameraDropout = 3,
    kStreamRadarDropout = 4,
    kStreamCameraFalsePositives = 5,
    kStreamRadarFalsePositives = 6,
    kStreamEmbeddings = 7,
};
constexpr std::uint64_t kLatentNamespace = 0x6c6174656e74ULL;  // object latent vectors

std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t frame, std::uint64_t purpose) {
    return make_rng(derive_seed(seed, frame), purpose);
}

}  // namespace

void CameraModel::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw InvalidInput("CameraModel: focal lengths must be positive");
    }
    if (!(image_width > 0.0) || !(image_height > 0.0)) {
        throw InvalidInput("CameraModel: image dimensions must be positive");
    }
    for (double v : rotation) {
        if (!std::isfinite(v)) throw InvalidInput("CameraModel: non-finite rotation");
    }
    for (double v : translation) {
        if (!std::isfinite(v)) throw InvalidInput("CameraModel: non-finite translation");
    }
    // R^T R = I within tolerance.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) {
                dot += rotation[static_cast<std::size_t>(k) * 3 + i] *
                       rotation[static_cast<std::size_t>(k) * 3 + j];
            }
            const double expected = (i == j) ? 1.0 : 0.0;
            if (std::abs(dot - expected) > kOrthonormalTol) {
                throw InvalidInput("CameraModel: rotation is not orthonormal");
            }
        }
    }
}

CameraModel make_tilted_camera(double height_m, double pitch_down_rad, double fx, double fy,
                               double image_width, double image_height) {
    if (!(height_m > 0.0)) throw InvalidInput("make_tilted_camera: height must be positive");
    const double c = std::cos(pitch_down_rad);
    const double s = std::sin(pitch_down_rad);
    CameraModel cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.u0 = image_width / 2.0;
    cam.v0 = image_height / 2.0;
    cam.image_width = image_width;
    cam.image_height = image_height;
    // Rows are the camera axes in world coordinates: x_cam = world x,
    // y_cam points down-forward, z_cam (optical axis) forward-down.
    cam.rotation = {1.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s};
    // T = -R * C for the camera center C = (0, 0, height).
    cam.translation = {0.0, height_m * c, height_m * s};
    cam.validate();
    return cam;
}

Point2 project_point(const CameraModel& cam, double x, double y, double z) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
        throw InvalidInput("project_point: non-finite world point");
    }
    const auto& r = cam.rotation;
    const auto& t = cam.translation;
    const double xc = r[0] * x + r[1] * y + r[2] * z + t[0];
    const double yc = r[3] * x + r[4] * y + r[5] * z + t[1];
    const double zc = r[6] * x + r[7] * y + r[8] * z + t[2];
    if (!(zc > 0.0)) {
        throw BehindCamera("project_point: point at non-positive depth");
    }
    return {cam.fx * xc / zc + cam.skew * yc / zc + cam.u0, cam.fy * yc / zc + cam.v0};
}

Point2 ground_truth_projection(const CameraModel& cam, const Point2& ground) {
    return project_point(cam, ground.x, ground.y, 0.0);
}

Homography ground_to_image_homography(const CameraModel& cam) {
    cam.validate();
    const auto& r = cam.rotation;
    const auto& t = cam.translation;
    // K [r1 r2 T]: a ground point (x, y, 1) maps through the pinhole model
    // with z = 0, which collapses the third rotation column.
    const std::array<double, 9> m = {r[0], r[1], t[0], r[3], r[4], t[1], r[6], r[7], t[2]};
    std::array<double, 9> h{};
    const std::array<double, 9> k = {cam.fx, cam.skew, cam.u0, 0.0, cam.fy, cam.v0, 0.0, 0.0, 1.0};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double sum = 0.0;
            for (int l = 0; l < 3; ++l) {
                sum += k[static_cast<std::size_t>(i) * 3 + l] * m[static_cast<std::size_t>(l) * 3 + j];
            }
            h[static_cast<std::size_t>(i) * 3 + j] = sum;
        }
    }
    return Homography::from_row_major(h);
}

void ObjectSpec::validate() const {
    if (waypoints.empty()) throw InvalidInput("ObjectSpec: at least one waypoint required");
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        if (waypoints[i].t < waypoints[i - 1].t) {
            throw InvalidInput("ObjectSpec: waypoints must be time-sorted");
        }
    }
    if (!(extent >= 0.0)) throw InvalidInput("ObjectSpec: extent must be non-negative");
    if (category.empty()) throw InvalidInput("ObjectSpec: category required");
}

Point2 ObjectSpec::position_at(double t) const {
    if (waypoints.empty()) throw InvalidInput("ObjectSpec: no waypoints");
    if (t <= waypoints.front().t) return {waypoints.front().x, waypoints.front().y};
    if (t >= waypoints.back().t) return {waypoints.back().x, waypoints.back().y};
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        if (t <= waypoints[i].t) {
            const Waypoint& a = waypoints[i - 1];
            const Waypoint& b = waypoints[i];
            if (b.t == a.t) return {b.x, b.y};
            const double f = (t - a.t) / (b.t - a.t);
            return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
        }
    }
    return {waypoints.back().x, waypoints.back().y};
}

bool ObjectSpec::alive_at(double t) const {
    if (waypoints.size() <= 1) return true;  // static prop, present throughout
    return t >= waypoints.front().t && t <= waypoints.back().t;
}

void SensorNoiseModel::validate() const {
    const bool ok = radar_range_std >= 0.0 && radar_azimuth_std >= 0.0 &&
                    camera_pixel_std >= 0.0 && radar_dropout_prob >= 0.0 &&
                    radar_dropout_prob <= 1.0 && camera_dropout_prob >= 0.0 &&
                    camera_dropout_prob <= 1.0 && radar_false_positive_rate >= 0.0 &&
                    camera_false_positive_rate >= 0.0 && embedding_noise_std >= 0.0;
    if (!ok) throw InvalidInput("SensorNoiseModel: parameters out of range");
}

const char* to_string(SensorKind sensor) {
    return sensor == SensorKind::kRadar ? "radar" : "camera";
}

void FailureWindow::validate() const {
    if (!(t_start < t_end)) throw InvalidInput("FailureWindow: t_start must precede t_end");
}

void Scenario::validate() const {
    if (!(duration_s > 0.0)) throw InvalidInput("Scenario: duration must be positive");
    if (!(frame_rate_hz > 0.0)) throw InvalidInput("Scenario: frame rate must be positive");
    if (!(area_length_m > 0.0) || !(area_width_m > 0.0)) {
        throw InvalidInput("Scenario: area dimensions must be positive");
    }
    camera.validate();
    std::vector<std::int64_t> ids;
    for (const ObjectSpec& obj : objects) {
        obj.validate();
        ids.push_back(obj.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw InvalidInput("Scenario: object ids must be unique");
    }
}

Embedding make_latent(std::uint64_t seed, std::int64_t object_id) {
    auto rng = make_rng(derive_seed(seed, kLatentNamespace),
                        static_cast<std::uint64_t>(object_id));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Embedding latent{};
    double norm_sq = 0.0;
    for (double& v : latent) {
        v = gauss(rng);
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    for (double& v : latent) v /= norm;
    return latent;
}

namespace {

Embedding perturbed(const Embedding& latent, double per_component_std, std::mt19937_64& rng) {
    if (per_component_std <= 0.0) return latent;  // already unit-normalized
    std::normal_distribution<double> gauss(0.0, 1.0);
    Embedding out{};
    double norm_sq = 0.0;
    for (int i = 0; i < kEmbeddingDim; ++i) {
        out[i] = latent[i] + per_component_std * gauss(rng);
        norm_sq += out[i] * out[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= 0.0) return latent;  // all-cancelling noise; vanishing probability
    for (double& v : out) v /= norm;
    return out;
}

}  // namespace

std::pair<Embedding, Embedding> sample_embeddings(const Embedding& latent, double noise_std,
                                                  std::uint64_t seed) {
    if (!(noise_std >= 0.0)) throw InvalidInput("sample_embeddings: noise_std must be >= 0");
    auto rng = make_rng(seed, kStreamEmbeddings);
    // noise_std is the expected total perturbation norm; each of the 128
    // components gets an equal share of the variance.
    const double per_component = noise_std / std::sqrt(static_cast<double>(kEmbeddingDim));
    Embedding first = perturbed(latent, per_component, rng);
    Embedding second = perturbed(latent, per_component, rng);
    return {first, second};
}

namespace {

struct ObjectObservation {
    const ObjectSpec* spec = nullptr;
    Point2 position;       // ground truth center
    Embedding radar_emb{};
    Embedding camera_emb{};
};

// Point of the footprint circle closest to the sensor rig at the origin;
// the camera sees this ground-contact edge as the bbox bottom.
Point2 near_edge(const Point2& center, double extent) {
    if (extent <= 0.0) return center;
    const double dist = std::hypot(center.x, center.y);
    if (dist <= extent) return center;  // on top of the rig; keep the center
    const double f = extent / dist;
    return {center.x * (1.0 - f), center.y * (1.0 - f)};
}

CameraDetection render_camera_detection(const CameraModel& cam, const ObjectObservation& obs,
                                        double pixel_std, std::mt19937_64& rng) {
    const Point2 edge = near_edge(obs.position, obs.spec->extent);
    const Point2 anchor_px = ground_truth_projection(cam, edge);

    // Lateral extremes of the footprint at the center's depth and a nominal
    // height of twice the footprint radius give the rest of the box.
    const double extent = obs.spec->extent;
    double half_width_px = 0.0;
    if (extent > 0.0) {
        const double dist = std::hypot(obs.position.x, obs.position.y);
        const Point2 perp = dist > 0.0 ? Point2{-obs.position.y / dist, obs.position.x / dist}
                                       : Point2{1.0, 0.0};
        const Point2 left{obs.position.x - extent * perp.x, obs.position.y - extent * perp.y};
        const Point2 right{obs.position.x + extent * perp.x, obs.position.y + extent * perp.y};
        const double ul = ground_truth_projection(cam, left).x;
        const double ur = ground_truth_projection(cam, right).x;
        half_width_px = 0.5 * std::abs(ur - ul);
    }
    const double height_m = std::max(2.0 * extent, 0.5);
    const double top_px = project_point(cam, edge.x, edge.y, height_m).y;

    CameraDetection det;
    det.category = obs.spec->category;
    det.confidence = 1.0;
    if (pixel_std > 0.0) {
        std::normal_distribution<double> gauss(0.0, pixel_std);
        const double du = gauss(rng);
        const double dv = gauss(rng);
        const double dw = gauss(rng);  // width jitter
        det.bbox = BoundingBox{anchor_px.x + du - std::abs(half_width_px + dw),
                               top_px + dv,
                               anchor_px.x + du + std::abs(half_width_px + dw),
                               anchor_px.y + dv};
    } else {
        det.bbox = BoundingBox{anchor_px.x - half_width_px, top_px, anchor_px.x + half_width_px,
                               anchor_px.y};
    }
    if (det.bbox.y1 > det.bbox.y2) std::swap(det.bbox.y1, det.bbox.y2);
    det.embedding = obs.camera_emb;
    return det;
}

RadarDetection render_radar_detection(const ObjectObservation& obs, double range_std,
                                      double azimuth_std, std::mt19937_64& rng) {
    PolarPoint truth = cartesian_to_polar(obs.position);
    RadarDetection det;
    if (range_std > 0.0 || azimuth_std > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        truth.range = std::max(0.0, truth.range + range_std * gauss(rng));
        truth.azimuth += azimuth_std * gauss(rng);
    }
    det.position = truth;
    // RA-plane box around the position; the center is the position itself.
    const double extent = std::max(obs.spec->extent, 0.1);
    const double az_extent = extent / std::max(truth.range, 1.0);
    det.bbox = BoundingBox{truth.range - extent, truth.azimuth - az_extent, truth.range + extent,
                           truth.azimuth + az_extent};
    det.category = obs.spec->category;
    det.embedding = obs.radar_emb;
    return det;
}

bool sensor_failed(const std::vector<FailureWindow>& failures, SensorKind sensor, double t) {
    for (const FailureWindow& w : failures) {
        if (w.sensor == sensor && w.covers(t)) return true;
    }
    return false;
}

}  // namespace

SceneData synthesize_scene(const Scenario& scenario, const SensorNoiseModel& noise,
                           const std::vector<FailureWindow>& failures, std::uint64_t seed) {
    scenario.validate();
    noise.validate();
    for (const FailureWindow& w : failures) w.validate();

    std::vector<Embedding> latents;
    latents.reserve(scenario.objects.size());
    for (const ObjectSpec& obj : scenario.objects) {
        latents.push_back(make_latent(seed, obj.id));
    }

    const std::size_t n_frames =
        static_cast<std::size_t>(std::llround(scenario.duration_s * scenario.frame_rate_hz));
    SceneData scene;
    scene.frames.reserve(n_frames);
    scene.truth.reserve(n_frames);

    for (std::size_t frame = 0; frame < n_frames; ++frame) {
        const double t = static_cast<double>(frame) / scenario.frame_rate_hz;

        GroundTruthFrame truth_frame;
        truth_frame.t = t;
        std::vector<ObjectObservation> live;
        auto emb_rng = frame_rng(seed, frame, kStreamEmbeddings);
        for (std::size_t i = 0; i < scenario.objects.size(); ++i) {
            const ObjectSpec& obj = scenario.objects[i];
            if (!obj.alive_at(t)) continue;
            ObjectObservation obs;
            obs.spec = &obj;
            obs.position = obj.position_at(t);
            const double per_component =
                noise.embedding_noise_std / std::sqrt(static_cast<double>(kEmbeddingDim));
            obs.radar_emb = perturbed(latents[i], per_component, emb_rng);
            obs.camera_emb = perturbed(latents[i], per_component, emb_rng);
            live.push_back(obs);
            truth_frame.entries.push_back({obj.id, obj.category, obs.position});
        }

        FramePair pair;
        pair.t = t;

        if (!sensor_failed(failures, SensorKind::kRadar, t)) {
            auto drop_rng = frame_rng(seed, frame, kStreamRadarDropout);
            auto noise_rng = frame_rng(seed, frame, kStreamRadarNoise);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (const ObjectObservation& obs : live) {
                const bool dropped = unit(drop_rng) < noise.radar_dropout_prob;
                if (dropped) continue;
                pair.radar.push_back(
                    render_radar_detection(obs, noise.radar_range_std, noise.radar_azimuth_std,
                                           noise_rng));
            }
            if (noise.radar_false_positive_rate > 0.0) {
                auto fp_rng = frame_rng(seed, frame, kStreamRadarFalsePositives);
                std::poisson_distribution<int> count(noise.radar_false_positive_rate);
                std::uniform_real_distribution<double> ux(-scenario.area_width_m / 2.0,
                                                          scenario.area_width_m / 2.0);
                std::uniform_real_distribution<double> uy(1.0, scenario.area_length_m);
                std::normal_distribution<double> gauss(0.0, 1.0);
                const int n = count(fp_rng);
                for (int k = 0; k < n; ++k) {
                    RadarDetection det;
                    det.position = cartesian_to_polar({ux(fp_rng), uy(fp_rng)});
                    det.bbox = BoundingBox{det.position.range - 0.2, det.position.azimuth - 0.01,
                                           det.position.range + 0.2, det.position.azimuth + 0.01};
                    Embedding clutter{};
                    double norm_sq = 0.0;
                    for (double& v : clutter) {
                        v = gauss(fp_rng);
                        norm_sq += v * v;
                    }
                    for (double& v : clutter) v /= std::sqrt(norm_sq);
                    det.embedding = clutter;
                    pair.radar.push_back(std::move(det));
                }
            }
        }

        if (!sensor_failed(failures, SensorKind::kCamera, t)) {
            auto drop_rng = frame_rng(seed, frame, kStreamCameraDropout);
            auto noise_rng = frame_rng(seed, frame, kStreamCameraNoise);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (const ObjectObservation& obs : live) {
                const bool dropped = unit(drop_rng) < noise.camera_dropout_prob;
                if (dropped) continue;
                pair.camera.push_back(render_camera_detection(scenario.camera, obs,
                                                              noise.camera_pixel_std, noise_rng));
            }
            if (noise.camera_false_positive_rate > 0.0) {
                auto fp_rng = frame_rng(seed, frame, kStreamCameraFalsePositives);
                std::poisson_distribution<int> count(noise.camera_false_positive_rate);
                std::uniform_real_distribution<double> uu(0.0, scenario.camera.image_width);
                std::uniform_real_distribution<double> uv(0.0, scenario.camera.image_height);
                std::normal_distribution<double> gauss(0.0, 1.0);
                const int n = count(fp_rng);
                for (int k = 0; k < n; ++k) {
                    CameraDetection det;
                    const double u = uu(fp_rng);
                    const double v = uv(fp_rng);
                    det.bbox = BoundingBox{u - 5.0, std::max(0.0, v - 10.0), u + 5.0, v};
                    det.category = scenario.objects.empty() ? std::string("unknown")
                                                            : scenario.objects.front().category;
                    det.confidence = 0.5;
                    Embedding clutter{};
                    double norm_sq = 0.0;
                    for (double& c : clutter) {
                        c = gauss(fp_rng);
                        norm_sq += c * c;
                    }
                    for (double& c : clutter) c /= std::sqrt(norm_sq);
                    det.embedding = clutter;
                    pair.camera.push_back(std::move(det));
                }
            }
        }

        scene.frames.push_back(std::move(pair));
        scene.truth.push_back(std::move(truth_frame));
    }
    return scene;
}

}  // namespace rcfusion
