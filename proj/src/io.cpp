#include "rcfusion/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "rcfusion/errors.hpp"

namespace rcfusion {

namespace {

using nlohmann::json;

json parse_json_line(const std::string& line, long line_no) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_no);
    }
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(e.what()) + " in " + path);
    }
}

std::string where(const std::string& context, long line_no) {
    return line_no > 0 ? context + " (line " + std::to_string(line_no) + ")" : context;
}

const json& require_field(const json& obj, const char* key, const std::string& context,
                          long line_no = 0) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(where(context, line_no) + ": missing required field '" + key + "'");
    }
    return *it;
}

double require_number(const json& obj, const char* key, const std::string& context,
                      long line_no = 0) {
    const json& value = require_field(obj, key, context, line_no);
    if (!value.is_number()) {
        throw SchemaError(where(context, line_no) + ": field '" + key + "' must be a number");
    }
    return value.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) {
        throw SchemaError(context + ": field '" + key + "' must be a number");
    }
    return it->get<double>();
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw SchemaError(context + ": unknown key '" + key + "'");
        }
    }
}

BoundingBox parse_bbox(const json& value, const std::string& context, long line_no) {
    if (!value.is_array() || value.size() != 4) {
        throw SchemaError(where(context, line_no) + ": bbox must be an array of 4 numbers");
    }
    for (const json& v : value) {
        if (!v.is_number()) {
            throw SchemaError(where(context, line_no) + ": bbox must be an array of 4 numbers");
        }
    }
    BoundingBox bbox{value[0].get<double>(), value[1].get<double>(), value[2].get<double>(),
                     value[3].get<double>()};
    if (!bbox.valid()) {
        throw SchemaError(where(context, line_no) + ": bbox requires x1 <= x2 and y1 <= y2");
    }
    return bbox;
}

std::optional<Embedding> parse_embedding(const json& obj, const std::string& context,
                                         long line_no) {
    auto it = obj.find("embedding");
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_array() || it->size() != static_cast<std::size_t>(kEmbeddingDim)) {
        throw SchemaError(where(context, line_no) + ": embedding must hold " +
                          std::to_string(kEmbeddingDim) + " numbers");
    }
    Embedding e{};
    for (int i = 0; i < kEmbeddingDim; ++i) {
        const json& v = (*it)[static_cast<std::size_t>(i)];
        if (!v.is_number()) {
            throw SchemaError(where(context, line_no) + ": embedding must hold numbers only");
        }
        e[static_cast<std::size_t>(i)] = v.get<double>();
    }
    return e;
}

json embedding_to_json(const Embedding& e) {
    json arr = json::array();
    for (double v : e) arr.push_back(v);
    return arr;
}

json bbox_to_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

// Runs fn over every non-blank line; fn gets (parsed json, 1-based line number).
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        fn(parse_json_line(line, line_no), line_no);
    }
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    fs::path temp = target;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("cannot open " + temp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw InvalidInput("write failed for " + temp.string());
    }
    fs::rename(temp, target);
}

std::vector<FramePair> read_frames(const std::string& path) {
    std::vector<FramePair> pairs;
    for_each_line(path, [&](const json& obj, long line_no) {
        const std::string context = "frame log";
        if (!obj.is_object()) throw SchemaError(where(context, line_no) + ": expected an object");
        FramePair pair;
        pair.t = require_number(obj, "t", context, line_no);
        const json& radar = require_field(obj, "radar", context, line_no);
        const json& camera = require_field(obj, "camera", context, line_no);
        if (!radar.is_array() || !camera.is_array()) {
            throw SchemaError(where(context, line_no) + ": radar and camera must be arrays");
        }
        for (const json& det_json : radar) {
            RadarDetection det;
            det.position.range = require_number(det_json, "r", context, line_no);
            det.position.azimuth = require_number(det_json, "theta", context, line_no);
            det.bbox = parse_bbox(require_field(det_json, "bbox", context, line_no), context,
                                  line_no);
            auto cat = det_json.find("category");
            if (cat != det_json.end() && !cat->is_null()) {
                if (!cat->is_string()) {
                    throw SchemaError(where(context, line_no) + ": category must be a string");
                }
                det.category = cat->get<std::string>();
            }
            det.embedding = parse_embedding(det_json, context, line_no);
            pair.radar.push_back(std::move(det));
        }
        for (const json& det_json : camera) {
            CameraDetection det;
            det.bbox = parse_bbox(require_field(det_json, "bbox", context, line_no), context,
                                  line_no);
            const json& cat = require_field(det_json, "category", context, line_no);
            if (!cat.is_string()) {
                throw SchemaError(where(context, line_no) + ": category must be a string");
            }
            det.category = cat.get<std::string>();
            det.confidence = number_or(det_json, "confidence", 1.0, where(context, line_no));
            if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
                throw SchemaError(where(context, line_no) + ": confidence must be in [0,1]");
            }
            det.embedding = parse_embedding(det_json, context, line_no);
            pair.camera.push_back(std::move(det));
        }
        pairs.push_back(std::move(pair));
    });
    return pairs;
}

void write_frames(const std::vector<FramePair>& pairs, const std::string& path) {
    std::ostringstream out;
    for (const FramePair& pair : pairs) {
        json obj;
        obj["t"] = pair.t;
        json radar = json::array();
        for (const RadarDetection& det : pair.radar) {
            json d;
            d["r"] = det.position.range;
            d["theta"] = det.position.azimuth;
            d["bbox"] = bbox_to_json(det.bbox);
            d["category"] = det.category ? json(*det.category) : json(nullptr);
            if (det.embedding) d["embedding"] = embedding_to_json(*det.embedding);
            radar.push_back(std::move(d));
        }
        json camera = json::array();
        for (const CameraDetection& det : pair.camera) {
            json d;
            d["bbox"] = bbox_to_json(det.bbox);
            d["category"] = det.category;
            d["confidence"] = det.confidence;
            if (det.embedding) d["embedding"] = embedding_to_json(*det.embedding);
            camera.push_back(std::move(d));
        }
        obj["radar"] = std::move(radar);
        obj["camera"] = std::move(camera);
        out << obj.dump() << '\n';
    }
    atomic_write_text(path, out.str());
}

GroundTruth read_ground_truth(const std::string& path) {
    GroundTruth truth;
    for_each_line(path, [&](const json& obj, long line_no) {
        const std::string context = "ground-truth log";
        if (!obj.is_object()) throw SchemaError(where(context, line_no) + ": expected an object");
        GroundTruthFrame frame;
        frame.t = require_number(obj, "t", context, line_no);
        const json& objects = require_field(obj, "objects", context, line_no);
        if (!objects.is_array()) {
            throw SchemaError(where(context, line_no) + ": objects must be an array");
        }
        for (const json& entry_json : objects) {
            GroundTruthEntry entry;
            const json& id = require_field(entry_json, "id", context, line_no);
            if (!id.is_number_integer()) {
                throw SchemaError(where(context, line_no) + ": id must be an integer");
            }
            entry.object_id = id.get<std::int64_t>();
            const json& cat = require_field(entry_json, "category", context, line_no);
            if (!cat.is_string()) {
                throw SchemaError(where(context, line_no) + ": category must be a string");
            }
            entry.category = cat.get<std::string>();
            entry.position.x = require_number(entry_json, "x", context, line_no);
            entry.position.y = require_number(entry_json, "y", context, line_no);
            frame.entries.push_back(std::move(entry));
        }
        truth.push_back(std::move(frame));
    });
    return truth;
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
    std::ostringstream out;
    for (const GroundTruthFrame& frame : truth) {
        json obj;
        obj["t"] = frame.t;
        json objects = json::array();
        for (const GroundTruthEntry& entry : frame.entries) {
            json e;
            e["id"] = entry.object_id;
            e["category"] = entry.category;
            e["x"] = entry.position.x;
            e["y"] = entry.position.y;
            objects.push_back(std::move(e));
        }
        obj["objects"] = std::move(objects);
        out << obj.dump() << '\n';
    }
    atomic_write_text(path, out.str());
}

std::vector<TrackLogEntry> read_track_log(const std::string& path) {
    std::vector<TrackLogEntry> entries;
    for_each_line(path, [&](const json& obj, long line_no) {
        const std::string context = "track log";
        if (!obj.is_object()) throw SchemaError(where(context, line_no) + ": expected an object");
        TrackLogEntry entry;
        const json& branch = require_field(obj, "branch", context, line_no);
        if (!branch.is_string()) {
            throw SchemaError(where(context, line_no) + ": branch must be a string");
        }
        entry.branch = branch.get<std::string>();
        entry.frame.t = require_number(obj, "t", context, line_no);
        const json& tracks = require_field(obj, "tracks", context, line_no);
        if (!tracks.is_array()) {
            throw SchemaError(where(context, line_no) + ": tracks must be an array");
        }
        for (const json& track_json : tracks) {
            TrackSnapshot snap;
            const json& id = require_field(track_json, "id", context, line_no);
            if (!id.is_number_integer()) {
                throw SchemaError(where(context, line_no) + ": id must be an integer");
            }
            snap.id = id.get<std::int64_t>();
            snap.position.x = require_number(track_json, "x", context, line_no);
            snap.position.y = require_number(track_json, "y", context, line_no);
            auto cat = track_json.find("category");
            if (cat != track_json.end() && !cat->is_null()) {
                if (!cat->is_string()) {
                    throw SchemaError(where(context, line_no) + ": category must be a string");
                }
                snap.category = cat->get<std::string>();
            }
            entry.frame.tracks.push_back(std::move(snap));
        }
        entries.push_back(std::move(entry));
    });
    return entries;
}

void write_track_log(const std::vector<TrackLogEntry>& entries, const std::string& path) {
    std::ostringstream out;
    for (const TrackLogEntry& entry : entries) {
        json obj;
        obj["t"] = entry.frame.t;
        obj["branch"] = entry.branch;
        json tracks = json::array();
        for (const TrackSnapshot& snap : entry.frame.tracks) {
            json t;
            t["id"] = snap.id;
            t["x"] = snap.position.x;
            t["y"] = snap.position.y;
            t["category"] = snap.category ? json(*snap.category) : json(nullptr);
            tracks.push_back(std::move(t));
        }
        obj["tracks"] = std::move(tracks);
        out << obj.dump() << '\n';
    }
    atomic_write_text(path, out.str());
}

TrackLog select_branch(const std::vector<TrackLogEntry>& entries, const std::string& branch) {
    std::set<std::string> present;
    for (const TrackLogEntry& entry : entries) present.insert(entry.branch);

    std::string wanted = branch;
    if (wanted.empty()) {
        if (present.size() > 1) {
            std::string names;
            for (const std::string& name : present) {
                if (!names.empty()) names += ", ";
                names += name;
            }
            throw InvalidInput("track log mixes branches (" + names +
                               "); select one with --branch");
        }
        wanted = present.empty() ? std::string() : *present.begin();
    } else if (!present.empty() && !present.contains(wanted)) {
        throw InvalidInput("track log has no '" + wanted + "' branch");
    }

    TrackLog log;
    for (const TrackLogEntry& entry : entries) {
        if (entry.branch == wanted) log.push_back(entry.frame);
    }
    return log;
}

namespace {

std::array<double, 9> parse_matrix9(const json& value, const std::string& context) {
    if (!value.is_array() || value.size() != 9) {
        throw SchemaError(context + ": homography must be an array of 9 numbers");
    }
    std::array<double, 9> h{};
    for (std::size_t i = 0; i < 9; ++i) {
        if (!value[i].is_number()) {
            throw SchemaError(context + ": homography must be an array of 9 numbers");
        }
        h[i] = value[i].get<double>();
    }
    return h;
}

Homography homography_from_json(const json& value, const std::string& context) {
    try {
        return Homography::from_row_major(parse_matrix9(value, context));
    } catch (const InvalidInput& e) {
        throw InvalidCalibration(context + ": " + e.what());
    }
}

RegionStats region_stats_from_json(const json& obj, const std::string& context) {
    RegionStats stats;
    stats.total = static_cast<std::size_t>(number_or(obj, "total", 0.0, context));
    stats.train = static_cast<std::size_t>(number_or(obj, "train", 0.0, context));
    stats.inliers = static_cast<std::size_t>(number_or(obj, "inliers", 0.0, context));
    stats.train_error_m = number_or(obj, "train_error_m", 0.0, context);
    auto it = obj.find("holdout_error_m");
    if (it != obj.end() && !it->is_null()) {
        if (!it->is_number()) {
            throw SchemaError(context + ": holdout_error_m must be a number or null");
        }
        stats.holdout_error_m = it->get<double>();
    }
    return stats;
}

json region_stats_to_json(const RegionStats& stats) {
    json obj;
    obj["total"] = stats.total;
    obj["train"] = stats.train;
    obj["inliers"] = stats.inliers;
    obj["train_error_m"] = stats.train_error_m;
    obj["holdout_error_m"] = stats.holdout_error_m ? json(*stats.holdout_error_m) : json(nullptr);
    return obj;
}

}  // namespace

CalibrationModel read_calibration(const std::string& path) {
    const json obj = parse_json_file(path);
    const std::string context = "calibration file";
    if (!obj.is_object()) throw SchemaError(context + ": expected an object");

    CalibrationModel model;
    model.image_width = require_number(obj, "image_width", context);
    model.image_height = require_number(obj, "image_height", context);
    model.split_fraction = number_or(obj, "split_fraction", 2.0 / 3.0, context);

    const json* upper = nullptr;
    if (auto it = obj.find("h_upper"); it != obj.end()) {
        upper = &*it;
    } else if (auto legacy = obj.find("h"); legacy != obj.end()) {
        upper = &*legacy;  // single-homography layout
    }
    if (upper == nullptr) {
        throw SchemaError(context + ": missing required field 'h_upper'");
    }
    model.h_upper = homography_from_json(*upper, context);

    if (auto it = obj.find("h_lower"); it != obj.end()) {
        model.h_lower = homography_from_json(*it, context);
    } else {
        model.h_lower = model.h_upper;  // legacy single-homography file
        model.stats.shared_fallback = true;
    }

    if (auto it = obj.find("stats"); it != obj.end() && it->is_object()) {
        const json& stats = *it;
        if (auto u = stats.find("upper"); u != stats.end()) {
            model.stats.upper = region_stats_from_json(*u, context);
        }
        if (auto l = stats.find("lower"); l != stats.end()) {
            model.stats.lower = region_stats_from_json(*l, context);
        }
        if (auto f = stats.find("shared_fallback"); f != stats.end()) {
            if (!f->is_boolean()) {
                throw SchemaError(context + ": shared_fallback must be a boolean");
            }
            model.stats.shared_fallback = model.stats.shared_fallback || f->get<bool>();
        }
    }
    model.validate();
    return model;
}

void write_calibration(const CalibrationModel& model, const std::string& path) {
    json obj;
    obj["image_width"] = model.image_width;
    obj["image_height"] = model.image_height;
    obj["split_fraction"] = model.split_fraction;
    json h_upper = json::array();
    json h_lower = json::array();
    for (double v : model.h_upper.coeffs()) h_upper.push_back(v);
    for (double v : model.h_lower.coeffs()) h_lower.push_back(v);
    obj["h_upper"] = std::move(h_upper);
    obj["h_lower"] = std::move(h_lower);
    json stats;
    stats["upper"] = region_stats_to_json(model.stats.upper);
    stats["lower"] = region_stats_to_json(model.stats.lower);
    stats["shared_fallback"] = model.stats.shared_fallback;
    obj["stats"] = std::move(stats);
    atomic_write_text(path, obj.dump(2) + "\n");
}

namespace {

CameraModel camera_from_json(const json& obj, const std::string& context,
                             std::optional<double>* pitch_out) {
    if (obj.contains("rotation") || obj.contains("translation")) {
        reject_unknown_keys(obj,
                            {"fx", "fy", "u0", "v0", "skew", "rotation", "translation",
                             "image_width", "image_height"},
                            context);
        CameraModel cam;
        cam.fx = number_or(obj, "fx", cam.fx, context);
        cam.fy = number_or(obj, "fy", cam.fy, context);
        cam.u0 = number_or(obj, "u0", cam.u0, context);
        cam.v0 = number_or(obj, "v0", cam.v0, context);
        cam.skew = number_or(obj, "skew", cam.skew, context);
        cam.image_width = number_or(obj, "image_width", cam.image_width, context);
        cam.image_height = number_or(obj, "image_height", cam.image_height, context);
        const json& rot = require_field(obj, "rotation", context);
        if (!rot.is_array() || rot.size() != 9) {
            throw SchemaError(context + ": rotation must be an array of 9 numbers");
        }
        for (std::size_t i = 0; i < 9; ++i) cam.rotation[i] = rot[i].get<double>();
        const json& tr = require_field(obj, "translation", context);
        if (!tr.is_array() || tr.size() != 3) {
            throw SchemaError(context + ": translation must be an array of 3 numbers");
        }
        for (std::size_t i = 0; i < 3; ++i) cam.translation[i] = tr[i].get<double>();
        cam.validate();
        return cam;
    }
    reject_unknown_keys(obj,
                        {"height_m", "pitch_down_deg", "pitch_down_rad", "fx", "fy",
                         "image_width", "image_height"},
                        context);
    const double height = number_or(obj, "height_m", 2.5, context);
    double pitch = number_or(obj, "pitch_down_rad", 0.26, context);
    if (obj.contains("pitch_down_deg")) {
        if (obj.contains("pitch_down_rad")) {
            throw SchemaError(context + ": give pitch_down_deg or pitch_down_rad, not both");
        }
        pitch = number_or(obj, "pitch_down_deg", 0.0, context) * M_PI / 180.0;
    }
    if (pitch_out != nullptr) *pitch_out = pitch;
    return make_tilted_camera(height, pitch, number_or(obj, "fx", 500.0, context),
                              number_or(obj, "fy", 500.0, context),
                              number_or(obj, "image_width", 640.0, context),
                              number_or(obj, "image_height", 480.0, context));
}

SensorNoiseModel noise_from_json(const json& obj, const std::string& context) {
    reject_unknown_keys(obj,
                        {"radar_range_std", "radar_azimuth_std", "camera_pixel_std",
                         "radar_dropout_prob", "camera_dropout_prob", "radar_false_positive_rate",
                         "camera_false_positive_rate", "embedding_noise_std"},
                        context);
    SensorNoiseModel noise;
    noise.radar_range_std = number_or(obj, "radar_range_std", 0.0, context);
    noise.radar_azimuth_std = number_or(obj, "radar_azimuth_std", 0.0, context);
    noise.camera_pixel_std = number_or(obj, "camera_pixel_std", 0.0, context);
    noise.radar_dropout_prob = number_or(obj, "radar_dropout_prob", 0.0, context);
    noise.camera_dropout_prob = number_or(obj, "camera_dropout_prob", 0.0, context);
    noise.radar_false_positive_rate = number_or(obj, "radar_false_positive_rate", 0.0, context);
    noise.camera_false_positive_rate = number_or(obj, "camera_false_positive_rate", 0.0, context);
    noise.embedding_noise_std = number_or(obj, "embedding_noise_std", 0.0, context);
    noise.validate();
    return noise;
}

}  // namespace

ScenarioFile read_scenario(const std::string& path) {
    const json obj = parse_json_file(path);
    const std::string context = "scenario file";
    if (!obj.is_object()) throw SchemaError(context + ": expected an object");
    reject_unknown_keys(obj,
                        {"duration_s", "frame_rate_hz", "area_length_m", "area_width_m", "camera",
                         "objects", "noise", "failures"},
                        context);

    ScenarioFile file;
    Scenario& scenario = file.scenario;
    scenario.duration_s = number_or(obj, "duration_s", scenario.duration_s, context);
    scenario.frame_rate_hz = number_or(obj, "frame_rate_hz", scenario.frame_rate_hz, context);
    scenario.area_length_m = number_or(obj, "area_length_m", scenario.area_length_m, context);
    scenario.area_width_m = number_or(obj, "area_width_m", scenario.area_width_m, context);
    if (auto it = obj.find("camera"); it != obj.end()) {
        if (!it->is_object()) throw SchemaError(context + ": camera must be an object");
        scenario.camera = camera_from_json(*it, context + " camera", &file.camera_pitch_rad);
    } else {
        file.camera_pitch_rad = 0.26;  // the default camera's tilt
    }

    const json& objects = require_field(obj, "objects", context);
    if (!objects.is_array()) throw SchemaError(context + ": objects must be an array");
    for (const json& obj_json : objects) {
        reject_unknown_keys(obj_json, {"id", "category", "extent", "reflectivity", "waypoints"},
                            context + " object");
        ObjectSpec spec;
        const json& id = require_field(obj_json, "id", context);
        if (!id.is_number_integer()) throw SchemaError(context + ": object id must be an integer");
        spec.id = id.get<std::int64_t>();
        const json& cat = require_field(obj_json, "category", context);
        if (!cat.is_string()) throw SchemaError(context + ": object category must be a string");
        spec.category = cat.get<std::string>();
        spec.extent = number_or(obj_json, "extent", 0.0, context);
        spec.reflectivity = number_or(obj_json, "reflectivity", 1.0, context);
        const json& waypoints = require_field(obj_json, "waypoints", context);
        if (!waypoints.is_array()) throw SchemaError(context + ": waypoints must be an array");
        for (const json& wp : waypoints) {
            if (!wp.is_array() || wp.size() != 3 || !wp[0].is_number() || !wp[1].is_number() ||
                !wp[2].is_number()) {
                throw SchemaError(context + ": each waypoint must be [t, x, y]");
            }
            spec.waypoints.push_back({wp[0].get<double>(), wp[1].get<double>(),
                                      wp[2].get<double>()});
        }
        spec.validate();
        scenario.objects.push_back(std::move(spec));
    }

    if (auto it = obj.find("noise"); it != obj.end()) {
        if (!it->is_object()) throw SchemaError(context + ": noise must be an object");
        file.noise = noise_from_json(*it, context + " noise");
    }
    if (auto it = obj.find("failures"); it != obj.end()) {
        if (!it->is_array()) throw SchemaError(context + ": failures must be an array");
        for (const json& w : *it) {
            reject_unknown_keys(w, {"sensor", "t_start", "t_end"}, context + " failure");
            FailureWindow window;
            const json& sensor = require_field(w, "sensor", context);
            if (sensor == "radar") {
                window.sensor = SensorKind::kRadar;
            } else if (sensor == "camera") {
                window.sensor = SensorKind::kCamera;
            } else {
                throw SchemaError(context + ": failure sensor must be 'radar' or 'camera'");
            }
            window.t_start = require_number(w, "t_start", context);
            window.t_end = require_number(w, "t_end", context);
            window.validate();
            file.failures.push_back(window);
        }
    }
    scenario.validate();
    return file;
}

std::string report_to_json(const ClearReport& report) {
    json obj;
    obj["frames"] = report.frames;
    obj["gt_total"] = report.gt_total;
    obj["matched"] = report.matched;
    obj["fp"] = report.fp;
    obj["fn"] = report.fn;
    obj["idsw"] = report.idsw;
    obj["fpr"] = report.fpr;
    obj["fnr"] = report.fnr;
    obj["idswr"] = report.idswr;
    obj["mota"] = report.mota;
    obj["motp"] = report.motp;
    obj["motp_paper"] = report.motp_paper;
    json per_category;
    for (const auto& [category, cat] : report.per_category) {
        json c;
        c["gt_total"] = cat.gt_total;
        c["fn"] = cat.fn;
        c["fp"] = cat.fp;
        c["idsw"] = cat.idsw;
        c["matched"] = cat.matched;
        c["motp"] = cat.motp;
        per_category[category] = std::move(c);
    }
    obj["per_category"] = std::move(per_category);
    return obj.dump(2) + "\n";
}

void write_report(const ClearReport& report, const std::string& path) {
    atomic_write_text(path, report_to_json(report));
}

void write_frame_accounts_csv(const ClearReport& report, const std::string& path) {
    std::ostringstream out;
    out << "t,gt,matched,fp,fn,idsw,mean_distance\n";
    for (const FrameAccount& account : report.frame_accounts) {
        out << account.t << ',' << account.gt << ',' << account.matched << ',' << account.fp << ','
            << account.fn << ',' << account.idsw << ',' << account.mean_distance << '\n';
    }
    atomic_write_text(path, out.str());
}

RunConfig read_run_config(const std::string& path) {
    const json obj = parse_json_file(path);
    const std::string context = "run config";
    if (!obj.is_object()) throw SchemaError(context + ": expected an object");
    reject_unknown_keys(obj, {"seed", "mode", "calibration", "tracker", "noise", "metrics"},
                        context);

    RunConfig config;
    if (auto it = obj.find("seed"); it != obj.end()) {
        if (!it->is_number_unsigned() && !it->is_number_integer()) {
            throw SchemaError(context + ": seed must be an integer");
        }
        config.seed = it->get<std::uint64_t>();
    }
    if (auto it = obj.find("mode"); it != obj.end()) {
        if (!it->is_string()) throw SchemaError(context + ": mode must be a string");
        config.mode = it->get<std::string>();
        if (config.mode != "radar" && config.mode != "camera" && config.mode != "fusion") {
            throw SchemaError(context + ": mode must be radar, camera, or fusion");
        }
    }
    if (auto it = obj.find("calibration"); it != obj.end()) {
        const std::string sub = context + " calibration";
        reject_unknown_keys(*it,
                            {"similarity_threshold", "block_size", "stride_blocks",
                             "split_fraction", "image_width", "image_height",
                             "ransac_max_iterations", "ransac_inlier_threshold_m",
                             "ransac_min_inliers", "holdout_fraction", "seed"},
                            sub);
        CalibrationConfig& cal = config.calibration;
        cal.similarity_threshold =
            number_or(*it, "similarity_threshold", cal.similarity_threshold, sub);
        cal.block.block_size =
            static_cast<int>(number_or(*it, "block_size", cal.block.block_size, sub));
        cal.block.stride_blocks =
            static_cast<int>(number_or(*it, "stride_blocks", cal.block.stride_blocks, sub));
        cal.split_fraction = number_or(*it, "split_fraction", cal.split_fraction, sub);
        cal.image_width = number_or(*it, "image_width", cal.image_width, sub);
        cal.image_height = number_or(*it, "image_height", cal.image_height, sub);
        cal.ransac.max_iterations = static_cast<int>(
            number_or(*it, "ransac_max_iterations", cal.ransac.max_iterations, sub));
        cal.ransac.inlier_threshold_m =
            number_or(*it, "ransac_inlier_threshold_m", cal.ransac.inlier_threshold_m, sub);
        cal.ransac.min_inliers =
            static_cast<int>(number_or(*it, "ransac_min_inliers", cal.ransac.min_inliers, sub));
        cal.holdout_fraction = number_or(*it, "holdout_fraction", cal.holdout_fraction, sub);
        cal.seed = static_cast<std::uint64_t>(number_or(*it, "seed", 0.0, sub));
        cal.ransac.seed = cal.seed;
    }
    if (auto it = obj.find("tracker"); it != obj.end()) {
        const std::string sub = context + " tracker";
        reject_unknown_keys(*it,
                            {"process_noise_accel", "meas_noise_radar", "meas_noise_camera",
                             "confirm_hits", "max_misses", "gate_distance", "sim_threshold",
                             "dist_threshold", "category_gating"},
                            sub);
        TrackerConfig& tracker = config.tracker;
        tracker.process_noise_accel =
            number_or(*it, "process_noise_accel", tracker.process_noise_accel, sub);
        tracker.meas_noise_radar =
            number_or(*it, "meas_noise_radar", tracker.meas_noise_radar, sub);
        tracker.meas_noise_camera =
            number_or(*it, "meas_noise_camera", tracker.meas_noise_camera, sub);
        tracker.confirm_hits =
            static_cast<int>(number_or(*it, "confirm_hits", tracker.confirm_hits, sub));
        tracker.max_misses =
            static_cast<int>(number_or(*it, "max_misses", tracker.max_misses, sub));
        tracker.gate_distance = number_or(*it, "gate_distance", tracker.gate_distance, sub);
        tracker.sim_threshold = number_or(*it, "sim_threshold", tracker.sim_threshold, sub);
        tracker.dist_threshold = number_or(*it, "dist_threshold", tracker.dist_threshold, sub);
        if (auto gate = it->find("category_gating"); gate != it->end()) {
            if (!gate->is_boolean()) {
                throw SchemaError(sub + ": category_gating must be a boolean");
            }
            tracker.category_gating = gate->get<bool>();
        }
        tracker.validate();
    }
    if (auto it = obj.find("noise"); it != obj.end()) {
        config.noise = noise_from_json(*it, context + " noise");
    }
    if (auto it = obj.find("metrics"); it != obj.end()) {
        const std::string sub = context + " metrics";
        reject_unknown_keys(*it, {"dist_threshold"}, sub);
        config.metrics_dist_threshold =
            number_or(*it, "dist_threshold", config.metrics_dist_threshold, sub);
    }
    return config;
}

}  // namespace rcfusion
