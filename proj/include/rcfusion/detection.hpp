#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rcfusion/geometry.hpp"

namespace rcfusion {

/// Axis-aligned box; pixels for camera detections, range-azimuth cells for
/// radar detections.
struct BoundingBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    bool valid() const { return x1 <= x2 && y1 <= y2; }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Lower center point ((x1+x2)/2, y2): the image anchor of a detection.
Point2 lower_center(const BoundingBox& bbox);

constexpr int kEmbeddingDim = 128;
using Embedding = std::array<double, kEmbeddingDim>;

/// Similarity provider contract: score in [0,1], symmetric, non-increasing
/// in embedding distance. Stands in for the learned cross-modal matcher.
using SimilarityFn = std::function<double(const Embedding&, const Embedding&)>;

/// Reference provider: logistic in the Euclidean distance d of the
/// unit-normalized embeddings, s = 1 / (1 + exp(10 (d - 0.5))).
double similarity(const Embedding& a, const Embedding& b);

SimilarityFn default_similarity();

struct CameraDetection {
    BoundingBox bbox;  // pixels
    std::string category;
    double confidence = 1.0;  // in [0,1]
    std::optional<Embedding> embedding;

    Point2 anchor() const { return lower_center(bbox); }
};

struct RadarDetection {
    PolarPoint position;  // r meters, theta radians in (-pi/2, pi/2)
    BoundingBox bbox;     // RA-plane cells
    std::optional<std::string> category;
    std::optional<Embedding> embedding;
};

struct RadarFrame {
    double t = 0.0;
    std::vector<RadarDetection> detections;
};

struct CameraFrame {
    double t = 0.0;
    std::vector<CameraDetection> detections;
};

/// Time-aligned radar + camera detections; t is the radar timestamp.
struct FramePair {
    double t = 0.0;
    std::vector<RadarDetection> radar;
    std::vector<CameraDetection> camera;
};

/// Greedy smallest-skew-first pairing of two sorted streams. Each frame is
/// used at most once; candidates with skew > max_skew are dropped. Output is
/// sorted by radar timestamp.
std::vector<FramePair> pair_frames(const std::vector<RadarFrame>& radar_stream,
                                   const std::vector<CameraFrame>& camera_stream,
                                   double max_skew_s);

}  // namespace rcfusion
