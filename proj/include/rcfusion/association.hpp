#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcfusion/detection.hpp"
#include "rcfusion/geometry.hpp"

namespace rcfusion {

/// Rectangular cost matrix in meters. Gated cells are marked infeasible with
/// an infinity sentinel and never enter an assignment.
class CostMatrix {
public:
    CostMatrix() = default;
    CostMatrix(std::size_t rows, std::size_t cols);

    static constexpr double infeasible() { return std::numeric_limits<double>::infinity(); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double at(std::size_t r, std::size_t c) const;
    void set(std::size_t r, std::size_t c, double cost);
    void set_infeasible(std::size_t r, std::size_t c);
    bool feasible(std::size_t r, std::size_t c) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Minimum-cost assignment over the feasible cells, maximizing the number of
/// assigned pairs first. Among optima, returns the lexicographically smallest
/// (row, col) pair set. Pairs come back sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> hungarian(const CostMatrix& costs);

enum class MatchStage {
    kFeature,   // stage 1: similarity + distance gate
    kPosition,  // stage 2: Hungarian on ground distance
};

struct MatchedPair {
    std::size_t radar_index = 0;
    std::size_t camera_index = 0;
    MatchStage stage = MatchStage::kFeature;
};

struct MatchResult {
    std::vector<MatchedPair> matched;
    std::vector<std::size_t> unmatched_radar;
    std::vector<std::size_t> unmatched_camera;
};

struct MatcherConfig {
    double similarity_threshold = 0.8;  // stage-1 score gate
    double gate_distance_m = 3.0;       // both stages, meters on the ground
    SimilarityFn similarity;            // defaults to the logistic provider
};

/// Camera detection paired with its ground-plane projection (meters).
struct GroundCameraDetection {
    CameraDetection detection;
    Point2 ground;
};

/// Two-stage radar-camera matcher: feature stage (similarity > threshold and
/// distance within gate, greedy by descending similarity), then a positional
/// Hungarian pass over the leftovers with pairs beyond the gate reverted.
MatchResult match_radar_camera(const std::vector<RadarDetection>& radar,
                               const std::vector<GroundCameraDetection>& camera_ground,
                               const MatcherConfig& cfg);

/// Category-consistency gate: present-but-different labels never match; a
/// missing label on either side passes (degraded-sensor behavior).
bool gate_by_category(const std::optional<std::string>& det_category,
                      const std::optional<std::string>& track_category);

}  // namespace rcfusion
