#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcfusion/calibration.hpp"
#include "rcfusion/detection.hpp"
#include "rcfusion/metrics.hpp"
#include "rcfusion/simulator.hpp"
#include "rcfusion/tracking.hpp"

namespace rcfusion {

/// Everything a full pipeline run needs. Loaded from JSON with unknown keys
/// rejected, so typos fail loudly instead of silently using defaults.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string mode = "fusion";  // radar | camera | fusion
    CalibrationConfig calibration;
    TrackerConfig tracker;
    SensorNoiseModel noise;
    double metrics_dist_threshold = 3.0;
};

/// Writes content to path via a temporary file plus rename, so readers never
/// observe a truncated file.
void atomic_write_text(const std::string& path, const std::string& content);

// Frame logs: JSON Lines, one FramePair per line.
std::vector<FramePair> read_frames(const std::string& path);
void write_frames(const std::vector<FramePair>& pairs, const std::string& path);

// Ground-truth logs: JSON Lines, one frame per line.
GroundTruth read_ground_truth(const std::string& path);
void write_ground_truth(const GroundTruth& truth, const std::string& path);

// Track logs: JSON Lines, one line per frame per branch.
struct TrackLogEntry {
    std::string branch;  // radar | camera | fusion
    TrackFrame frame;
};
std::vector<TrackLogEntry> read_track_log(const std::string& path);
void write_track_log(const std::vector<TrackLogEntry>& entries, const std::string& path);

/// Extracts one branch's frames from a mixed log. An empty branch name picks
/// the only branch present (InvalidInput when the log mixes several).
TrackLog select_branch(const std::vector<TrackLogEntry>& entries, const std::string& branch);

// Calibration files: single JSON object. Reading a file without h_lower
// falls back to the single-homography layout (h_upper reused, flagged).
CalibrationModel read_calibration(const std::string& path);
void write_calibration(const CalibrationModel& model, const std::string& path);

// Scenario description files: single JSON object.
struct ScenarioFile {
    Scenario scenario;
    SensorNoiseModel noise;
    std::vector<FailureWindow> failures;
    // Set when the camera was given in the height + pitch convenience form;
    // kept for display (the model itself stores a rotation matrix).
    std::optional<double> camera_pitch_rad;
};
ScenarioFile read_scenario(const std::string& path);

// Evaluation reports: single JSON object with sorted keys, so identical
// reports serialize byte-identically.
std::string report_to_json(const ClearReport& report);
void write_report(const ClearReport& report, const std::string& path);

/// Per-frame accounting as CSV (t, gt, matched, fp, fn, idsw, mean_distance).
void write_frame_accounts_csv(const ClearReport& report, const std::string& path);

RunConfig read_run_config(const std::string& path);

}  // namespace rcfusion
