#include "rcfusion/cli.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rcfusion/calibration.hpp"
#include "rcfusion/errors.hpp"
#include "rcfusion/io.hpp"
#include "rcfusion/metrics.hpp"
#include "rcfusion/plot.hpp"
#include "rcfusion/simulator.hpp"
#include "rcfusion/tracking.hpp"

namespace rcfusion {

namespace {

std::string angle_text(double radians, bool degrees) {
    std::ostringstream out;
    out << std::setprecision(4);
    if (degrees) {
        out << radians * 180.0 / M_PI << " deg";
    } else {
        out << radians << " rad";
    }
    return out.str();
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed,
                 const std::string& frames_path, const std::string& gt_path, bool degrees) {
    const ScenarioFile file = read_scenario(scenario_path);
    const SceneData scene = synthesize_scene(file.scenario, file.noise, file.failures, seed);
    write_frames(scene.frames, frames_path);
    write_ground_truth(scene.truth, gt_path);
    std::cout << "simulated " << scene.frames.size() << " frames at " << file.scenario.frame_rate_hz
              << " Hz, " << file.scenario.objects.size() << " objects, seed " << seed << "\n";
    if (file.camera_pitch_rad) {
        std::cout << "camera pitch: " << angle_text(*file.camera_pitch_rad, degrees) << "\n";
    }
    std::cout << "frames: " << frames_path << "\nground truth: " << gt_path << "\n";
    return 0;
}

void print_region(const char* name, const RegionStats& stats) {
    std::cout << name << ": total=" << stats.total << " train=" << stats.train
              << " inliers=" << stats.inliers << " train_error=" << stats.train_error_m << " m";
    if (stats.holdout_error_m) {
        std::cout << " holdout_error=" << *stats.holdout_error_m << " m";
    }
    std::cout << "\n";
}

int cmd_calibrate(const std::string& frames_path, const std::string& out_path,
                  const std::string& config_path) {
    RunConfig config;
    if (!config_path.empty()) config = read_run_config(config_path);
    const std::vector<FramePair> pairs = read_frames(frames_path);
    const CalibrationModel model = calibrate(pairs, config.calibration);
    write_calibration(model, out_path);
    print_region("upper", model.stats.upper);
    print_region("lower", model.stats.lower);
    std::cout << "shared_fallback: " << (model.stats.shared_fallback ? "true" : "false") << "\n";
    std::cout << "calibration: " << out_path << "\n";
    return 0;
}

std::vector<GroundCameraDetection> to_ground(const std::vector<CameraDetection>& detections,
                                             const CalibrationModel& model) {
    std::vector<GroundCameraDetection> out;
    out.reserve(detections.size());
    for (const CameraDetection& det : detections) {
        try {
            out.push_back({det, project_to_ground(model, lower_center(det.bbox))});
        } catch (const ProjectiveDegeneracy&) {
            // An anchor on the homography's vanishing line has no ground
            // image; drop the detection rather than abort the run.
        }
    }
    return out;
}

TrackFrame to_track_frame(double t, const std::vector<Track>& tracks) {
    TrackFrame frame;
    frame.t = t;
    for (const Track& track : tracks) {
        frame.tracks.push_back({track.id, track.state.position(), track.category});
    }
    return frame;
}

int cmd_track(const std::string& frames_path, const std::string& calib_path,
              const std::string& mode, const std::string& out_path,
              const std::string& config_path) {
    RunConfig config;
    if (!config_path.empty()) config = read_run_config(config_path);

    if (mode != "radar" && calib_path.empty()) {
        std::cerr << "error: --calib is required for mode '" << mode << "'\n";
        return 2;
    }
    CalibrationModel model;
    if (!calib_path.empty()) model = read_calibration(calib_path);

    const std::vector<FramePair> pairs = read_frames(frames_path);
    FusionTracker tracker(config.tracker);
    std::vector<TrackLogEntry> entries;
    entries.reserve(pairs.size());
    for (const FramePair& pair : pairs) {
        const std::vector<RadarDetection>& radar =
            mode == "camera" ? std::vector<RadarDetection>{} : pair.radar;
        const std::vector<GroundCameraDetection> camera =
            mode == "radar" ? std::vector<GroundCameraDetection>{} : to_ground(pair.camera, model);
        const BranchOutputs outputs = tracker.step(pair.t, radar, camera);
        const std::vector<Track>& branch = mode == "radar"    ? outputs.radar
                                           : mode == "camera" ? outputs.camera
                                                              : outputs.fusion;
        entries.push_back({mode, to_track_frame(pair.t, branch)});
    }
    write_track_log(entries, out_path);
    std::cout << "tracked " << pairs.size() << " frames, branch '" << mode << "'\n";
    std::cout << "tracks: " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& tracks_path, const std::string& gt_path,
                 const std::string& report_path, double threshold, const std::string& branch,
                 const std::string& csv_path) {
    const TrackLog log = select_branch(read_track_log(tracks_path), branch);
    const GroundTruth truth = read_ground_truth(gt_path);
    const ClearReport report = clear_mot(truth, log, threshold);
    write_report(report, report_path);
    if (!csv_path.empty()) write_frame_accounts_csv(report, csv_path);

    std::cout << std::left;
    std::cout << std::setw(12) << "frames" << report.frames << "\n";
    std::cout << std::setw(12) << "gt_total" << report.gt_total << "\n";
    std::cout << std::setw(12) << "matched" << report.matched << "\n";
    std::cout << std::setw(12) << "fp" << report.fp << "\n";
    std::cout << std::setw(12) << "fn" << report.fn << "\n";
    std::cout << std::setw(12) << "idsw" << report.idsw << "\n";
    std::cout << std::setprecision(6);
    std::cout << std::setw(12) << "MOTA" << report.mota << "\n";
    std::cout << std::setw(12) << "MOTP" << report.motp << " m\n";
    for (const auto& [category, cat] : report.per_category) {
        std::cout << "  [" << (category.empty() ? "(none)" : category) << "] gt=" << cat.gt_total
                  << " fn=" << cat.fn << " fp=" << cat.fp << " idsw=" << cat.idsw
                  << " motp=" << cat.motp << " m\n";
    }
    std::cout << "report: " << report_path << "\n";
    return 0;
}

int cmd_plot(const std::string& tracks_path, const std::string& gt_path,
             const std::string& out_path, const std::string& branch, const std::string& csv_path,
             double threshold) {
    const TrackLog log = select_branch(read_track_log(tracks_path), branch);
    GroundTruth truth;
    if (!gt_path.empty()) truth = read_ground_truth(gt_path);
    atomic_write_text(out_path, render_tracks_svg(log, truth));
    if (!csv_path.empty()) {
        write_frame_accounts_csv(clear_mot(truth, log, threshold), csv_path);
    }
    std::cout << "plot: " << out_path << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"radar-camera fusion tracking toolkit"};
    app.require_subcommand(1);
    bool degrees = false;
    app.add_flag("--degrees", degrees, "display angles in degrees (files always store radians)");

    auto* sim = app.add_subcommand("simulate", "render a scenario to detection and truth logs");
    std::string sim_scenario, sim_frames, sim_gt;
    std::uint64_t sim_seed = 0;
    sim->add_option("--scenario", sim_scenario, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed, "random seed (default 0)");
    sim->add_option("--frames", sim_frames, "output frame log (JSONL)")->required();
    sim->add_option("--gt", sim_gt, "output ground-truth log (JSONL)")->required();

    auto* cal = app.add_subcommand("calibrate", "fit the up-down homography pair from a frame log");
    std::string cal_frames, cal_out, cal_config;
    cal->add_option("--frames", cal_frames, "input frame log (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    cal->add_option("--out", cal_out, "output calibration JSON")->required();
    cal->add_option("--config", cal_config, "run-config JSON")->check(CLI::ExistingFile);

    auto* trk = app.add_subcommand("track", "run one tracker branch over a frame log");
    std::string trk_frames, trk_calib, trk_mode = "fusion", trk_out, trk_config;
    trk->add_option("--frames", trk_frames, "input frame log (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    trk->add_option("--calib", trk_calib, "calibration JSON (needed for camera ground projection)")
        ->check(CLI::ExistingFile);
    trk->add_option("--mode", trk_mode, "branch to run: radar | camera | fusion (default fusion)")
        ->check(CLI::IsMember({"radar", "camera", "fusion"}));
    trk->add_option("--out", trk_out, "output track log (JSONL)")->required();
    trk->add_option("--config", trk_config, "run-config JSON")->check(CLI::ExistingFile);

    auto* eval = app.add_subcommand("evaluate", "score a track log against ground truth");
    std::string eval_tracks, eval_gt, eval_report, eval_branch, eval_csv;
    double eval_threshold = 3.0;
    eval->add_option("--tracks", eval_tracks, "input track log (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--gt", eval_gt, "ground-truth log (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--report", eval_report, "output report JSON")->required();
    eval->add_option("--threshold", eval_threshold, "GT matching distance in meters (default 3)")
        ->check(CLI::PositiveNumber);
    eval->add_option("--branch", eval_branch, "branch to score (default: the only one present)");
    eval->add_option("--per-frame-csv", eval_csv, "optional per-frame accounting CSV");

    auto* plt = app.add_subcommand("plot", "draw trajectories to an SVG");
    std::string plot_tracks, plot_gt, plot_out, plot_branch, plot_csv;
    double plot_threshold = 3.0;
    plt->add_option("--tracks", plot_tracks, "input track log (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    plt->add_option("--gt", plot_gt, "ground-truth log (JSONL), drawn dashed")
        ->check(CLI::ExistingFile);
    plt->add_option("--out", plot_out, "output SVG")->required();
    plt->add_option("--branch", plot_branch, "branch to draw (default: the only one present)");
    plt->add_option("--errors-csv", plot_csv, "optional per-frame error CSV (needs --gt)");
    plt->add_option("--threshold", plot_threshold,
                    "GT matching distance for --errors-csv (default 3)")
        ->check(CLI::PositiveNumber);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (plt->parsed() && !plot_csv.empty() && plot_gt.empty()) {
        std::cerr << "error: --errors-csv requires --gt\n";
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_scenario, sim_seed, sim_frames, sim_gt, degrees);
        if (cal->parsed()) return cmd_calibrate(cal_frames, cal_out, cal_config);
        if (trk->parsed()) return cmd_track(trk_frames, trk_calib, trk_mode, trk_out, trk_config);
        if (eval->parsed()) {
            return cmd_evaluate(eval_tracks, eval_gt, eval_report, eval_threshold, eval_branch,
                                eval_csv);
        }
        if (plt->parsed()) {
            return cmd_plot(plot_tracks, plot_gt, plot_out, plot_branch, plot_csv, plot_threshold);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace rcfusion
