#include "rcfusion/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rcfusion/errors.hpp"
#include "rcfusion/rng.hpp"

namespace rcfusion {

void BlockSamplingConfig::validate() const {
    if (block_size < 1 || stride_blocks < 1) {
        throw InvalidInput("BlockSamplingConfig: block_size and stride_blocks must be >= 1");
    }
}

void CalibrationModel::validate() const {
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0)) {
        throw InvalidInput("CalibrationModel: split_fraction must be in (0, 1)");
    }
    if (!(image_width > 0.0) || !(image_height > 0.0)) {
        throw InvalidInput("CalibrationModel: image dimensions must be positive");
    }
}

std::vector<Correspondence> collect_correspondences(const std::vector<FramePair>& pairs,
                                                    double threshold,
                                                    const SimilarityFn& similarity_fn) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw InvalidInput("collect_correspondences: threshold must be in [0,1]");
    }
    const SimilarityFn score = similarity_fn ? similarity_fn : default_similarity();

    std::vector<Correspondence> out;
    for (const FramePair& pair : pairs) {
        struct Candidate {
            double score;
            std::size_t radar_idx;
            std::size_t camera_idx;
        };
        std::vector<Candidate> candidates;
        for (std::size_t i = 0; i < pair.radar.size(); ++i) {
            if (!pair.radar[i].embedding) continue;
            for (std::size_t j = 0; j < pair.camera.size(); ++j) {
                if (!pair.camera[j].embedding) continue;
                const double s = score(*pair.radar[i].embedding, *pair.camera[j].embedding);
                if (s > threshold) candidates.push_back({s, i, j});
            }
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& a, const Candidate& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.radar_idx != b.radar_idx) return a.radar_idx < b.radar_idx;
                      return a.camera_idx < b.camera_idx;
                  });
        std::vector<bool> radar_used(pair.radar.size(), false);
        std::vector<bool> camera_used(pair.camera.size(), false);
        for (const Candidate& c : candidates) {
            if (radar_used[c.radar_idx] || camera_used[c.camera_idx]) continue;
            radar_used[c.radar_idx] = true;
            camera_used[c.camera_idx] = true;
            Correspondence corr;
            corr.image_point = pair.camera[c.camera_idx].anchor();
            corr.radar_point = pair.radar[c.radar_idx].position;
            corr.t = pair.t;
            corr.score = c.score;
            out.push_back(corr);
        }
    }
    return out;
}

std::vector<Correspondence> block_sample(const std::vector<Correspondence>& corrs,
                                         const BlockSamplingConfig& cfg, double image_width,
                                         double image_height) {
    cfg.validate();
    if (!(image_width > 0.0) || !(image_height > 0.0)) {
        throw InvalidInput("block_sample: image dimensions must be positive");
    }

    struct Kept {
        double center_dist;
        Correspondence corr;
    };
    std::map<std::pair<long, long>, Kept> cells;  // (by, bx) -> representative

    const double bs = static_cast<double>(cfg.block_size);
    const long stride = cfg.stride_blocks;
    for (const Correspondence& corr : corrs) {
        const double u = corr.image_point.x;
        const double v = corr.image_point.y;
        if (u < 0.0 || u >= image_width || v < 0.0 || v >= image_height) continue;
        const long bx = static_cast<long>(std::floor(u / bs));
        const long by = static_cast<long>(std::floor(v / bs));
        // Checkerboard over stride-sized block groups; stride 1 keeps every
        // other block in the paper's alternating pattern.
        if (((bx / stride) + (by / stride)) % 2 != 0) continue;
        const double cx = (static_cast<double>(bx) + 0.5) * bs;
        const double cy = (static_cast<double>(by) + 0.5) * bs;
        const double dist = std::hypot(u - cx, v - cy);

        auto [it, inserted] = cells.try_emplace({by, bx}, Kept{dist, corr});
        if (inserted) continue;
        Kept& held = it->second;
        const bool closer =
            dist < held.center_dist ||
            (dist == held.center_dist &&
             (corr.t < held.corr.t ||
              (corr.t == held.corr.t &&
               std::pair{u, v} < std::pair{held.corr.image_point.x, held.corr.image_point.y})));
        if (closer) held = Kept{dist, corr};
    }

    std::vector<Correspondence> out;
    out.reserve(cells.size());
    for (const auto& [key, kept] : cells) out.push_back(kept.corr);
    return out;
}

std::pair<std::vector<Correspondence>, std::vector<Correspondence>> split_up_down(
    const std::vector<Correspondence>& corrs, double image_height, double split_fraction) {
    if (!(image_height > 0.0)) throw InvalidInput("split_up_down: image_height must be positive");
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0)) {
        throw InvalidInput("split_up_down: split_fraction must be in (0, 1)");
    }
    const double boundary = split_fraction * image_height;
    std::pair<std::vector<Correspondence>, std::vector<Correspondence>> out;
    for (const Correspondence& corr : corrs) {
        if (corr.image_point.y < boundary) {
            out.first.push_back(corr);
        } else {
            out.second.push_back(corr);  // boundary row belongs to the lower band
        }
    }
    return out;
}

namespace {

struct RegionFit {
    Homography h = Homography::identity();
    RegionStats stats;
    bool ok = false;
    std::vector<PointPair> train;  // kept for a possible shared refit
    std::vector<PointPair> holdout;
};

// Seeded shuffle, last holdout_fraction of the permutation withheld.
void split_holdout(const std::vector<Correspondence>& corrs, double holdout_fraction,
                   std::uint64_t seed, std::vector<PointPair>& train,
                   std::vector<PointPair>& holdout) {
    std::vector<std::size_t> order(corrs.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_holdout =
        static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(corrs.size())));
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Correspondence& corr = corrs[order[k]];
        PointPair pair{corr.image_point, corr.radar_point};
        if (k < order.size() - n_holdout) {
            train.push_back(pair);
        } else {
            holdout.push_back(pair);
        }
    }
}

RegionFit fit_region(const std::vector<Correspondence>& corrs, const CalibrationConfig& cfg,
                     std::uint64_t region_tag) {
    RegionFit fit;
    fit.stats.total = corrs.size();
    split_holdout(corrs, cfg.holdout_fraction, derive_seed(cfg.seed, region_tag), fit.train,
                  fit.holdout);
    fit.stats.train = fit.train.size();
    if (fit.train.size() < 4) return fit;  // not enough to even attempt

    RansacConfig ransac = cfg.ransac;
    ransac.seed = derive_seed(cfg.ransac.seed, region_tag);
    try {
        RansacResult result = estimate_homography_ransac(fit.train, ransac);
        fit.h = result.h;
        std::vector<PointPair> inliers;
        for (std::size_t i = 0; i < fit.train.size(); ++i) {
            if (result.inlier_mask[i]) inliers.push_back(fit.train[i]);
        }
        fit.stats.inliers = inliers.size();
        fit.stats.train_error_m = reprojection_error_m(inliers, fit.h);
        if (!fit.holdout.empty()) {
            fit.stats.holdout_error_m = reprojection_error_m(fit.holdout, fit.h);
        }
        fit.ok = true;
    } catch (const CalibrationFailed&) {
    } catch (const InsufficientData&) {
    } catch (const DegenerateConfiguration&) {
    }
    return fit;
}

}  // namespace

CalibrationModel calibrate(const std::vector<FramePair>& pairs, const CalibrationConfig& cfg) {
    if (pairs.empty()) throw InvalidInput("calibrate: no frame pairs");
    cfg.block.validate();
    if (!(cfg.holdout_fraction >= 0.0) || !(cfg.holdout_fraction < 1.0)) {
        throw InvalidInput("calibrate: holdout_fraction must be in [0, 1)");
    }

    // Algorithm: per frame, match features then thin spatially; accumulate
    // across frames; split into image bands; fit each band robustly.
    std::vector<Correspondence> sampled;
    for (const FramePair& pair : pairs) {
        const std::vector<Correspondence> frame_corrs =
            collect_correspondences({pair}, cfg.similarity_threshold, cfg.similarity);
        const std::vector<Correspondence> frame_sampled =
            block_sample(frame_corrs, cfg.block, cfg.image_width, cfg.image_height);
        sampled.insert(sampled.end(), frame_sampled.begin(), frame_sampled.end());
    }

    auto [upper, lower] = split_up_down(sampled, cfg.image_height, cfg.split_fraction);
    RegionFit upper_fit = fit_region(upper, cfg, 1);
    RegionFit lower_fit = fit_region(lower, cfg, 2);

    CalibrationModel model;
    model.image_width = cfg.image_width;
    model.image_height = cfg.image_height;
    model.split_fraction = cfg.split_fraction;
    model.stats.upper = upper_fit.stats;
    model.stats.lower = lower_fit.stats;

    if (upper_fit.ok && lower_fit.ok) {
        model.h_upper = upper_fit.h;
        model.h_lower = lower_fit.h;
        return model;
    }
    if (!upper_fit.ok && !lower_fit.ok) {
        throw CalibrationFailed("calibrate: neither image region could be fit");
    }

    // One region starved or degenerate: fit a single homography over both
    // regions' training pairs and use it everywhere.
    std::vector<PointPair> all_train = upper_fit.train;
    all_train.insert(all_train.end(), lower_fit.train.begin(), lower_fit.train.end());
    RansacConfig ransac = cfg.ransac;
    ransac.seed = derive_seed(cfg.ransac.seed, 3);
    RansacResult shared = estimate_homography_ransac(all_train, ransac);  // may throw
    model.h_upper = shared.h;
    model.h_lower = shared.h;
    model.stats.shared_fallback = true;

    std::vector<PointPair> shared_inliers;
    for (std::size_t i = 0; i < all_train.size(); ++i) {
        if (shared.inlier_mask[i]) shared_inliers.push_back(all_train[i]);
    }
    const double shared_train_error = reprojection_error_m(shared_inliers, shared.h);
    auto refresh = [&](RegionStats& stats, const RegionFit& fit) {
        stats.inliers = 0;
        stats.train_error_m = shared_train_error;
        if (!fit.holdout.empty()) {
            stats.holdout_error_m = reprojection_error_m(fit.holdout, shared.h);
        } else {
            stats.holdout_error_m.reset();
        }
    };
    refresh(model.stats.upper, upper_fit);
    refresh(model.stats.lower, lower_fit);
    model.stats.upper.inliers = model.stats.lower.inliers = shared_inliers.size();
    return model;
}

PolarPoint project_to_radar(const CalibrationModel& model, const Point2& pixel) {
    model.validate();
    const double boundary = model.split_fraction * model.image_height;
    const Homography& h = pixel.y < boundary ? model.h_upper : model.h_lower;
    const Point2 mapped = h.apply(pixel);
    return {mapped.x, mapped.y};
}

Point2 project_to_ground(const CalibrationModel& model, const Point2& pixel) {
    const PolarPoint polar = project_to_radar(model, pixel);
    // Raw trig on purpose: a slightly negative extrapolated range still
    // yields a usable ground point instead of an error.
    return {polar.range * std::sin(polar.azimuth), polar.range * std::cos(polar.azimuth)};
}

}  // namespace rcfusion
