#include "rcfusion/detection.hpp"

#include <algorithm>
#include <cmath>

#include "rcfusion/errors.hpp"

namespace rcfusion {

Point2 lower_center(const BoundingBox& bbox) {
    if (!bbox.valid()) {
        throw InvalidInput("lower_center: bounding box requires x1 <= x2 and y1 <= y2");
    }
    return {0.5 * (bbox.x1 + bbox.x2), bbox.y2};
}

namespace {

// Unit-normalizes in place; rejects zero-norm / non-finite vectors so the
// distance below is always well defined.
Embedding normalized(const Embedding& e) {
    double norm_sq = 0.0;
    for (double v : e) {
        if (!std::isfinite(v)) {
            throw InvalidInput("similarity: embedding has non-finite component");
        }
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= 0.0) {
        throw InvalidInput("similarity: embedding has zero norm");
    }
    Embedding out{};
    for (int i = 0; i < kEmbeddingDim; ++i) {
        out[i] = e[i] / norm;
    }
    return out;
}

}  // namespace

double similarity(const Embedding& a, const Embedding& b) {
    const Embedding na = normalized(a);
    const Embedding nb = normalized(b);
    double dist_sq = 0.0;
    for (int i = 0; i < kEmbeddingDim; ++i) {
        const double diff = na[i] - nb[i];
        dist_sq += diff * diff;
    }
    const double d = std::sqrt(dist_sq);
    // Logistic squashing centered at d0 = 0.5 with slope k = 10: confident
    // match near d = 0, confident non-match near d = 1.
    constexpr double kSlope = 10.0;
    constexpr double kMidpoint = 0.5;
    return 1.0 / (1.0 + std::exp(kSlope * (d - kMidpoint)));
}

SimilarityFn default_similarity() {
    return [](const Embedding& a, const Embedding& b) { return similarity(a, b); };
}

namespace {

template <typename Frame>
void require_sorted(const std::vector<Frame>& stream, const char* name) {
    for (std::size_t i = 1; i < stream.size(); ++i) {
        if (stream[i].t < stream[i - 1].t) {
            throw InvalidInput(std::string("pair_frames: ") + name +
                               " stream timestamps must be non-decreasing");
        }
    }
}

}  // namespace

std::vector<FramePair> pair_frames(const std::vector<RadarFrame>& radar_stream,
                                   const std::vector<CameraFrame>& camera_stream,
                                   double max_skew_s) {
    if (!(max_skew_s >= 0.0)) {
        throw InvalidInput("pair_frames: max_skew must be non-negative");
    }
    require_sorted(radar_stream, "radar");
    require_sorted(camera_stream, "camera");

    // Candidate pairs within tolerance, resolved greedily by smallest skew so
    // a camera frame always goes to its nearest radar frame.
    struct Candidate {
        double skew;
        std::size_t radar_idx;
        std::size_t camera_idx;
    };
    std::vector<Candidate> candidates;
    std::size_t lo = 0;
    for (std::size_t ri = 0; ri < radar_stream.size(); ++ri) {
        const double rt = radar_stream[ri].t;
        while (lo < camera_stream.size() && camera_stream[lo].t < rt - max_skew_s) {
            ++lo;
        }
        for (std::size_t ci = lo; ci < camera_stream.size() && camera_stream[ci].t <= rt + max_skew_s;
             ++ci) {
            candidates.push_back({std::abs(camera_stream[ci].t - rt), ri, ci});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.skew != b.skew) return a.skew < b.skew;
        if (a.radar_idx != b.radar_idx) return a.radar_idx < b.radar_idx;
        return a.camera_idx < b.camera_idx;
    });

    std::vector<bool> radar_used(radar_stream.size(), false);
    std::vector<bool> camera_used(camera_stream.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> matches;
    for (const Candidate& c : candidates) {
        if (radar_used[c.radar_idx] || camera_used[c.camera_idx]) continue;
        radar_used[c.radar_idx] = true;
        camera_used[c.camera_idx] = true;
        matches.emplace_back(c.radar_idx, c.camera_idx);
    }
    std::sort(matches.begin(), matches.end());

    std::vector<FramePair> pairs;
    pairs.reserve(matches.size());
    for (const auto& [ri, ci] : matches) {
        FramePair fp;
        fp.t = radar_stream[ri].t;
        fp.radar = radar_stream[ri].detections;
        fp.camera = camera_stream[ci].detections;
        pairs.push_back(std::move(fp));
    }
    return pairs;
}

}  // namespace rcfusion
