#include "rcfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rcfusion/association.hpp"
#include "rcfusion/errors.hpp"

namespace rcfusion {

namespace {

constexpr double kTimestampTol = 1e-9;

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

ClearReport clear_mot(const GroundTruth& gt, const TrackLog& tracks, double dist_threshold) {
    if (!(dist_threshold > 0.0)) {
        throw InvalidInput("clear_mot: dist_threshold must be positive");
    }
    if (gt.size() != tracks.size()) {
        throw FrameMismatch("clear_mot: ground truth has " + std::to_string(gt.size()) +
                            " frames, track log has " + std::to_string(tracks.size()));
    }
    for (std::size_t f = 0; f < gt.size(); ++f) {
        if (std::abs(gt[f].t - tracks[f].t) > kTimestampTol) {
            throw FrameMismatch("clear_mot: timestamp mismatch at frame " + std::to_string(f));
        }
    }

    ClearReport report;
    report.frames = gt.size();
    double total_distance = 0.0;
    std::map<std::string, double> category_distance;

    // gt object id -> most recent matched track id, persisted across gaps so
    // a reappearing object under a new id still counts as a switch.
    std::map<std::int64_t, std::int64_t> last_match;
    // Pairings carried from the previous frame (the CLEAR continuity rule).
    std::map<std::int64_t, std::int64_t> active_pairs;

    for (std::size_t f = 0; f < gt.size(); ++f) {
        const GroundTruthFrame& gt_frame = gt[f];
        const TrackFrame& track_frame = tracks[f];
        report.gt_total += gt_frame.entries.size();

        {
            std::set<std::int64_t> seen;
            for (const GroundTruthEntry& entry : gt_frame.entries) {
                if (!seen.insert(entry.object_id).second) {
                    throw InvalidInput("clear_mot: duplicate ground-truth object id in frame " +
                                       std::to_string(f));
                }
            }
        }

        std::map<std::int64_t, std::size_t> track_index;
        for (std::size_t j = 0; j < track_frame.tracks.size(); ++j) {
            track_index[track_frame.tracks[j].id] = j;
        }

        std::vector<bool> gt_done(gt_frame.entries.size(), false);
        std::vector<bool> track_done(track_frame.tracks.size(), false);
        std::vector<std::pair<std::size_t, std::size_t>> matched;  // (gt idx, track idx)

        // Step 1: keep last frame's pairings while they stay within range.
        std::map<std::int64_t, std::int64_t> next_pairs;
        for (std::size_t i = 0; i < gt_frame.entries.size(); ++i) {
            const GroundTruthEntry& entry = gt_frame.entries[i];
            auto pair_it = active_pairs.find(entry.object_id);
            if (pair_it == active_pairs.end()) continue;
            auto idx_it = track_index.find(pair_it->second);
            if (idx_it == track_index.end()) continue;
            const std::size_t j = idx_it->second;
            if (track_done[j]) continue;
            if (distance(entry.position, track_frame.tracks[j].position) > dist_threshold) continue;
            gt_done[i] = true;
            track_done[j] = true;
            matched.emplace_back(i, j);
        }

        // Step 2: Hungarian over the remainder, over-threshold cells gated.
        std::vector<std::size_t> gt_left, track_left;
        for (std::size_t i = 0; i < gt_frame.entries.size(); ++i) {
            if (!gt_done[i]) gt_left.push_back(i);
        }
        for (std::size_t j = 0; j < track_frame.tracks.size(); ++j) {
            if (!track_done[j]) track_left.push_back(j);
        }
        if (!gt_left.empty() && !track_left.empty()) {
            CostMatrix costs(gt_left.size(), track_left.size());
            for (std::size_t a = 0; a < gt_left.size(); ++a) {
                for (std::size_t b = 0; b < track_left.size(); ++b) {
                    const double d = distance(gt_frame.entries[gt_left[a]].position,
                                              track_frame.tracks[track_left[b]].position);
                    if (d <= dist_threshold) costs.set(a, b, d);
                }
            }
            for (const auto& [a, b] : hungarian(costs)) {
                gt_done[gt_left[a]] = true;
                track_done[track_left[b]] = true;
                matched.emplace_back(gt_left[a], track_left[b]);
            }
        }

        FrameAccount account;
        account.t = gt_frame.t;
        account.gt = gt_frame.entries.size();

        double frame_distance = 0.0;
        for (const auto& [i, j] : matched) {
            const GroundTruthEntry& entry = gt_frame.entries[i];
            const TrackSnapshot& snap = track_frame.tracks[j];
            const double d = distance(entry.position, snap.position);
            total_distance += d;
            frame_distance += d;
            report.matched += 1;
            account.matched += 1;

            auto& cat = report.per_category[entry.category];
            cat.gt_total += 1;
            cat.matched += 1;
            category_distance[entry.category] += d;

            auto last_it = last_match.find(entry.object_id);
            if (last_it != last_match.end() && last_it->second != snap.id) {
                report.idsw += 1;
                account.idsw += 1;
                cat.idsw += 1;
            }
            last_match[entry.object_id] = snap.id;
            next_pairs[entry.object_id] = snap.id;
        }
        for (std::size_t i = 0; i < gt_frame.entries.size(); ++i) {
            if (gt_done[i]) continue;
            report.fn += 1;
            account.fn += 1;
            auto& cat = report.per_category[gt_frame.entries[i].category];
            cat.gt_total += 1;
            cat.fn += 1;
        }
        for (std::size_t j = 0; j < track_frame.tracks.size(); ++j) {
            if (track_done[j]) continue;
            report.fp += 1;
            account.fp += 1;
            const auto& category = track_frame.tracks[j].category;
            report.per_category[category ? *category : std::string()].fp += 1;
        }
        account.mean_distance =
            account.matched > 0 ? frame_distance / static_cast<double>(account.matched) : 0.0;
        report.frame_accounts.push_back(account);
        active_pairs = std::move(next_pairs);
    }

    if (report.gt_total == 0) {
        throw InvalidInput("clear_mot: ground truth contains no objects");
    }
    const double gt_total = static_cast<double>(report.gt_total);
    report.fpr = static_cast<double>(report.fp) / gt_total;
    report.fnr = static_cast<double>(report.fn) / gt_total;
    report.idswr = static_cast<double>(report.idsw) / gt_total;
    report.mota = 1.0 - report.fnr - report.fpr - report.idswr;
    report.motp =
        report.matched > 0 ? total_distance / static_cast<double>(report.matched) : 0.0;
    report.motp_paper = total_distance / gt_total;
    for (auto& [category, cat] : report.per_category) {
        cat.motp = cat.matched > 0 ? category_distance[category] / static_cast<double>(cat.matched)
                                   : 0.0;
    }
    return report;
}

}  // namespace rcfusion
