#include "rcfusion/association.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rcfusion/errors.hpp"

namespace rcfusion {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, infeasible()) {}

double CostMatrix::at(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) {
        throw InvalidInput("CostMatrix: index out of range");
    }
    return values_[r * cols_ + c];
}

void CostMatrix::set(std::size_t r, std::size_t c, double cost) {
    if (r >= rows_ || c >= cols_) {
        throw InvalidInput("CostMatrix: index out of range");
    }
    if (!std::isfinite(cost) || cost < 0.0) {
        throw InvalidInput("CostMatrix: cost must be finite and non-negative");
    }
    values_[r * cols_ + c] = cost;
}

void CostMatrix::set_infeasible(std::size_t r, std::size_t c) {
    if (r >= rows_ || c >= cols_) {
        throw InvalidInput("CostMatrix: index out of range");
    }
    values_[r * cols_ + c] = infeasible();
}

bool CostMatrix::feasible(std::size_t r, std::size_t c) const { return std::isfinite(at(r, c)); }

namespace {

struct SolveOutcome {
    double cost = 0.0;
    std::size_t cardinality = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // indices into the sublists
};

// Jonker-Volgenant style shortest-augmenting-path assignment on a square
// matrix with all-finite entries. Infeasible and padding cells share one
// uniform penalty larger than any feasible total, so minimizing the padded
// problem first maximizes the number of feasible pairs, then their cost.
SolveOutcome solve_subproblem(const CostMatrix& costs, const std::vector<std::size_t>& row_ids,
                              const std::vector<std::size_t>& col_ids) {
    const std::size_t nr = row_ids.size();
    const std::size_t nc = col_ids.size();
    SolveOutcome out;
    if (nr == 0 || nc == 0) return out;

    double finite_sum = 0.0;
    for (std::size_t r : row_ids) {
        for (std::size_t c : col_ids) {
            if (costs.feasible(r, c)) finite_sum += std::abs(costs.at(r, c));
        }
    }
    const double penalty = finite_sum + 1.0;

    const std::size_t n = std::max(nr, nc);
    auto cell = [&](std::size_t i, std::size_t j) -> double {
        if (i >= nr || j >= nc) return penalty;
        const std::size_t r = row_ids[i];
        const std::size_t c = col_ids[j];
        return costs.feasible(r, c) ? costs.at(r, c) : penalty;
    };

    const double kInf = std::numeric_limits<double>::max();
    // 1-based potentials; p[j] is the row matched to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            std::size_t j1 = 0;
            double delta = kInf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = p[j];
        if (i == 0 || i - 1 >= nr || j - 1 >= nc) continue;
        const std::size_t r = row_ids[i - 1];
        const std::size_t c = col_ids[j - 1];
        if (!costs.feasible(r, c)) continue;  // penalty cell: effectively unassigned
        out.pairs.emplace_back(i - 1, j - 1);
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (const auto& [i, j] : out.pairs) {
        out.cost += costs.at(row_ids[i], col_ids[j]);
    }
    out.cardinality = out.pairs.size();
    return out;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> hungarian(const CostMatrix& costs) {
    std::vector<std::size_t> all_rows(costs.rows());
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::vector<std::size_t> all_cols(costs.cols());
    std::iota(all_cols.begin(), all_cols.end(), 0);

    const SolveOutcome best = solve_subproblem(costs, all_rows, all_cols);
    if (best.cardinality == 0) return {};

    // The solver's optimum is not necessarily the lexicographically smallest
    // one; lock pairs in row-major order, keeping only choices that still
    // complete to the optimal cardinality and cost.
    const double tol = 1e-9 * std::max(1.0, std::abs(best.cost));
    double remaining_cost = best.cost;
    std::size_t remaining_card = best.cardinality;
    std::vector<std::size_t> cols_left = all_cols;
    std::vector<std::pair<std::size_t, std::size_t>> result;

    for (std::size_t r = 0; r < costs.rows() && remaining_card > 0; ++r) {
        std::vector<std::size_t> rows_after;
        for (std::size_t rr = r + 1; rr < costs.rows(); ++rr) rows_after.push_back(rr);

        bool fixed = false;
        for (std::size_t ci = 0; ci < cols_left.size(); ++ci) {
            const std::size_t c = cols_left[ci];
            if (!costs.feasible(r, c)) continue;
            std::vector<std::size_t> cols_minus = cols_left;
            cols_minus.erase(cols_minus.begin() + static_cast<std::ptrdiff_t>(ci));
            const SolveOutcome sub = solve_subproblem(costs, rows_after, cols_minus);
            if (sub.cardinality == remaining_card - 1 &&
                std::abs(costs.at(r, c) + sub.cost - remaining_cost) <= tol) {
                result.emplace_back(r, c);
                remaining_cost -= costs.at(r, c);
                --remaining_card;
                cols_left = std::move(cols_minus);
                fixed = true;
                break;
            }
        }
        (void)fixed;  // row r stays unassigned when no choice preserves the optimum
    }
    return result;
}

namespace {

Point2 radar_ground(const RadarDetection& det) { return polar_to_cartesian(det.position); }

double euclidean(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

MatchResult match_radar_camera(const std::vector<RadarDetection>& radar,
                               const std::vector<GroundCameraDetection>& camera_ground,
                               const MatcherConfig& cfg) {
    if (!(cfg.similarity_threshold >= 0.0 && cfg.similarity_threshold <= 1.0)) {
        throw InvalidInput("match_radar_camera: similarity_threshold must be in [0,1]");
    }
    if (!(cfg.gate_distance_m > 0.0)) {
        throw InvalidInput("match_radar_camera: gate_distance_m must be positive");
    }
    const SimilarityFn score = cfg.similarity ? cfg.similarity : default_similarity();

    std::vector<Point2> radar_pos(radar.size());
    for (std::size_t i = 0; i < radar.size(); ++i) radar_pos[i] = radar_ground(radar[i]);

    MatchResult result;
    std::vector<bool> radar_done(radar.size(), false);
    std::vector<bool> camera_done(camera_ground.size(), false);

    // Stage 1: feature matching. Score gate plus distance gate, resolved
    // greedily from the most confident pair down.
    struct Candidate {
        double score;
        std::size_t radar_idx;
        std::size_t camera_idx;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < radar.size(); ++i) {
        if (!radar[i].embedding) continue;
        for (std::size_t j = 0; j < camera_ground.size(); ++j) {
            if (!camera_ground[j].detection.embedding) continue;
            const double s = score(*radar[i].embedding, *camera_ground[j].detection.embedding);
            if (s <= cfg.similarity_threshold) continue;
            if (euclidean(radar_pos[i], camera_ground[j].ground) > cfg.gate_distance_m) continue;
            candidates.push_back({s, i, j});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.radar_idx != b.radar_idx) return a.radar_idx < b.radar_idx;
        return a.camera_idx < b.camera_idx;
    });
    for (const Candidate& c : candidates) {
        if (radar_done[c.radar_idx] || camera_done[c.camera_idx]) continue;
        radar_done[c.radar_idx] = true;
        camera_done[c.camera_idx] = true;
        result.matched.push_back({c.radar_idx, c.camera_idx, MatchStage::kFeature});
    }

    // Stage 2: positional matching of the leftovers on the full distance
    // matrix, with over-gate pairs reverted afterwards.
    std::vector<std::size_t> radar_left, camera_left;
    for (std::size_t i = 0; i < radar.size(); ++i) {
        if (!radar_done[i]) radar_left.push_back(i);
    }
    for (std::size_t j = 0; j < camera_ground.size(); ++j) {
        if (!camera_done[j]) camera_left.push_back(j);
    }
    if (!radar_left.empty() && !camera_left.empty()) {
        CostMatrix dist(radar_left.size(), camera_left.size());
        for (std::size_t a = 0; a < radar_left.size(); ++a) {
            for (std::size_t b = 0; b < camera_left.size(); ++b) {
                dist.set(a, b, euclidean(radar_pos[radar_left[a]], camera_ground[camera_left[b]].ground));
            }
        }
        for (const auto& [a, b] : hungarian(dist)) {
            if (dist.at(a, b) > cfg.gate_distance_m) continue;
            const std::size_t i = radar_left[a];
            const std::size_t j = camera_left[b];
            radar_done[i] = true;
            camera_done[j] = true;
            result.matched.push_back({i, j, MatchStage::kPosition});
        }
    }

    for (std::size_t i = 0; i < radar.size(); ++i) {
        if (!radar_done[i]) result.unmatched_radar.push_back(i);
    }
    for (std::size_t j = 0; j < camera_ground.size(); ++j) {
        if (!camera_done[j]) result.unmatched_camera.push_back(j);
    }
    std::sort(result.matched.begin(), result.matched.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.radar_index < b.radar_index; });
    return result;
}

bool gate_by_category(const std::optional<std::string>& det_category,
                      const std::optional<std::string>& track_category) {
    if (!det_category || !track_category) return true;
    return *det_category == *track_category;
}

}  // namespace rcfusion
