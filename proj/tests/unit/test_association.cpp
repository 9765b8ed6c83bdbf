#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rcfusion/association.hpp"
#include "rcfusion/errors.hpp"
#include "rcfusion/rng.hpp"
#include "rcfusion/tracking.hpp"

using namespace rcfusion;

namespace {

CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t nr = rows.size();
    const std::size_t nc = nr == 0 ? 0 : rows[0].size();
    CostMatrix m(nr, nc);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            if (std::isfinite(rows[r][c])) m.set(r, c, rows[r][c]);
        }
    }
    return m;
}

double total_cost(const CostMatrix& m, const std::vector<std::pair<std::size_t, std::size_t>>& a) {
    double sum = 0.0;
    for (const auto& [r, c] : a) sum += m.at(r, c);
    return sum;
}

struct BruteResult {
    std::size_t cardinality = 0;
    double cost = 0.0;
};

// Exhaustive optimum: maximize pair count, then minimize total cost.
void brute_recurse(const CostMatrix& m, std::size_t row, std::vector<bool>& used,
                   std::size_t card, double cost, BruteResult& best) {
    if (row == m.rows()) {
        if (card > best.cardinality ||
            (card == best.cardinality && cost < best.cost - 1e-12)) {
            best = {card, cost};
        }
        return;
    }
    brute_recurse(m, row + 1, used, card, cost, best);  // leave this row out
    for (std::size_t c = 0; c < m.cols(); ++c) {
        if (used[c] || !m.feasible(row, c)) continue;
        used[c] = true;
        brute_recurse(m, row + 1, used, card + 1, cost + m.at(row, c), best);
        used[c] = false;
    }
}

BruteResult brute_force(const CostMatrix& m) {
    BruteResult best{0, std::numeric_limits<double>::infinity()};
    std::vector<bool> used(m.cols(), false);
    brute_recurse(m, 0, used, 0, 0.0, best);
    if (best.cardinality == 0) best.cost = 0.0;
    return best;
}

}  // namespace

TEST_CASE("hungarian single cell") {
    const auto a = hungarian(from_rows({{1.0}}));
    REQUIRE(a.size() == 1);
    CHECK(a[0] == std::pair<std::size_t, std::size_t>{0, 0});
}

TEST_CASE("hungarian 2x2 cross assignment") {
    const CostMatrix m = from_rows({{4, 1}, {2, 8}});
    const auto a = hungarian(m);
    REQUIRE(a.size() == 2);
    CHECK(a[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(a[1] == std::pair<std::size_t, std::size_t>{1, 0});
    CHECK(total_cost(m, a) == doctest::Approx(3.0));
}

TEST_CASE("hungarian rectangular 2x3") {
    const CostMatrix m = from_rows({{1, 2, 3}, {2, 4, 6}});
    const auto a = hungarian(m);
    REQUIRE(a.size() == 2);
    CHECK(a[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(a[1] == std::pair<std::size_t, std::size_t>{1, 0});
    CHECK(total_cost(m, a) == doctest::Approx(4.0));
}

TEST_CASE("hungarian empty and all-infeasible") {
    CHECK(hungarian(CostMatrix()).empty());
    CHECK(hungarian(CostMatrix(3, 2)).empty());  // constructed all-infeasible

    const double inf = CostMatrix::infeasible();
    const auto a = hungarian(from_rows({{inf, 5.0}, {inf, inf}}));
    REQUIRE(a.size() == 1);
    CHECK(a[0] == std::pair<std::size_t, std::size_t>{0, 1});
}

TEST_CASE("hungarian maximizes cardinality before cost") {
    const double inf = CostMatrix::infeasible();
    // Assigning only (0,0) costs 1, but two pairs are feasible: (0,0)+(1,1).
    const CostMatrix m = from_rows({{1, inf}, {2, 3}});
    const auto a = hungarian(m);
    REQUIRE(a.size() == 2);
    CHECK(a[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(a[1] == std::pair<std::size_t, std::size_t>{1, 1});
}

TEST_CASE("hungarian tie-break is lexicographically smallest") {
    const auto a = hungarian(from_rows({{1, 1}, {1, 1}}));
    REQUIRE(a.size() == 2);
    CHECK(a[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(a[1] == std::pair<std::size_t, std::size_t>{1, 1});

    const auto b = hungarian(from_rows({{5, 5}}));
    REQUIRE(b.size() == 1);
    CHECK(b[0] == std::pair<std::size_t, std::size_t>{0, 0});
}

TEST_CASE("hungarian equals brute force on 300 random instances") {
    auto rng = make_rng(41);
    std::uniform_int_distribution<int> dim(1, 5);
    std::uniform_real_distribution<double> cost(0.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t nr = static_cast<std::size_t>(dim(rng));
        const std::size_t nc = static_cast<std::size_t>(dim(rng));
        const double infeasible_frac = unit(rng) * 0.5;
        CostMatrix m(nr, nc);
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) {
                if (unit(rng) >= infeasible_frac) m.set(r, c, cost(rng));
            }
        }
        const auto a = hungarian(m);
        const BruteResult want = brute_force(m);
        CHECK(a.size() == want.cardinality);
        CHECK(total_cost(m, a) == doctest::Approx(want.cost).epsilon(1e-9));

        // Structural sanity: no row or column reused, only feasible cells.
        std::vector<bool> row_used(nr, false), col_used(nc, false);
        for (const auto& [r, c] : a) {
            CHECK(!row_used[r]);
            CHECK(!col_used[c]);
            row_used[r] = true;
            col_used[c] = true;
            CHECK(m.feasible(r, c));
        }
    }
}

TEST_CASE("hungarian permutation equivariance") {
    auto rng = make_rng(42);
    std::uniform_real_distribution<double> cost(0.0, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 5;
        CostMatrix m(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) m.set(r, c, cost(rng));

        std::vector<std::size_t> rp(n), cp(n);
        std::iota(rp.begin(), rp.end(), 0);
        std::iota(cp.begin(), cp.end(), 0);
        std::shuffle(rp.begin(), rp.end(), rng);
        std::shuffle(cp.begin(), cp.end(), rng);

        CostMatrix pm(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) pm.set(rp[r], cp[c], m.at(r, c));

        const auto base = hungarian(m);
        const auto perm = hungarian(pm);
        // Random real costs make the optimum unique almost surely, so the
        // permuted solution is exactly the permuted base solution.
        std::vector<std::pair<std::size_t, std::size_t>> mapped;
        for (const auto& [r, c] : base) mapped.emplace_back(rp[r], cp[c]);
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == perm);
        CHECK(total_cost(pm, perm) == doctest::Approx(total_cost(m, base)));
    }
}

namespace {

// Radar detection whose ground position is (x, y), tagged with an index in
// embedding slot 0 so table-driven similarity providers can identify it.
RadarDetection radar_at_ground(double x, double y, int tag) {
    RadarDetection det;
    det.position = cartesian_to_polar({x, y});
    det.bbox = {0, 0, 1, 1};
    Embedding e{};
    e[0] = static_cast<double>(tag);
    e[1] = 1.0;  // keeps the vector nonzero for norm-based providers
    det.embedding = e;
    return det;
}

GroundCameraDetection camera_at_ground(double x, double y, int tag) {
    GroundCameraDetection det;
    det.detection.bbox = {0, 0, 10, 10};
    det.detection.category = "car";
    Embedding e{};
    e[0] = static_cast<double>(tag);
    e[1] = 1.0;
    det.detection.embedding = e;
    det.ground = {x, y};
    return det;
}

// Similarity provider returning scores from a table keyed by the tags.
SimilarityFn table_similarity(std::vector<std::vector<double>> table) {
    return [table = std::move(table)](const Embedding& a, const Embedding& b) {
        const std::size_t i = static_cast<std::size_t>(a[0]);
        const std::size_t j = static_cast<std::size_t>(b[0]);
        return table[i][j];
    };
}

}  // namespace

TEST_CASE("match_radar_camera stage-1 success") {
    const std::vector<RadarDetection> radar = {radar_at_ground(0, 5, 0)};
    const std::vector<GroundCameraDetection> camera = {camera_at_ground(0, 6, 0)};
    MatcherConfig cfg;
    cfg.similarity = table_similarity({{0.9}});
    const MatchResult result = match_radar_camera(radar, camera, cfg);
    REQUIRE(result.matched.size() == 1);
    CHECK(result.matched[0].radar_index == 0);
    CHECK(result.matched[0].camera_index == 0);
    CHECK(result.matched[0].stage == MatchStage::kFeature);
    CHECK(result.unmatched_radar.empty());
    CHECK(result.unmatched_camera.empty());
}

TEST_CASE("match_radar_camera distance gate rejects a confident pair") {
    const std::vector<RadarDetection> radar = {radar_at_ground(0, 5, 0)};
    const std::vector<GroundCameraDetection> camera = {camera_at_ground(0, 10, 0)};
    MatcherConfig cfg;
    cfg.similarity = table_similarity({{0.9}});
    const MatchResult result = match_radar_camera(radar, camera, cfg);
    CHECK(result.matched.empty());
    CHECK(result.unmatched_radar == std::vector<std::size_t>{0});
    CHECK(result.unmatched_camera == std::vector<std::size_t>{0});
}

TEST_CASE("match_radar_camera falls through to positional Hungarian") {
    const std::vector<RadarDetection> radar = {radar_at_ground(0, 5, 0),
                                               radar_at_ground(0, 9, 1)};
    const std::vector<GroundCameraDetection> camera = {camera_at_ground(0, 6, 0),
                                                       camera_at_ground(0, 10, 1)};
    MatcherConfig cfg;
    cfg.similarity = table_similarity({{0.5, 0.5}, {0.5, 0.5}});
    const MatchResult result = match_radar_camera(radar, camera, cfg);
    REQUIRE(result.matched.size() == 2);
    for (const MatchedPair& p : result.matched) {
        CHECK(p.stage == MatchStage::kPosition);
        CHECK(p.radar_index == p.camera_index);  // (r1,c1), (r2,c2)
    }
    CHECK(result.unmatched_radar.empty());
    CHECK(result.unmatched_camera.empty());
}

TEST_CASE("match_radar_camera greedy stage-1 conflict resolution") {
    // Scores {(r0,c0)=0.95, (r0,c1)=0.85, (r1,c1)=0.9, (r1,c0)=0.3}: greedy
    // takes (r0,c0) then (r1,c1).
    const std::vector<RadarDetection> radar = {radar_at_ground(0, 5, 0),
                                               radar_at_ground(1, 5, 1)};
    const std::vector<GroundCameraDetection> camera = {camera_at_ground(0, 5.5, 0),
                                                       camera_at_ground(1, 5.5, 1)};
    MatcherConfig cfg;
    cfg.similarity = table_similarity({{0.95, 0.85}, {0.3, 0.9}});
    const MatchResult result = match_radar_camera(radar, camera, cfg);
    REQUIRE(result.matched.size() == 2);
    CHECK(result.matched[0].radar_index == 0);
    CHECK(result.matched[0].camera_index == 0);
    CHECK(result.matched[0].stage == MatchStage::kFeature);
    CHECK(result.matched[1].radar_index == 1);
    CHECK(result.matched[1].camera_index == 1);
}

TEST_CASE("match_radar_camera works without embeddings") {
    std::vector<RadarDetection> radar = {radar_at_ground(0, 5, 0)};
    radar[0].embedding.reset();
    std::vector<GroundCameraDetection> camera = {camera_at_ground(0, 6, 0)};
    camera[0].detection.embedding.reset();
    const MatchResult result = match_radar_camera(radar, camera, MatcherConfig{});
    REQUIRE(result.matched.size() == 1);
    CHECK(result.matched[0].stage == MatchStage::kPosition);
}

TEST_CASE("match_radar_camera partitions inputs and respects the gate") {
    auto rng = make_rng(43);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> fwd(3.0, 25.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<RadarDetection> radar;
        std::vector<GroundCameraDetection> camera;
        const int nr = 1 + static_cast<int>(unit(rng) * 5);
        const int nc = 1 + static_cast<int>(unit(rng) * 5);
        for (int i = 0; i < nr; ++i) radar.push_back(radar_at_ground(coord(rng), fwd(rng), i));
        for (int j = 0; j < nc; ++j) camera.push_back(camera_at_ground(coord(rng), fwd(rng), j));

        MatcherConfig cfg;  // logistic provider over the tag embeddings
        const MatchResult result = match_radar_camera(radar, camera, cfg);

        std::vector<bool> radar_seen(radar.size(), false), camera_seen(camera.size(), false);
        for (const MatchedPair& p : result.matched) {
            CHECK(!radar_seen[p.radar_index]);
            CHECK(!camera_seen[p.camera_index]);
            radar_seen[p.radar_index] = true;
            camera_seen[p.camera_index] = true;
            const Point2 rg = polar_to_cartesian(radar[p.radar_index].position);
            const Point2 cg = camera[p.camera_index].ground;
            CHECK(std::hypot(rg.x - cg.x, rg.y - cg.y) <= cfg.gate_distance_m + 1e-12);
        }
        for (std::size_t i : result.unmatched_radar) {
            CHECK(!radar_seen[i]);
            radar_seen[i] = true;
        }
        for (std::size_t j : result.unmatched_camera) {
            CHECK(!camera_seen[j]);
            camera_seen[j] = true;
        }
        CHECK(std::all_of(radar_seen.begin(), radar_seen.end(), [](bool b) { return b; }));
        CHECK(std::all_of(camera_seen.begin(), camera_seen.end(), [](bool b) { return b; }));
    }
}

TEST_CASE("gate_by_category truth table") {
    CHECK(gate_by_category("person", "person"));
    CHECK_FALSE(gate_by_category("person", "car"));
    CHECK(gate_by_category(std::nullopt, "car"));
    CHECK(gate_by_category("car", std::nullopt));
    CHECK(gate_by_category(std::nullopt, std::nullopt));
}

namespace {

Track track_at(const Point2& position, std::optional<std::string> category) {
    Track t;
    t.id = 1;
    t.state = make_initial_state(position, 1.0, 1.0);
    t.category = std::move(category);
    return t;
}

FusedDetection det_at(const Point2& position, std::optional<std::string> category) {
    FusedDetection d;
    d.position = position;
    d.category = std::move(category);
    return d;
}

}  // namespace

TEST_CASE("match_detections_to_tracks nearby same-category pair") {
    const std::vector<FusedDetection> dets = {det_at({0, 5}, "person")};
    const std::vector<Track> tracks = {track_at({0, 5.5}, "person")};
    const TrackAssignment a = match_detections_to_tracks(dets, tracks, TrackerConfig{});
    REQUIRE(a.matched.size() == 1);
    CHECK(a.matched[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(a.unmatched_detections.empty());
    CHECK(a.unmatched_tracks.empty());
}

TEST_CASE("match_detections_to_tracks category gate blocks the cell") {
    const std::vector<FusedDetection> dets = {det_at({0, 5}, "person")};
    const std::vector<Track> tracks = {track_at({0, 5}, "car")};
    const TrackAssignment a = match_detections_to_tracks(dets, tracks, TrackerConfig{});
    CHECK(a.matched.empty());
    CHECK(a.unmatched_detections == std::vector<std::size_t>{0});
    CHECK(a.unmatched_tracks == std::vector<std::size_t>{0});

    // Disabling the gate makes the same instance match.
    TrackerConfig cfg;
    cfg.category_gating = false;
    const TrackAssignment b = match_detections_to_tracks(dets, tracks, cfg);
    CHECK(b.matched.size() == 1);
}

TEST_CASE("match_detections_to_tracks distance gate") {
    const std::vector<FusedDetection> dets = {det_at({0, 5}, "person")};
    const std::vector<Track> tracks = {track_at({0, 9}, "person")};
    const TrackAssignment a = match_detections_to_tracks(dets, tracks, TrackerConfig{});
    CHECK(a.matched.empty());
    CHECK(a.unmatched_detections == std::vector<std::size_t>{0});
    CHECK(a.unmatched_tracks == std::vector<std::size_t>{0});
}

TEST_CASE("match_detections_to_tracks missing category passes the gate") {
    const std::vector<FusedDetection> dets = {det_at({0, 5}, std::nullopt)};
    const std::vector<Track> tracks = {track_at({0, 5.2}, "car")};
    const TrackAssignment a = match_detections_to_tracks(dets, tracks, TrackerConfig{});
    CHECK(a.matched.size() == 1);
}
