#include "rcfusion/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "rcfusion/errors.hpp"
#include "rcfusion/rng.hpp"

namespace rcfusion {

namespace {

constexpr double kDenominatorEps = 1e-12;
constexpr double kDetEps = 1e-12;

bool finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Unchecked Eq.-(5) trig; also valid for the negative ranges a bad model can
// produce, where the mirrored point simply lands far from any inlier.
Point2 polar_to_cartesian_raw(double r, double theta) {
    return {r * std::sin(theta), r * std::cos(theta)};
}

Eigen::Matrix3d to_matrix(const std::array<double, 9>& h) {
    Eigen::Matrix3d m;
    m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    return m;
}

}  // namespace

Point2 polar_to_cartesian(const PolarPoint& p) {
    if (!std::isfinite(p.range) || !std::isfinite(p.azimuth))
        throw InvalidInput("polar_to_cartesian: non-finite input");
    if (p.range < 0.0) throw InvalidInput("polar_to_cartesian: negative range");
    return polar_to_cartesian_raw(p.range, p.azimuth);
}

PolarPoint cartesian_to_polar(const Point2& p) {
    if (!finite(p)) throw InvalidInput("cartesian_to_polar: non-finite input");
    if (p.x == 0.0 && p.y == 0.0)
        throw InvalidInput("cartesian_to_polar: azimuth undefined at the origin");
    return {std::hypot(p.x, p.y), std::atan2(p.x, p.y)};
}

Homography Homography::identity() {
    return from_row_major({1, 0, 0, 0, 1, 0, 0, 0, 1});
}

Homography Homography::from_row_major(const std::array<double, 9>& h) {
    double norm_sq = 0.0;
    for (double v : h) {
        if (!std::isfinite(v)) throw InvalidInput("Homography: non-finite coefficient");
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) throw InvalidInput("Homography: zero matrix");

    // Sign convention: h33 >= 0; when h33 == 0 the last nonzero entry decides.
    double sign = 1.0;
    for (int i = 8; i >= 0; --i) {
        if (h[i] != 0.0) {
            sign = h[i] > 0.0 ? 1.0 : -1.0;
            break;
        }
    }

    Homography out;
    if (sign > 0.0 && std::abs(norm_sq - 1.0) <= 1e-12) {
        // Already in canonical form; skip the division so re-normalizing a
        // stored matrix round-trips bit-exactly.
        out.h_ = h;
    } else {
        for (int i = 0; i < 9; ++i) out.h_[i] = h[i] * (sign / norm);
    }
    if (std::abs(out.det()) <= kDetEps) throw InvalidInput("Homography: singular matrix");
    return out;
}

Point2 Homography::apply(const Point2& p) const {
    if (!finite(p)) throw InvalidInput("apply_homography: non-finite point");
    const double w = h_[6] * p.x + h_[7] * p.y + h_[8];
    if (std::abs(w) <= kDenominatorEps)
        throw ProjectiveDegeneracy("apply_homography: vanishing denominator");
    return {(h_[0] * p.x + h_[1] * p.y + h_[2]) / w,
            (h_[3] * p.x + h_[4] * p.y + h_[5]) / w};
}

Homography Homography::inverse() const {
    const Eigen::Matrix3d inv = to_matrix(h_).inverse();
    std::array<double, 9> out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[3 * r + c] = inv(r, c);
    return from_row_major(out);
}

double Homography::det() const { return to_matrix(h_).determinant(); }

double frobenius_distance(const Homography& a, const Homography& b) {
    double direct = 0.0, flipped = 0.0;
    for (int i = 0; i < 9; ++i) {
        const double d = a.coeffs()[i] - b.coeffs()[i];
        const double f = a.coeffs()[i] + b.coeffs()[i];
        direct += d * d;
        flipped += f * f;
    }
    return std::sqrt(std::min(direct, flipped));
}

namespace {

struct Normalization {
    double cx = 0.0, cy = 0.0, scale = 1.0;

    Point2 apply(const Point2& p) const { return {(p.x - cx) * scale, (p.y - cy) * scale}; }
};

// Translate to the centroid, scale mean distance to sqrt(2).
Normalization hartley_normalization(std::span<const RawPair> pairs, bool src_side) {
    Normalization n;
    for (const auto& p : pairs) {
        const Point2& q = src_side ? p.src : p.dst;
        n.cx += q.x;
        n.cy += q.y;
    }
    n.cx /= static_cast<double>(pairs.size());
    n.cy /= static_cast<double>(pairs.size());
    double mean_dist = 0.0;
    for (const auto& p : pairs) {
        const Point2& q = src_side ? p.src : p.dst;
        mean_dist += std::hypot(q.x - n.cx, q.y - n.cy);
    }
    mean_dist /= static_cast<double>(pairs.size());
    n.scale = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
    return n;
}

Eigen::Matrix3d similarity_matrix(const Normalization& n) {
    Eigen::Matrix3d t;
    t << n.scale, 0, -n.scale * n.cx, 0, n.scale, -n.scale * n.cy, 0, 0, 1;
    return t;
}

}  // namespace

Homography estimate_homography_dlt(std::span<const RawPair> pairs) {
    if (pairs.size() < 4)
        throw InsufficientData("estimate_homography_dlt: need at least 4 pairs");
    for (const auto& p : pairs)
        if (!finite(p.src) || !finite(p.dst))
            throw InvalidInput("estimate_homography_dlt: non-finite pair");

    const Normalization ns = hartley_normalization(pairs, true);
    const Normalization nd = hartley_normalization(pairs, false);

    Eigen::MatrixXd a(2 * pairs.size(), 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Point2 s = ns.apply(pairs[i].src);
        const Point2 d = nd.apply(pairs[i].dst);
        a.row(2 * i) << -s.x, -s.y, -1, 0, 0, 0, d.x * s.x, d.x * s.y, d.x;
        a.row(2 * i + 1) << 0, 0, 0, -s.x, -s.y, -1, d.y * s.x, d.y * s.y, d.y;
    }

    // Full V: the minimal 4-pair system is 8x9, where thin V (9x8) would not
    // contain the null-space vector at all.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // Rank < 8 means the null space is not unique: collinear/degenerate data.
    if (sv(7) <= 1e-8 * sv(0))
        throw DegenerateConfiguration("estimate_homography_dlt: rank-deficient system");

    const Eigen::VectorXd hv = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
    const Eigen::Matrix3d h = similarity_matrix(nd).inverse() * hn * similarity_matrix(ns);

    std::array<double, 9> out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[3 * r + c] = h(r, c);
    try {
        return Homography::from_row_major(out);
    } catch (const InvalidInput&) {
        throw DegenerateConfiguration("estimate_homography_dlt: singular solution");
    }
}

namespace {

std::vector<RawPair> as_raw(std::span<const PointPair> pairs) {
    std::vector<RawPair> raw;
    raw.reserve(pairs.size());
    for (const auto& p : pairs)
        raw.push_back({p.image, {p.radar.range, p.radar.azimuth}});
    return raw;
}

}  // namespace

Homography estimate_homography_dlt(std::span<const PointPair> pairs) {
    return estimate_homography_dlt(std::span<const RawPair>(as_raw(pairs)));
}

double pair_projection_error_m(const Homography& h, const PointPair& pair) {
    Point2 projected_rt;
    try {
        projected_rt = h.apply(pair.image);
    } catch (const ProjectiveDegeneracy&) {
        return std::numeric_limits<double>::infinity();
    }
    const Point2 proj = polar_to_cartesian_raw(projected_rt.x, projected_rt.y);
    const Point2 obs = polar_to_cartesian_raw(pair.radar.range, pair.radar.azimuth);
    return std::hypot(proj.x - obs.x, proj.y - obs.y);
}

RansacResult estimate_homography_ransac(std::span<const PointPair> pairs,
                                        const RansacConfig& cfg) {
    if (cfg.max_iterations < 1 || cfg.inlier_threshold_m <= 0.0 || cfg.min_inliers < 4)
        throw InvalidInput("estimate_homography_ransac: bad config");
    const int n = static_cast<int>(pairs.size());
    if (n < 4) throw InsufficientData("estimate_homography_ransac: need at least 4 pairs");

    std::mt19937_64 rng = make_rng(cfg.seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    std::vector<bool> best_mask;
    int best_count = -1;

    std::array<int, 4> sample{};
    std::array<PointPair, 4> minimal{};
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        for (int k = 0; k < 4; ++k) {
            int idx;
            bool fresh;
            do {
                idx = pick(rng);
                fresh = true;
                for (int j = 0; j < k; ++j) fresh = fresh && sample[j] != idx;
            } while (!fresh);
            sample[k] = idx;
            minimal[k] = pairs[idx];
        }

        Homography h = Homography::identity();
        try {
            h = estimate_homography_dlt(std::span<const PointPair>(minimal));
        } catch (const DegenerateConfiguration&) {
            continue;
        }

        std::vector<bool> mask(n, false);
        int count = 0;
        for (int i = 0; i < n; ++i) {
            if (pair_projection_error_m(h, pairs[i]) <= cfg.inlier_threshold_m) {
                mask[i] = true;
                ++count;
            }
        }
        if (count > best_count) {  // ties: lowest iteration index wins
            best_count = count;
            best_mask = std::move(mask);
        }
    }

    if (best_count < cfg.min_inliers)
        throw CalibrationFailed("estimate_homography_ransac: consensus below min_inliers (" +
                                std::to_string(std::max(best_count, 0)) + " < " +
                                std::to_string(cfg.min_inliers) + ")");

    std::vector<PointPair> inliers;
    inliers.reserve(best_count);
    for (int i = 0; i < n; ++i)
        if (best_mask[i]) inliers.push_back(pairs[i]);
    Homography refit = Homography::identity();
    try {
        refit = estimate_homography_dlt(std::span<const PointPair>(inliers));
    } catch (const DegenerateConfiguration&) {
        throw CalibrationFailed("estimate_homography_ransac: degenerate consensus set");
    }
    return {refit, std::move(best_mask)};
}

double reprojection_error(std::span<const RawPair> pairs, const Homography& h) {
    if (pairs.empty()) throw InvalidInput("reprojection_error: empty pair list");
    double sum_sq = 0.0;
    for (const auto& p : pairs) {
        const Point2 proj = h.apply(p.src);
        const double dx = p.dst.x - proj.x;
        const double dy = p.dst.y - proj.y;
        sum_sq += dx * dx + dy * dy;
    }
    return std::sqrt(sum_sq / static_cast<double>(pairs.size()));
}

double reprojection_error_m(std::span<const PointPair> pairs, const Homography& h) {
    if (pairs.empty()) throw InvalidInput("reprojection_error_m: empty pair list");
    double sum_sq = 0.0;
    for (const auto& p : pairs) {
        const double e = pair_projection_error_m(h, p);
        sum_sq += e * e;
    }
    return std::sqrt(sum_sq / static_cast<double>(pairs.size()));
}

}  // namespace rcfusion
