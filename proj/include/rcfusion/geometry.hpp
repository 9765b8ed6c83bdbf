#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rcfusion {

/// 2D point. Interpretation is contextual: image pixels (u, v) or ground
/// meters (x, y). x is rightward, y is forward (radar boresight).
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Point on the radar range-azimuth plane. Azimuth is radians, zero at
/// boresight, positive to the right.
struct PolarPoint {
    double range = 0.0;
    double azimuth = 0.0;

    friend bool operator==(const PolarPoint&, const PolarPoint&) = default;
};

/// (r, theta) -> (x, y) = (r sin(theta), r cos(theta)).
Point2 polar_to_cartesian(const PolarPoint& p);

/// (x, y) -> (r, theta) = (hypot, atan2(x, y)). Rejects the origin.
PolarPoint cartesian_to_polar(const Point2& p);

/// Planar projective transform, stored row-major (h11..h33), normalized to
/// Frobenius norm 1 with h33 >= 0 so equal-up-to-scale matrices compare equal.
class Homography {
  public:
    static Homography identity();

    /// Validates finiteness and |det| > 1e-12 after normalization.
    static Homography from_row_major(const std::array<double, 9>& h);

    /// Applies the projective map; throws ProjectiveDegeneracy when the
    /// denominator h31*u + h32*v + h33 vanishes (|w| <= 1e-12).
    Point2 apply(const Point2& p) const;

    Homography inverse() const;

    const std::array<double, 9>& coeffs() const { return h_; }
    double det() const;

    friend bool operator==(const Homography&, const Homography&) = default;

  private:
    Homography() = default;
    std::array<double, 9> h_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

inline Point2 apply_homography(const Homography& h, const Point2& p) { return h.apply(p); }

/// Frobenius distance between two (already normalized) homographies,
/// minimized over the residual sign ambiguity when h33 == 0.
double frobenius_distance(const Homography& a, const Homography& b);

/// Image pixel <-> radar polar correspondence used for calibration.
struct PointPair {
    Point2 image;       // (u, v) pixels
    PolarPoint radar;   // (r, theta)
};

/// Plain source->destination pair in arbitrary planar coordinates.
struct RawPair {
    Point2 src;
    Point2 dst;
};

struct RansacConfig {
    int max_iterations = 1000;
    double inlier_threshold_m = 0.5;  // Cartesian ground-space residual
    int min_inliers = 8;
    std::uint64_t seed = 0;
};

/// Least-squares homography from >= 4 pairs via the stacked 2Nx9 system,
/// with Hartley normalization of both point sets.
Homography estimate_homography_dlt(std::span<const RawPair> pairs);

/// Convenience overload for calibration pairs; the polar destination is fit
/// as raw (r, theta) coordinates, exactly the map applied at lookup time.
Homography estimate_homography_dlt(std::span<const PointPair> pairs);

struct RansacResult {
    Homography h;
    std::vector<bool> inlier_mask;  // one flag per input pair
};

/// RANSAC over image->polar pairs. A pair is an inlier when the Cartesian
/// ground distance between its projected and observed positions is within
/// cfg.inlier_threshold_m. The winning consensus set is refit with DLT.
RansacResult estimate_homography_ransac(std::span<const PointPair> pairs, const RansacConfig& cfg);

/// Cartesian ground distance (meters) between H(image) and the observed
/// polar position of one pair.
double pair_projection_error_m(const Homography& h, const PointPair& pair);

/// RMS residual of dst - H(src) in the destination plane's own units.
double reprojection_error(std::span<const RawPair> pairs, const Homography& h);

/// RMS Cartesian ground-space residual (meters) of image->polar pairs.
double reprojection_error_m(std::span<const PointPair> pairs, const Homography& h);

}  // namespace rcfusion
