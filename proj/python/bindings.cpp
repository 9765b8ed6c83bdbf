#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rcfusion/association.hpp"
#include "rcfusion/detection.hpp"
#include "rcfusion/errors.hpp"
#include "rcfusion/geometry.hpp"
#include "rcfusion/tracking.hpp"

namespace py = pybind11;
using namespace rcfusion;

namespace {

Embedding to_embedding(const std::vector<double>& values) {
    if (values.size() != static_cast<std::size_t>(kEmbeddingDim)) {
        throw std::invalid_argument("embedding must hold " + std::to_string(kEmbeddingDim) +
                                    " values");
    }
    Embedding e{};
    std::copy(values.begin(), values.end(), e.begin());
    return e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Radar-camera fusion tracking core operations";

    py::register_exception<InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
    py::register_exception<DegenerateConfiguration>(m, "DegenerateConfigurationError",
                                                    PyExc_ValueError);

    py::class_<Point2>(m, "Point2")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return Point2{x, y}; }), py::arg("x"),
             py::arg("y"))
        .def_readwrite("x", &Point2::x)
        .def_readwrite("y", &Point2::y)
        .def("__repr__", [](const Point2& p) {
            return "Point2(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
        });

    py::class_<PolarPoint>(m, "PolarPoint")
        .def(py::init<>())
        .def(py::init([](double range, double azimuth) { return PolarPoint{range, azimuth}; }),
             py::arg("range"), py::arg("azimuth"))
        .def_readwrite("range", &PolarPoint::range)
        .def_readwrite("azimuth", &PolarPoint::azimuth)
        .def("__repr__", [](const PolarPoint& p) {
            return "PolarPoint(" + std::to_string(p.range) + ", " + std::to_string(p.azimuth) +
                   ")";
        });

    m.def("polar_to_cartesian", &polar_to_cartesian, py::arg("point"),
          "Ground-plane Cartesian position of a polar radar point.");
    m.def("cartesian_to_polar", &cartesian_to_polar, py::arg("point"),
          "Polar (range, azimuth) form of a ground-plane point.");

    py::class_<Homography>(m, "Homography")
        .def_static("identity", &Homography::identity)
        .def_static(
            "from_row_major",
            [](const std::vector<double>& h) {
                if (h.size() != 9) throw std::invalid_argument("expected 9 coefficients");
                std::array<double, 9> arr{};
                std::copy(h.begin(), h.end(), arr.begin());
                return Homography::from_row_major(arr);
            },
            py::arg("coefficients"), "Builds a normalized homography from 9 row-major values.")
        .def("apply", &Homography::apply, py::arg("point"))
        .def("inverse", &Homography::inverse)
        .def("det", &Homography::det)
        .def("coeffs",
             [](const Homography& h) {
                 return std::vector<double>(h.coeffs().begin(), h.coeffs().end());
             })
        .def("__eq__", [](const Homography& a, const Homography& b) { return a == b; });

    m.def(
        "estimate_homography_dlt",
        [](const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>&
               pairs) {
            std::vector<RawPair> raw;
            raw.reserve(pairs.size());
            for (const auto& [src, dst] : pairs) {
                raw.push_back({{src.first, src.second}, {dst.first, dst.second}});
            }
            return estimate_homography_dlt(std::span<const RawPair>(raw));
        },
        py::arg("pairs"),
        "Least-squares homography from ((sx, sy), (dx, dy)) correspondence pairs.");

    m.def(
        "estimate_homography_ransac",
        [](const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>&
               pairs,
           int max_iterations, double inlier_threshold_m, int min_inliers, std::uint64_t seed) {
            std::vector<PointPair> pp;
            pp.reserve(pairs.size());
            for (const auto& [image, radar] : pairs) {
                pp.push_back({{image.first, image.second}, {radar.first, radar.second}});
            }
            RansacConfig cfg;
            cfg.max_iterations = max_iterations;
            cfg.inlier_threshold_m = inlier_threshold_m;
            cfg.min_inliers = min_inliers;
            cfg.seed = seed;
            RansacResult result = estimate_homography_ransac(std::span<const PointPair>(pp), cfg);
            return py::make_tuple(result.h, result.inlier_mask);
        },
        py::arg("pairs"), py::arg("max_iterations") = 1000, py::arg("inlier_threshold_m") = 0.5,
        py::arg("min_inliers") = 8, py::arg("seed") = 0,
        "RANSAC homography over ((u, v), (r, theta)) pairs; returns (homography, inlier_mask).");

    m.def(
        "lower_center",
        [](double x1, double y1, double x2, double y2) {
            return lower_center(BoundingBox{x1, y1, x2, y2});
        },
        py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"),
        "Bottom-center anchor of a bounding box (the ground-contact pixel).");

    m.def(
        "similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return similarity(to_embedding(a), to_embedding(b));
        },
        py::arg("a"), py::arg("b"),
        "Logistic appearance similarity of two 128-d embeddings in [0, 1].");

    m.def(
        "hungarian",
        [](const std::vector<std::vector<double>>& costs) {
            const std::size_t rows = costs.size();
            const std::size_t cols = rows == 0 ? 0 : costs[0].size();
            CostMatrix matrix(rows, cols);
            for (std::size_t r = 0; r < rows; ++r) {
                if (costs[r].size() != cols) {
                    throw std::invalid_argument("cost matrix rows differ in length");
                }
                for (std::size_t c = 0; c < cols; ++c) {
                    const double value = costs[r][c];
                    if (std::isinf(value)) {
                        matrix.set_infeasible(r, c);
                    } else {
                        matrix.set(r, c, value);
                    }
                }
            }
            return hungarian(matrix);
        },
        py::arg("costs"),
        "Minimum-cost assignment; math.inf marks infeasible cells. Returns (row, col) pairs.");

    m.def(
        "gate_by_category",
        [](const std::optional<std::string>& a, const std::optional<std::string>& b) {
            return gate_by_category(a, b);
        },
        py::arg("a"), py::arg("b"),
        "Category gate: passes when either label is missing or both are equal.");

    py::class_<KalmanState>(m, "KalmanState")
        .def_property_readonly("position", &KalmanState::position)
        .def_property_readonly("velocity", &KalmanState::velocity)
        .def_property_readonly(
            "state", [](const KalmanState& s) { return std::vector<double>(s.x.begin(), s.x.end()); })
        .def_property_readonly("covariance", [](const KalmanState& s) {
            return std::vector<double>(s.p.begin(), s.p.end());
        });

    m.def(
        "make_initial_state",
        [](double x, double y, double pos_std, double vel_std) {
            return make_initial_state(Point2{x, y}, pos_std, vel_std);
        },
        py::arg("x"), py::arg("y"), py::arg("pos_std"), py::arg("vel_std"),
        "Zero-velocity constant-velocity state at (x, y).");
    m.def("kf_predict", &kf_predict, py::arg("state"), py::arg("dt"), py::arg("accel_std"),
          "Constant-velocity prediction with white-acceleration process noise.");
    m.def(
        "kf_update",
        [](const KalmanState& state, double x, double y, double meas_noise_std) {
            return kf_update(state, Point2{x, y}, meas_noise_std);
        },
        py::arg("state"), py::arg("x"), py::arg("y"), py::arg("meas_noise_std"),
        "Position-measurement update (Joseph form).");
}
