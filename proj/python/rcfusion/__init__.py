"""Python surface of the radar-camera fusion tracking core.

Everything here is re-exported from the compiled ``_core`` module; see the
individual docstrings for semantics.
"""

from ._core import (
    DegenerateConfigurationError,
    Homography,
    InvalidInputError,
    KalmanState,
    Point2,
    PolarPoint,
    cartesian_to_polar,
    estimate_homography_dlt,
    estimate_homography_ransac,
    gate_by_category,
    hungarian,
    kf_predict,
    kf_update,
    lower_center,
    make_initial_state,
    polar_to_cartesian,
    similarity,
)

__all__ = [
    "DegenerateConfigurationError",
    "Homography",
    "InvalidInputError",
    "KalmanState",
    "Point2",
    "PolarPoint",
    "cartesian_to_polar",
    "estimate_homography_dlt",
    "estimate_homography_ransac",
    "gate_by_category",
    "hungarian",
    "kf_predict",
    "kf_update",
    "lower_center",
    "make_initial_state",
    "polar_to_cartesian",
    "similarity",
]

__version__ = "0.1.0"
