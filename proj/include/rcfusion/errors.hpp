#pragma once

#include <stdexcept>
#include <string>

namespace rcfusion {

/// Bad argument values: non-finite inputs, violated preconditions, bad config.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Homography application hit a (near-)vanishing projective denominator.
struct ProjectiveDegeneracy : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fewer data points than the estimator needs.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data is rank-deficient (e.g. all points collinear).
struct DegenerateConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// No usable homography could be estimated from the correspondences.
struct CalibrationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A calibration file holds a singular or otherwise unusable model.
struct InvalidCalibration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, long line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    long line_number = 0;
};

/// Structurally valid file whose content violates the schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point with non-positive depth handed to a pinhole projection.
struct BehindCamera : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ground-truth and hypothesis logs do not cover the same frames.
struct FrameMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rcfusion
