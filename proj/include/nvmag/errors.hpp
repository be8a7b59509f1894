#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvmag {

// Exit-code categories used by the CLI: validation 2, I/O 3, numerical 4.

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fewer prominent minima than requested.
struct DetectionError : NumericalError {
    int found, expected;
    DetectionError(int found_, int expected_)
        : NumericalError("peak detection found " + std::to_string(found_) + " of " +
                         std::to_string(expected_) + " expected minima"),
          found(found_), expected(expected_) {}
};

// Non-convergence; carries the last iterate for diagnostics.
struct FitError : NumericalError {
    std::vector<double> last_params;
    double residual_rms;
    FitError(std::string what, std::vector<double> params, double rms)
        : NumericalError(std::move(what)), last_params(std::move(params)), residual_rms(rms) {}
};

struct DegeneracyError : NumericalError {
    using NumericalError::NumericalError;
};

struct TrackingLossError : NumericalError {
    int axis;
    explicit TrackingLossError(int axis_, const std::string& detail)
        : NumericalError("tracking loss on axis " + std::to_string(axis_) + ": " + detail),
          axis(axis_) {}
};

struct PairingError : NumericalError {
    using NumericalError::NumericalError;
};

// One unreadable spectrum frame; the reader has already skipped past it, so
// the caller may flag the frame and keep streaming. t_s is NaN when the frame
// broke before its first valid row.
struct FrameError : IoError {
    std::int64_t frame;
    double t_s;
    FrameError(std::int64_t frame_, double t_s_, const std::string& detail)
        : IoError("frame " + std::to_string(frame_) + ": " + detail), frame(frame_), t_s(t_s_) {}
};

// Spherical coverage too sparse for an ellipsoid fit.
struct CoverageError : ValidationError {
    double largest_gap_deg;
    explicit CoverageError(double gap_deg)
        : ValidationError("spin coverage too sparse: largest angular gap " +
                          std::to_string(gap_deg) + " deg (limit 60)"),
          largest_gap_deg(gap_deg) {}
};

}  // namespace nvmag
