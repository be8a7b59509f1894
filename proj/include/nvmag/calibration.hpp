#pragma once

#include <optional>
#include <string>

#include "nvmag/types.hpp"

namespace nvmag {

// Affine correction: true ~ matrix * measured + offset (+ temp_coeff * (T - ref_temp)).
struct CalibrationModel {
    Mat3 matrix;
    Vec3 offset_nt;
    std::optional<Vec3> temp_coeff_nt_per_k;
    double ref_temp_k = 298.15;
    std::string fitted_at;  // ISO-8601, carried as provenance only
    Vec3 residual_std_nt;   // per-axis training residual
};

// Scale / orthogonality / offset view of a model, the shear parameterization:
// matrix = L(ortho) * diag(scale), L unit lower-triangular. exact=false flags a
// matrix outside that family (significant upper triangle or angles > 0.1 rad);
// the table is still returned.
struct CalTable {
    Vec3 scale{1, 1, 1};
    Vec3 ortho_rad{0, 0, 0};
    Vec3 offset_nt{0, 0, 0};
    bool exact = true;
};

struct AffineFitOptions {
    bool use_temperature = false;  // include a linear temperature column
    std::size_t min_points = 12;
    double min_direction_spread = 1e-3;  // smallest normalized singular value of the directions
};

// Least-squares affine fit of reference against measured, row-aligned series.
// Throws ValidationError on too few points or coplanar coverage.
CalibrationModel fit_affine_calibration(const TimeSeries& measured, const TimeSeries& reference,
                                        const AffineFitOptions& opt = {});

Vec3 apply_calibration(const CalibrationModel& m, const Vec3& field_nt, double temp_k);
TimeSeries apply_calibration(const CalibrationModel& m, const TimeSeries& series);
MagReading apply_calibration(const CalibrationModel& m, const MagReading& reading);

CalTable cal_table(const CalibrationModel& m);
CalibrationModel from_table(const CalTable& t);

struct TemperatureFit {
    Vec3 slope_nt_per_k;
    Vec3 intercept_nt;   // residual at the mean temperature
    Vec3 slope_se;       // standard errors
    double mean_temp_k = 0.0;
    double span_k = 0.0;
};

// Per-axis linear regression of (reading - known_field) against temperature.
// Requires a span of at least min_span_k.
TemperatureFit fit_temperature_model(const TimeSeries& readings, const Vec3& known_field_nt,
                                     double min_span_k = 5.0);

struct SpinCalOptions {
    double reference_tmi_nt = 0.0;  // 0: normalize to the mean measured magnitude
    bool offsets_only = false;      // sphere (Kasa) fit, matrix pinned to identity
    std::size_t min_points = 50;
    double max_gap_deg = 60.0;      // largest angular hole allowed in the coverage
};

// Scalar-reference calibration from a rotation dataset: least-squares ellipsoid
// through the readings, mapped back to a sphere of the reference radius.
// Throws CoverageError when the directions leave a gap above max_gap_deg.
CalibrationModel spin_calibration(const TimeSeries& readings, const SpinCalOptions& opt = {});

struct AccuracyReport {
    Vec3 mean_err_nt;
    Vec3 std_err_nt;
    Vec3 max_abs_err_nt;
    double tmi_rms_nt = 0.0;
    std::size_t n = 0;
};

AccuracyReport evaluate_accuracy(const TimeSeries& corrected, const TimeSeries& reference);

}  // namespace nvmag
