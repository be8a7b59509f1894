#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nvmag/config.hpp"
#include "nvmag/types.hpp"

namespace nvmag {

// Truth-series generators. All output uniform-rate series in the sensor frame.

// Random coil excitations: directions uniform on the sphere, amplitudes uniform
// in [0, max_amp]. One excitation per sample.
TimeSeries coil_points(std::size_t count, double max_amp_nt, std::uint64_t seed,
                       double rate_hz = 1.0, double temp_k = 298.15);

// Linear single-axis sweep across `steps` samples; other axes zero.
TimeSeries ramp(int axis, double from_nt, double to_nt, std::size_t steps,
                double rate_hz = 1.0, double temp_k = 298.15);

// Constant ambient field seen from a body spinning about `axis`:
// b(t) = R(axis, -2 pi t / period) * ambient.
TimeSeries spin_trajectory(const Vec3& ambient_nt, const Vec3& axis, double period_s,
                           double duration_s, double rate_hz, double temp_k = 298.15);

// Storm-like disturbance: per axis, 5..20 sinusoids with random phases and
// log-uniform periods between 10 min and 6 h, scaled so the per-axis peak
// excursion equals amp_nt; added to a constant base field.
TimeSeries storm_profile(const Vec3& base_nt, double amp_nt, double duration_s,
                         double rate_hz, std::uint64_t seed, double temp_k = 298.15);

// Spin for spin_stop_s, then hold the attitude: the rotation freezes and the
// remaining samples repeat the field at the stop angle.
TimeSeries balloon_flight(const Vec3& ambient_nt, const Vec3& axis, double period_s,
                          double spin_stop_s, double duration_s, double rate_hz,
                          double temp_k = 298.15);

struct DipoleSurveyParams {
    Vec3 source_pos_m{50.0, 40.0, -20.0};  // z negative: buried
    Vec3 moment_am2{0.0, 0.0, 4.0e4};
    int nlines = 10;
    double line_spacing_m = 10.0;
    double line_length_m = 100.0;
    double altitude_m = 30.0;
    double speed_mps = 5.0;
    Vec3 background_nt{0.0, 0.0, 50000.0};
    double origin_lat_deg = 45.0;
    double origin_lon_deg = -72.0;
};

// Boustrophedon lines along x at constant altitude; dipole anomaly plus the
// background at every sample; geo columns filled from the local tangent plane.
TimeSeries dipole_survey(const DipoleSurveyParams& p, double rate_hz, double temp_k = 298.15);

// Dataset description driving `generate_dataset`. params keys are kind-specific
// and validated against a per-kind whitelist; temp_k / temp_rate_k_per_s are
// accepted everywhere.
struct Scenario {
    std::string kind;  // chamber | coil | ramp | spin | storm | balloon | survey
    double duration_s = 60.0;
    double rate_hz = 10.0;
    std::uint64_t seed = 1;
    std::map<std::string, double> params;

    void validate() const;
};

// The truth series a scenario describes (no imperfections, no sensor noise).
TimeSeries scenario_truth(const Scenario& sc);

enum class DatasetMode { fields, spectra };

struct DatasetFiles {
    std::string truth_csv;
    std::string measured_csv;
    std::string spectra_csv;  // empty in fields mode
    std::string manifest_txt;
};

// Writes truth.csv, measured.csv (= imperfections applied to truth), spectra.csv
// in spectra mode (frames synthesized from bias(T) + measured field), and a
// manifest.txt recording every parameter and seed.
DatasetFiles generate_dataset(const Scenario& sc, const ImperfectionModel& imp,
                              DatasetMode mode, const std::string& out_dir,
                              const RunConfig& cfg);

}  // namespace nvmag
