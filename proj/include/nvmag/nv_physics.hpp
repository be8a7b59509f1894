#pragma once

#include <array>
#include <cstdint>

#include "nvmag/kernels.hpp"
#include "nvmag/rng.hpp"
#include "nvmag/types.hpp"

namespace nvmag {

// First-order axial model: each NV orientation contributes a resonance pair
//   f± = D(T) ± gamma |B · n_i|
// valid while the transverse terms stay negligible, enforced via
// max_axis_projection_nt. D(T) = d0 + beta (T - t0).
struct NvConstants {
    double d0_hz = 2.870e9;
    double beta_hz_per_k = -74.2e3;
    double gamma_hz_per_nt = 28.024;
    double t0_k = 298.15;
    double max_axis_projection_nt = 2.0e6;  // 2 mT
    double temp_min_k = 150.0;
    double temp_max_k = 450.0;

    void validate() const;
};

// Unit vectors along the four crystallographic NV orientations,
// {(1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1)} / sqrt(3).
// Pairwise dots are -1/3 and sum_i n_i n_i^T = (4/3) I.
const std::array<Vec3, 4>& tetrahedral_axes();

double zero_field_splitting(double temp_k, const NvConstants& c = {});

struct AxisResonance {
    double lower_hz = 0.0;
    double upper_hz = 0.0;
};

// Resonance pair per axis for the total field at the diamond.
// Throws ValidationError if any |B . n_i| exceeds the validity threshold or
// temp_k is outside the model range.
std::array<AxisResonance, 4> forward_resonances(const Vec3& total_field_nt, double temp_k,
                                                const NvConstants& c = {});

// Sorted 8-line PeakSet with axis pairing; line shape fields take the given params.
PeakSet to_peak_set(const std::array<AxisResonance, 4>& lines, const LineParams& line = {});

// Spectrum over grid: baseline minus unit-height Lorentzian per line plus
// N(0, noise_std) per sample from noise_seed. Requires step <= fwhm/4 and
// grid margin >= 3 fwhm beyond the outermost lines.
OdmrSpectrum synthesize_spectrum(const PeakSet& peaks, const LineParams& line,
                                 const FreqGrid& grid, double noise_std,
                                 std::uint64_t noise_seed,
                                 kernels::Exec ex = kernels::Exec::parallel);

// Sensor error model the calibration stage has to invert:
//   measured = L(angles) * diag(scale) * true + offset + offset_slope*(T-ref) + noise
// with L unit lower-triangular (l21=a0, l31=a1, l32=a2).
struct ImperfectionModel {
    Vec3 scale{1.0, 1.0, 1.0};          // each in (0.9, 1.1)
    Vec3 angles_rad{0.0, 0.0, 0.0};     // each |a| < 0.1
    Vec3 offset_nt{0.0, 0.0, 0.0};
    Vec3 offset_slope_nt_per_k{0.0, 0.0, 0.0};
    double ref_temp_k = 298.15;
    Vec3 noise_std_nt{0.0, 0.0, 0.0};

    Mat3 matrix() const;
    void validate() const;

    static ImperfectionModel table1_before();
    static ImperfectionModel table1_after();
};

FieldVector apply_imperfections(const FieldVector& true_field, double temp_k,
                                const ImperfectionModel& model, Rng& noise);

// Whole-series version; noise drawn per sample in order from noise_seed.
TimeSeries apply_imperfections(const TimeSeries& truth, const ImperfectionModel& model,
                               std::uint64_t noise_seed);

}  // namespace nvmag
