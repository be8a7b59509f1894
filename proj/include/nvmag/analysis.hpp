#pragma once

#include <span>
#include <vector>

#include "nvmag/kernels.hpp"
#include "nvmag/types.hpp"

namespace nvmag {

// Overlapping Allan deviation per axis:
//   sigma^2(tau = m/fs) = 1/(2 (N-2m)) sum_{k=0}^{N-2m-1} (ybar_{k+m} - ybar_k)^2
// with ybar_k the m-sample mean starting at k. knee_tau_s is the tau of the
// minimum sigma per axis, the white-noise/drift crossover for mixed spectra.
struct AllanCurve {
    std::vector<double> tau_s;
    std::array<std::vector<double>, 3> sigma_nt;
    std::array<double, 3> knee_tau_s{};
};

// taus snap to integer multiples of the sample period. Requires a uniform rate
// and N >= 2m+1 for every tau; the error names the largest feasible tau.
AllanCurve allan_deviation(const TimeSeries& series, std::span<const double> taus,
                           kernels::Exec ex = kernels::Exec::parallel);

// White-noise amplitude spectral density read off the curve: sigma(tau) sqrt(2 tau),
// nT/sqrt(Hz). tau must be present in the curve.
Vec3 sensitivity_at(const AllanCurve& curve, double tau_s);

inline double tmi(const Vec3& b) { return b.norm(); }

struct HeadingReport {
    double max_abs_nt = 0.0;  // max |TMI - reference|
    double std_nt = 0.0;      // std of TMI about its own mean
    double rms_nt = 0.0;      // rms of TMI - reference
};

HeadingReport heading_error(const TimeSeries& series, double reference_tmi_nt);

// corrected(t) = survey(t) - (base(t) - mean(base)), base linearly interpolated
// in time. Survey samples outside the base span raise ValidationError naming
// the uncovered interval.
TimeSeries diurnal_correct(const TimeSeries& survey, const TimeSeries& base);

struct GridSpec2D {
    double origin_lat_deg = 0.0;
    double origin_lon_deg = 0.0;
    double spacing_m = 5.0;
    int nx = 0, ny = 0;  // 0: size to the data extent
};

struct TmiGrid {
    double origin_lat_deg = 0.0;
    double origin_lon_deg = 0.0;
    double spacing_m = 0.0;
    int nx = 0, ny = 0;
    std::vector<double> tmi_nt;  // row-major iy*nx+ix, NaN where empty
    std::vector<int> hits;

    double& at(int ix, int iy) { return tmi_nt[static_cast<std::size_t>(iy) * nx + ix]; }
    double at(int ix, int iy) const { return tmi_nt[static_cast<std::size_t>(iy) * nx + ix]; }
};

// Inverse-distance-squared TMI map of a geo-referenced series on grid nodes
// origin + index*spacing, search radius 3*spacing. Uses a local tangent plane
// at the grid origin (111320 m/deg latitude, scaled by cos(lat) in longitude).
TmiGrid grid_tmi_map(const TimeSeries& series, const GridSpec2D& spec,
                     kernels::Exec ex = kernels::Exec::parallel);

}  // namespace nvmag
