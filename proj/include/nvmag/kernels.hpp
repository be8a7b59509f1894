#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nvmag/types.hpp"

namespace nvmag::kernels {

// Hot loops live here in paired serial/OpenMP variants. Parallel loops only ever
// split across independent output elements, so both variants produce bit-identical
// results at any thread count; tests assert exact equality and the bench target
// times them against each other.

enum class Exec { serial, parallel };

// out[i] = baseline - sum_k contrast[k] * L(freq[i]; center[k], fwhm[k])
// with unit-height L(f) = 1 / (1 + 4 (f-center)^2 / fwhm^2).
void lorentzian_sum(std::span<const double> freq, std::span<const double> center,
                    std::span<const double> fwhm, std::span<const double> contrast,
                    double baseline, std::span<double> out, Exec ex = Exec::parallel);

// Overlapping two-sample sums for the Allan estimator. prefix has n+1 entries,
// prefix[k] = sum of the first k samples. For each window length m[j] (1 <= m,
// 2m < n) writes sum_{k=0}^{n-2m-1} (mean_{k+m} - mean_k)^2 where mean_k is the
// m-sample average starting at k. Parallel across the m entries.
void allan_sums(std::span<const double> prefix, std::span<const int> m,
                std::span<double> out, Exec ex = Exec::parallel);

// Inverse-distance-squared interpolation onto grid nodes at
// (x0 + ix*spacing, y0 + iy*spacing), ix in [0,nx), iy in [0,ny).
// Points farther than radius are ignored; a point within 1e-9 m of a node pins
// the node to that value. values is row-major iy*nx+ix; nodes with no point in
// range get NaN and hits 0.
void idw_grid(std::span<const double> px, std::span<const double> py,
              std::span<const double> pv, double x0, double y0, double spacing,
              int nx, int ny, double radius, std::span<double> values,
              std::span<int> hits, Exec ex = Exec::parallel);

// Point-dipole anomaly at each position, nT. moment in A m^2, positions in m:
// B = 100 * (3 (m.r̂) r̂ - m) / |r|^3 with r = pos - src (1e-7 T m/A scaled to nT).
void dipole_series(std::span<const Vec3> pos_m, const Vec3& src_m, const Vec3& moment_am2,
                   std::span<Vec3> out_nt, Exec ex = Exec::parallel);

// out[i] = M*in[i] + offset + slope*(temp[i] - ref_temp); temp may be empty (no temp term).
void affine_series(std::span<const Vec3> in, const Mat3& m, const Vec3& offset,
                   const Vec3& slope, double ref_temp, std::span<const double> temp,
                   std::span<Vec3> out, Exec ex = Exec::parallel);

}  // namespace nvmag::kernels
