#include "nvmag/kernels.hpp"

#include <cmath>
#include <limits>

namespace nvmag::kernels {

namespace {

inline double lorentz_point(double f, std::span<const double> center,
                            std::span<const double> fwhm, std::span<const double> contrast,
                            double baseline) {
    double acc = baseline;
    for (std::size_t k = 0; k < center.size(); ++k) {
        const double d = f - center[k];
        acc -= contrast[k] / (1.0 + 4.0 * d * d / (fwhm[k] * fwhm[k]));
    }
    return acc;
}

inline double allan_sum_one(std::span<const double> prefix, int m) {
    const std::size_t n = prefix.size() - 1;
    const double inv_m = 1.0 / static_cast<double>(m);
    double acc = 0.0;
    const std::size_t last = n - 2 * static_cast<std::size_t>(m);  // k < last
    for (std::size_t k = 0; k < last; ++k) {
        const double a = (prefix[k + m] - prefix[k]) * inv_m;
        const double b = (prefix[k + 2 * m] - prefix[k + m]) * inv_m;
        const double d = b - a;
        acc += d * d;
    }
    return acc;
}

struct IdwCell {
    double value;
    int hits;
};

inline IdwCell idw_one(std::span<const double> px, std::span<const double> py,
                       std::span<const double> pv, double cx, double cy, double r2) {
    constexpr double pin_dist = 1e-9;
    double wsum = 0.0, vsum = 0.0;
    int hits = 0;
    for (std::size_t p = 0; p < px.size(); ++p) {
        const double dx = px[p] - cx, dy = py[p] - cy;
        const double d2 = dx * dx + dy * dy;
        if (d2 > r2) continue;
        ++hits;
        if (d2 < pin_dist * pin_dist) return {pv[p], hits};
        const double w = 1.0 / d2;
        wsum += w;
        vsum += w * pv[p];
    }
    if (hits == 0) return {std::numeric_limits<double>::quiet_NaN(), 0};
    return {vsum / wsum, hits};
}

inline Vec3 dipole_one(const Vec3& pos, const Vec3& src, const Vec3& m) {
    const Vec3 r = pos - src;
    const double rn = r.norm();
    const Vec3 rh = r / rn;
    const double mr = m.dot(rh);
    // mu0/(4 pi) = 1e-7 T m / A; 1e9 nT/T
    return (3.0 * mr * rh - m) * (100.0 / (rn * rn * rn));
}

inline Vec3 affine_one(const Vec3& v, const Mat3& m, const Vec3& offset, const Vec3& slope,
                       double ref_temp, std::span<const double> temp, std::size_t i) {
    Vec3 out = m * v + offset;
    if (!temp.empty()) out = out + slope * (temp[i] - ref_temp);
    return out;
}

}  // namespace

void lorentzian_sum(std::span<const double> freq, std::span<const double> center,
                    std::span<const double> fwhm, std::span<const double> contrast,
                    double baseline, std::span<double> out, Exec ex) {
    const std::int64_t n = static_cast<std::int64_t>(freq.size());
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i)
            out[i] = lorentz_point(freq[i], center, fwhm, contrast, baseline);
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            out[i] = lorentz_point(freq[i], center, fwhm, contrast, baseline);
    }
}

void allan_sums(std::span<const double> prefix, std::span<const int> m,
                std::span<double> out, Exec ex) {
    const std::int64_t nm = static_cast<std::int64_t>(m.size());
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t j = 0; j < nm; ++j) out[j] = allan_sum_one(prefix, m[j]);
    } else {
        for (std::int64_t j = 0; j < nm; ++j) out[j] = allan_sum_one(prefix, m[j]);
    }
}

void idw_grid(std::span<const double> px, std::span<const double> py,
              std::span<const double> pv, double x0, double y0, double spacing,
              int nx, int ny, double radius, std::span<double> values,
              std::span<int> hits, Exec ex) {
    const double r2 = radius * radius;
    const std::int64_t ncell = static_cast<std::int64_t>(nx) * ny;
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t c = 0; c < ncell; ++c) {
            const auto cell = idw_one(px, py, pv, x0 + spacing * static_cast<double>(c % nx),
                                      y0 + spacing * static_cast<double>(c / nx), r2);
            values[c] = cell.value;
            hits[c] = cell.hits;
        }
    } else {
        for (std::int64_t c = 0; c < ncell; ++c) {
            const auto cell = idw_one(px, py, pv, x0 + spacing * static_cast<double>(c % nx),
                                      y0 + spacing * static_cast<double>(c / nx), r2);
            values[c] = cell.value;
            hits[c] = cell.hits;
        }
    }
}

void dipole_series(std::span<const Vec3> pos_m, const Vec3& src_m, const Vec3& moment_am2,
                   std::span<Vec3> out_nt, Exec ex) {
    const std::int64_t n = static_cast<std::int64_t>(pos_m.size());
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) out_nt[i] = dipole_one(pos_m[i], src_m, moment_am2);
    } else {
        for (std::int64_t i = 0; i < n; ++i) out_nt[i] = dipole_one(pos_m[i], src_m, moment_am2);
    }
}

void affine_series(std::span<const Vec3> in, const Mat3& m, const Vec3& offset,
                   const Vec3& slope, double ref_temp, std::span<const double> temp,
                   std::span<Vec3> out, Exec ex) {
    const std::int64_t n = static_cast<std::int64_t>(in.size());
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i)
            out[i] = affine_one(in[i], m, offset, slope, ref_temp, temp, i);
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            out[i] = affine_one(in[i], m, offset, slope, ref_temp, temp, i);
    }
}

}  // namespace nvmag::kernels
