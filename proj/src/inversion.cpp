#include "nvmag/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nvmag/errors.hpp"

namespace nvmag {

void BiasFieldConfig::validate(const NvConstants& c) const {
    const auto& axes = tetrahedral_axes();
    std::array<double, 4> mag;
    for (int i = 0; i < 4; ++i) {
        const double p = field_nt.dot(axes[i]);
        mag[i] = std::abs(p);
        if (mag[i] <= max_external_nt)
            throw ValidationError("bias projection on axis " + std::to_string(i) + " (" +
                                  std::to_string(p) + " nT) does not dominate the external "
                                  "budget of " + std::to_string(max_external_nt) + " nT");
        if (mag[i] + max_external_nt > c.max_axis_projection_nt)
            throw ValidationError("bias plus external budget exceeds the first-order validity "
                                  "limit on axis " + std::to_string(i));
    }
    std::sort(mag.begin(), mag.end());
    for (int i = 1; i < 4; ++i)
        if (mag[i] - mag[i - 1] < separation_margin_nt)
            throw ValidationError("bias axis projections separated by " +
                                  std::to_string(mag[i] - mag[i - 1]) +
                                  " nT, below the pairing margin of " +
                                  std::to_string(separation_margin_nt));
}

std::array<double, 4> splittings_to_projections(const PeakSet& peaks,
                                                const BiasFieldConfig& bias,
                                                const NvConstants& c) {
    const auto& axes = tetrahedral_axes();
    std::array<double, 4> proj;
    for (int a = 0; a < 4; ++a) {
        const auto [lo, hi] = peaks.pairing[a];
        const double split = peaks.center_hz[hi] - peaks.center_hz[lo];
        if (split < 0)
            throw ValidationError("axis " + std::to_string(a) +
                                  " pairing is inverted (negative splitting)");
        const double sgn = bias.field_nt.dot(axes[a]) < 0 ? -1.0 : 1.0;
        proj[a] = sgn * split / (2.0 * c.gamma_hz_per_nt);
        if (std::abs(proj[a]) > c.max_axis_projection_nt)
            throw ValidationError("axis " + std::to_string(a) + " projection " +
                                  std::to_string(proj[a]) +
                                  " nT exceeds the first-order validity limit");
    }
    return proj;
}

FieldSolution projections_to_field(const std::array<double, 4>& proj_nt, const NvConstants&) {
    // N^T N = (4/3) I for the tetrahedral rows, so pinv(N) = (3/4) N^T
    const auto& axes = tetrahedral_axes();
    Vec3 b{};
    for (int a = 0; a < 4; ++a) b = b + axes[a] * proj_nt[a];
    b = b * 0.75;
    double r2 = 0;
    for (int a = 0; a < 4; ++a) {
        const double d = axes[a].dot(b) - proj_nt[a];
        r2 += d * d;
    }
    return {b, std::sqrt(r2)};
}

double common_mode_to_temperature(const PeakSet& peaks, const NvConstants& c) {
    double mid = 0;
    for (int a = 0; a < 4; ++a) {
        const auto [lo, hi] = peaks.pairing[a];
        mid += 0.5 * (peaks.center_hz[lo] + peaks.center_hz[hi]);
    }
    mid /= 4.0;
    const double t = c.t0_k + (mid - c.d0_hz) / c.beta_hz_per_k;
    if (t < c.temp_min_k || t > c.temp_max_k)
        throw ValidationError("inferred diamond temperature " + std::to_string(t) +
                              " K outside model range");
    return t;
}

MagReading invert_frame(const PeakSet& peaks, double t_s, const BiasFieldConfig& bias,
                        const NvConstants& c) {
    MagReading r;
    r.t_s = t_s;
    r.diamond_temp_k = common_mode_to_temperature(peaks, c);

    const auto proj = splittings_to_projections(peaks, bias, c);
    const FieldSolution sol = projections_to_field(proj, c);
    r.field = {sol.field_nt - bias.at(r.diamond_temp_k), Frame::sensor};
    r.residual_nt = sol.residual_nt;

    // midpoint spread across axes, high when lineshape drifts break the model
    double mid_lo = 0, mid_hi = 0, sig_mean = 0;
    for (int a = 0; a < 4; ++a) {
        const auto [lo, hi] = peaks.pairing[a];
        const double mid = 0.5 * (peaks.center_hz[lo] + peaks.center_hz[hi]);
        if (a == 0) mid_lo = mid_hi = mid;
        mid_lo = std::min(mid_lo, mid);
        mid_hi = std::max(mid_hi, mid);
    }
    for (double s : peaks.sigma_hz) sig_mean += s;
    sig_mean /= 8.0;
    r.midpoint_spread_hz = mid_hi - mid_lo;
    r.high_spread = sig_mean > 0 && r.midpoint_spread_hz > 10.0 * sig_mean;

    // sigma(p_a) = sqrt(s_lo^2 + s_hi^2) / (2 gamma); rows of pinv map them to axes
    const auto& axes = tetrahedral_axes();
    std::array<double, 4> psig;
    for (int a = 0; a < 4; ++a) {
        const auto [lo, hi] = peaks.pairing[a];
        psig[a] = std::sqrt(peaks.sigma_hz[lo] * peaks.sigma_hz[lo] +
                            peaks.sigma_hz[hi] * peaks.sigma_hz[hi]) /
                  (2.0 * c.gamma_hz_per_nt);
    }
    for (int ax = 0; ax < 3; ++ax) {
        double v = 0;
        for (int a = 0; a < 4; ++a) {
            const double pin = 0.75 * axes[a][ax];  // pinv(N) entry (ax, a)
            v += pin * pin * psig[a] * psig[a];
        }
        r.sigma_nt[ax] = std::sqrt(v);
    }
    return r;
}

}  // namespace nvmag
