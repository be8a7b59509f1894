#include "nvmag/nv_physics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nvmag/errors.hpp"

namespace nvmag {

void NvConstants::validate() const {
    if (d0_hz <= 0 || gamma_hz_per_nt <= 0)
        throw ValidationError("nv constants: d0 and gamma must be positive");
    if (beta_hz_per_k >= 0)
        throw ValidationError("nv constants: beta must be negative (D decreases with T)");
    if (max_axis_projection_nt <= 0)
        throw ValidationError("nv constants: validity threshold must be positive");
    if (temp_min_k >= temp_max_k) throw ValidationError("nv constants: bad temperature range");
}

const std::array<Vec3, 4>& tetrahedral_axes() {
    static const double s = 1.0 / std::sqrt(3.0);
    static const std::array<Vec3, 4> axes = {
        Vec3{s, s, s}, Vec3{s, -s, -s}, Vec3{-s, s, -s}, Vec3{-s, -s, s}};
    return axes;
}

double zero_field_splitting(double temp_k, const NvConstants& c) {
    if (temp_k < c.temp_min_k || temp_k > c.temp_max_k)
        throw ValidationError("temperature " + std::to_string(temp_k) +
                              " K outside model range [" + std::to_string(c.temp_min_k) + ", " +
                              std::to_string(c.temp_max_k) + "]");
    return c.d0_hz + c.beta_hz_per_k * (temp_k - c.t0_k);
}

std::array<AxisResonance, 4> forward_resonances(const Vec3& total_field_nt, double temp_k,
                                                const NvConstants& c) {
    const double d = zero_field_splitting(temp_k, c);
    std::array<AxisResonance, 4> out;
    const auto& axes = tetrahedral_axes();
    for (int i = 0; i < 4; ++i) {
        const double proj = total_field_nt.dot(axes[i]);
        if (std::abs(proj) > c.max_axis_projection_nt)
            throw ValidationError("axis " + std::to_string(i) + " projection " +
                                  std::to_string(proj) + " nT exceeds first-order validity limit " +
                                  std::to_string(c.max_axis_projection_nt) + " nT");
        const double half = c.gamma_hz_per_nt * std::abs(proj);
        out[i] = {d - half, d + half};
    }
    return out;
}

PeakSet to_peak_set(const std::array<AxisResonance, 4>& lines, const LineParams& line) {
    // sort the 8 lines by frequency, keeping (axis, is_upper) labels for the pairing
    struct Tagged {
        double f;
        int axis;
        int upper;
    };
    std::array<Tagged, 8> tag;
    for (int i = 0; i < 4; ++i) {
        tag[2 * i] = {lines[i].lower_hz, i, 0};
        tag[2 * i + 1] = {lines[i].upper_hz, i, 1};
    }
    std::stable_sort(tag.begin(), tag.end(), [](const Tagged& a, const Tagged& b) {
        if (a.f != b.f) return a.f < b.f;
        if (a.axis != b.axis) return a.axis < b.axis;
        return a.upper < b.upper;
    });

    PeakSet ps;
    for (int k = 0; k < 8; ++k) {
        ps.center_hz[k] = tag[k].f;
        ps.fwhm_hz[k] = line.fwhm_hz;
        ps.contrast[k] = line.contrast;
        if (tag[k].upper)
            ps.pairing[tag[k].axis].second = k;
        else
            ps.pairing[tag[k].axis].first = k;
    }
    ps.baseline = line.baseline;
    return ps;
}

OdmrSpectrum synthesize_spectrum(const PeakSet& peaks, const LineParams& line,
                                 const FreqGrid& grid, double noise_std,
                                 std::uint64_t noise_seed, kernels::Exec ex) {
    if (grid.step_hz <= 0 || grid.f_max_hz <= grid.f_min_hz)
        throw ValidationError("frequency grid: need f_max > f_min and step > 0");
    if (grid.step_hz > line.fwhm_hz / 4.0)
        throw ValidationError("frequency grid step " + std::to_string(grid.step_hz) +
                              " Hz undersamples the line (need <= fwhm/4 = " +
                              std::to_string(line.fwhm_hz / 4.0) + ")");
    const auto [lo_it, hi_it] = std::minmax_element(peaks.center_hz.begin(), peaks.center_hz.end());
    const double margin = 3.0 * line.fwhm_hz;
    if (*lo_it - grid.f_min_hz < margin || grid.f_max_hz - *hi_it < margin)
        throw ValidationError("frequency grid must extend >= 3 fwhm beyond the outermost lines");

    const std::size_t n = grid.points();
    std::vector<double> freq(n);
    for (std::size_t i = 0; i < n; ++i)
        freq[i] = grid.f_min_hz + grid.step_hz * static_cast<double>(i);

    OdmrSpectrum spec;
    spec.f_min_hz = grid.f_min_hz;
    spec.step_hz = grid.step_hz;
    spec.contrast.resize(n);
    kernels::lorentzian_sum(freq, peaks.center_hz, peaks.fwhm_hz, peaks.contrast,
                            peaks.baseline, spec.contrast, ex);
    if (noise_std > 0) {
        Rng rng(noise_seed);
        for (auto& v : spec.contrast) v += noise_std * rng.normal();
    }
    return spec;
}

Mat3 ImperfectionModel::matrix() const {
    const Mat3 shear{{1, 0, 0, angles_rad.x, 1, 0, angles_rad.y, angles_rad.z, 1}};
    return shear * Mat3::diag(scale);
}

void ImperfectionModel::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (scale[i] <= 0.9 || scale[i] >= 1.1)
            throw ValidationError("imperfection scale out of (0.9, 1.1)");
        if (std::abs(angles_rad[i]) >= 0.1)
            throw ValidationError("imperfection angle magnitude must stay below 0.1 rad");
        if (noise_std_nt[i] < 0) throw ValidationError("noise std must be >= 0");
    }
}

ImperfectionModel ImperfectionModel::table1_before() {
    ImperfectionModel m;
    m.scale = {1.00323, 1.00950, 1.00209};
    m.angles_rad = {8.60e-3, 3.36e-3, 1.15e-3};
    m.offset_nt = {314.0, -86.0, -2244.0};
    return m;
}

ImperfectionModel ImperfectionModel::table1_after() {
    ImperfectionModel m;
    m.scale = {0.99998, 0.99997, 1.00014};
    m.angles_rad = {4e-5, -9e-5, -20e-5};
    m.offset_nt = {2.1, 4.2, 2.1};
    return m;
}

FieldVector apply_imperfections(const FieldVector& true_field, double temp_k,
                                const ImperfectionModel& model, Rng& noise) {
    model.validate();
    Vec3 v = model.matrix() * true_field.b + model.offset_nt +
             model.offset_slope_nt_per_k * (temp_k - model.ref_temp_k);
    // per-axis draws in fixed order keeps series generation reproducible
    v.x += model.noise_std_nt.x > 0 ? model.noise_std_nt.x * noise.normal() : 0.0;
    v.y += model.noise_std_nt.y > 0 ? model.noise_std_nt.y * noise.normal() : 0.0;
    v.z += model.noise_std_nt.z > 0 ? model.noise_std_nt.z * noise.normal() : 0.0;
    return {v, true_field.frame};
}

TimeSeries apply_imperfections(const TimeSeries& truth, const ImperfectionModel& model,
                               std::uint64_t noise_seed) {
    model.validate();
    TimeSeries out = truth;
    kernels::affine_series(truth.b, model.matrix(), model.offset_nt,
                           model.offset_slope_nt_per_k, model.ref_temp_k, truth.temp_k, out.b);
    Rng rng(noise_seed);
    const Vec3& ns = model.noise_std_nt;
    if (ns.x > 0 || ns.y > 0 || ns.z > 0) {
        for (auto& v : out.b) {
            v.x += ns.x > 0 ? ns.x * rng.normal() : 0.0;
            v.y += ns.y > 0 ? ns.y * rng.normal() : 0.0;
            v.z += ns.z > 0 ? ns.z * rng.normal() : 0.0;
        }
    }
    return out;
}

}  // namespace nvmag
