#include "nvmag/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {

constexpr double kMetersPerDegLat = 111320.0;

double check_uniform_rate(const TimeSeries& s, const char* who) {
    if (s.size() < 3) throw ValidationError(std::string(who) + ": series too short");
    const double dt = s.t[1] - s.t[0];
    if (dt <= 0) throw ValidationError(std::string(who) + ": non-increasing timestamps");
    for (std::size_t i = 2; i < s.size(); ++i)
        if (std::abs((s.t[i] - s.t[i - 1]) - dt) > 1e-6 * dt)
            throw ValidationError(std::string(who) + ": sample rate is not uniform");
    return 1.0 / dt;
}

}  // namespace

AllanCurve allan_deviation(const TimeSeries& series, std::span<const double> taus,
                           kernels::Exec ex) {
    const double fs = check_uniform_rate(series, "allan_deviation");
    const std::size_t n = series.size();
    if (taus.empty()) throw ValidationError("allan_deviation: no taus requested");

    const auto max_m = static_cast<int>((n - 1) / 2);
    std::vector<int> ms(taus.size());
    AllanCurve curve;
    curve.tau_s.resize(taus.size());
    for (std::size_t j = 0; j < taus.size(); ++j) {
        const int m = static_cast<int>(std::lround(taus[j] * fs));
        if (m < 1)
            throw ValidationError("allan_deviation: tau " + std::to_string(taus[j]) +
                                  " s is below one sample period");
        if (m > max_m)
            throw ValidationError("allan_deviation: tau " + std::to_string(taus[j]) +
                                  " s needs 2m+1 samples; largest feasible tau is " +
                                  std::to_string(static_cast<double>(max_m) / fs) + " s");
        ms[j] = m;
        curve.tau_s[j] = static_cast<double>(m) / fs;
    }

    std::vector<double> prefix(n + 1), sums(taus.size());
    for (int axis = 0; axis < 3; ++axis) {
        prefix[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series.b[i][axis];
        kernels::allan_sums(prefix, ms, sums, ex);
        auto& sig = curve.sigma_nt[axis];
        sig.resize(taus.size());
        for (std::size_t j = 0; j < taus.size(); ++j) {
            const auto terms = static_cast<double>(n - 2 * static_cast<std::size_t>(ms[j]));
            sig[j] = std::sqrt(sums[j] / (2.0 * terms));
        }
        const auto knee = std::min_element(sig.begin(), sig.end()) - sig.begin();
        curve.knee_tau_s[axis] = curve.tau_s[static_cast<std::size_t>(knee)];
    }
    return curve;
}

Vec3 sensitivity_at(const AllanCurve& curve, double tau_s) {
    for (std::size_t j = 0; j < curve.tau_s.size(); ++j) {
        if (std::abs(curve.tau_s[j] - tau_s) <= 1e-9 * std::max(1.0, std::abs(tau_s))) {
            const double f = std::sqrt(2.0 * curve.tau_s[j]);
            return {curve.sigma_nt[0][j] * f, curve.sigma_nt[1][j] * f, curve.sigma_nt[2][j] * f};
        }
    }
    throw ValidationError("sensitivity_at: tau " + std::to_string(tau_s) +
                          " s is not a point of the curve");
}

HeadingReport heading_error(const TimeSeries& series, double reference_tmi_nt) {
    if (series.size() == 0) throw ValidationError("heading_error: empty series");
    HeadingReport rep;
    double sum = 0, sum2 = 0, rms2 = 0;
    for (const auto& v : series.b) {
        const double t = tmi(v);
        const double d = t - reference_tmi_nt;
        rep.max_abs_nt = std::max(rep.max_abs_nt, std::abs(d));
        rms2 += d * d;
        sum += t;
        sum2 += t * t;
    }
    const double n = static_cast<double>(series.size());
    rep.rms_nt = std::sqrt(rms2 / n);
    const double mean = sum / n;
    rep.std_nt = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
    return rep;
}

TimeSeries diurnal_correct(const TimeSeries& survey, const TimeSeries& base) {
    if (survey.size() == 0) throw ValidationError("diurnal_correct: empty survey");
    if (base.size() < 2) throw ValidationError("diurnal_correct: base series too short");
    for (std::size_t i = 1; i < base.size(); ++i)
        if (base.t[i] <= base.t[i - 1])
            throw ValidationError("diurnal_correct: base timestamps must increase");

    const double b0 = base.t.front(), b1 = base.t.back();
    const auto [lo, hi] = std::minmax_element(survey.t.begin(), survey.t.end());
    if (*lo < b0 || *hi > b1)
        throw ValidationError("diurnal_correct: survey span [" + std::to_string(*lo) + ", " +
                              std::to_string(*hi) + "] s leaves the base coverage [" +
                              std::to_string(b0) + ", " + std::to_string(b1) + "] s");

    Vec3 mean{};
    for (const auto& v : base.b) mean = mean + v;
    mean = mean / static_cast<double>(base.size());

    TimeSeries out = survey;
    std::size_t seg = 0;
    for (std::size_t i = 0; i < survey.size(); ++i) {
        const double t = survey.t[i];
        while (seg + 2 < base.size() && base.t[seg + 1] < t) ++seg;
        // non-monotonic survey times still interpolate correctly
        if (base.t[seg] > t)
            seg = static_cast<std::size_t>(
                      std::upper_bound(base.t.begin(), base.t.end(), t) - base.t.begin()) - 1;
        if (seg + 1 >= base.size()) seg = base.size() - 2;
        const double u = (t - base.t[seg]) / (base.t[seg + 1] - base.t[seg]);
        const Vec3 bi = base.b[seg] * (1.0 - u) + base.b[seg + 1] * u;
        out.b[i] = survey.b[i] - (bi - mean);
    }
    return out;
}

TmiGrid grid_tmi_map(const TimeSeries& series, const GridSpec2D& spec, kernels::Exec ex) {
    if (!series.has_geo())
        throw ValidationError("grid_tmi_map: series has no geographic columns");
    if (series.size() == 0) throw ValidationError("grid_tmi_map: empty series");
    if (spec.spacing_m <= 0) throw ValidationError("grid_tmi_map: spacing must be positive");

    const double coslat = std::cos(spec.origin_lat_deg * std::numbers::pi / 180.0);
    const std::size_t n = series.size();
    std::vector<double> px(n), py(n), pv(n);
    for (std::size_t i = 0; i < n; ++i) {
        px[i] = (series.lon_deg[i] - spec.origin_lon_deg) * kMetersPerDegLat * coslat;
        py[i] = (series.lat_deg[i] - spec.origin_lat_deg) * kMetersPerDegLat;
        pv[i] = tmi(series.b[i]);
    }

    TmiGrid grid;
    grid.origin_lat_deg = spec.origin_lat_deg;
    grid.origin_lon_deg = spec.origin_lon_deg;
    grid.spacing_m = spec.spacing_m;
    if (spec.nx > 0 && spec.ny > 0) {
        grid.nx = spec.nx;
        grid.ny = spec.ny;
    } else {
        const auto [xmin, xmax] = std::minmax_element(px.begin(), px.end());
        const auto [ymin, ymax] = std::minmax_element(py.begin(), py.end());
        if (*xmin < -1e-6 || *ymin < -1e-6)
            throw ValidationError("grid_tmi_map: data extends below the grid origin; "
                                  "move the origin or set dimensions explicitly");
        grid.nx = static_cast<int>(std::floor(*xmax / spec.spacing_m)) + 1;
        grid.ny = static_cast<int>(std::floor(*ymax / spec.spacing_m)) + 1;
    }
    grid.tmi_nt.resize(static_cast<std::size_t>(grid.nx) * grid.ny);
    grid.hits.resize(grid.tmi_nt.size());
    kernels::idw_grid(px, py, pv, 0.0, 0.0, spec.spacing_m, grid.nx, grid.ny,
                      3.0 * spec.spacing_m, grid.tmi_nt, grid.hits, ex);
    return grid;
}

}  // namespace nvmag
