#include "nvmag/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "nvmag/errors.hpp"
#include "nvmag/kernels.hpp"

namespace nvmag {

namespace {

void require_aligned(const TimeSeries& a, const TimeSeries& b, const char* who) {
    if (a.size() != b.size())
        throw ValidationError(std::string(who) + ": series lengths differ (" +
                              std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    if (a.size() == 0) throw ValidationError(std::string(who) + ": empty series");
}

}  // namespace

CalibrationModel fit_affine_calibration(const TimeSeries& measured, const TimeSeries& reference,
                                        const AffineFitOptions& opt) {
    require_aligned(measured, reference, "fit_affine_calibration");
    const std::size_t n = measured.size();
    if (n < opt.min_points)
        throw ValidationError("fit_affine_calibration: " + std::to_string(n) +
                              " points, need at least " + std::to_string(opt.min_points));
    if (opt.use_temperature && measured.temp_k.size() != n)
        throw ValidationError("fit_affine_calibration: temperature column missing");

    // coplanar coverage check: the demeaned measured cloud must span 3 directions
    Eigen::MatrixXd cloud(static_cast<Eigen::Index>(n), 3);
    Vec3 mean{};
    for (const auto& v : measured.b) mean = mean + v;
    mean = mean / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        cloud(static_cast<Eigen::Index>(i), 0) = measured.b[i].x - mean.x;
        cloud(static_cast<Eigen::Index>(i), 1) = measured.b[i].y - mean.y;
        cloud(static_cast<Eigen::Index>(i), 2) = measured.b[i].z - mean.z;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cloud);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0 || sv(2) / sv(0) < opt.min_direction_spread)
        throw ValidationError("fit_affine_calibration: measured directions are coplanar; "
                              "need 3 independent excitation directions");

    double tref = 298.15;
    if (opt.use_temperature) {
        tref = 0;
        for (double t : measured.temp_k) tref += t;
        tref /= static_cast<double>(n);
    }

    const int np = opt.use_temperature ? 5 : 4;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), np);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        a(r, 0) = measured.b[i].x;
        a(r, 1) = measured.b[i].y;
        a(r, 2) = measured.b[i].z;
        a(r, 3) = 1.0;
        if (opt.use_temperature) a(r, 4) = measured.temp_k[i] - tref;
    }
    const Eigen::MatrixXd ata = a.transpose() * a;

    CalibrationModel m;
    m.ref_temp_k = tref;
    Vec3 tc{};
    const auto solver = ata.ldlt();
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            rhs(static_cast<Eigen::Index>(i)) = reference.b[i][axis];
        const Eigen::VectorXd x = solver.solve(a.transpose() * rhs);
        for (int j = 0; j < 3; ++j) m.matrix(axis, j) = x(j);
        m.offset_nt[axis] = x(3);
        if (opt.use_temperature) tc[axis] = x(4);
        const Eigen::VectorXd res = rhs - a * x;
        m.residual_std_nt[axis] = std::sqrt(res.squaredNorm() / static_cast<double>(n));
    }
    if (opt.use_temperature) m.temp_coeff_nt_per_k = tc;
    return m;
}

Vec3 apply_calibration(const CalibrationModel& m, const Vec3& field_nt, double temp_k) {
    Vec3 out = m.matrix * field_nt + m.offset_nt;
    if (m.temp_coeff_nt_per_k) out = out + (*m.temp_coeff_nt_per_k) * (temp_k - m.ref_temp_k);
    return out;
}

TimeSeries apply_calibration(const CalibrationModel& m, const TimeSeries& series) {
    TimeSeries out = series;
    const Vec3 slope = m.temp_coeff_nt_per_k.value_or(Vec3{});
    std::span<const double> temps = m.temp_coeff_nt_per_k && series.temp_k.size() == series.size()
                                        ? std::span<const double>(series.temp_k)
                                        : std::span<const double>{};
    kernels::affine_series(series.b, m.matrix, m.offset_nt, slope, m.ref_temp_k, temps, out.b);
    return out;
}

MagReading apply_calibration(const CalibrationModel& m, const MagReading& reading) {
    MagReading out = reading;
    out.field.b = apply_calibration(m, reading.field.b, reading.diamond_temp_k);
    // sigma through |row| of the matrix; offsets do not move uncertainties
    for (int axis = 0; axis < 3; ++axis) {
        double v = 0;
        for (int j = 0; j < 3; ++j)
            v += m.matrix(axis, j) * m.matrix(axis, j) * reading.sigma_nt[j] * reading.sigma_nt[j];
        out.sigma_nt[axis] = std::sqrt(v);
    }
    return out;
}

CalTable cal_table(const CalibrationModel& m) {
    CalTable t;
    t.scale = {m.matrix(0, 0), m.matrix(1, 1), m.matrix(2, 2)};
    t.ortho_rad = {m.matrix(1, 0) / t.scale.x, m.matrix(2, 0) / t.scale.x,
                   m.matrix(2, 1) / t.scale.y};
    t.offset_nt = m.offset_nt;
    const double upper = std::max({std::abs(m.matrix(0, 1)), std::abs(m.matrix(0, 2)),
                                   std::abs(m.matrix(1, 2))});
    t.exact = upper <= 1e-9 && std::abs(t.ortho_rad.x) <= 0.1 && std::abs(t.ortho_rad.y) <= 0.1 &&
              std::abs(t.ortho_rad.z) <= 0.1;
    return t;
}

CalibrationModel from_table(const CalTable& t) {
    CalibrationModel m;
    m.matrix = Mat3{{t.scale.x, 0, 0,
                     t.ortho_rad.x * t.scale.x, t.scale.y, 0,
                     t.ortho_rad.y * t.scale.x, t.ortho_rad.z * t.scale.y, t.scale.z}};
    m.offset_nt = t.offset_nt;
    return m;
}

TemperatureFit fit_temperature_model(const TimeSeries& readings, const Vec3& known_field_nt,
                                     double min_span_k) {
    const std::size_t n = readings.size();
    if (n < 2) throw ValidationError("fit_temperature_model: need at least 2 readings");
    if (readings.temp_k.size() != n)
        throw ValidationError("fit_temperature_model: temperature column missing");
    const auto [lo, hi] = std::minmax_element(readings.temp_k.begin(), readings.temp_k.end());
    if (*hi - *lo < min_span_k)
        throw ValidationError("fit_temperature_model: temperature span " +
                              std::to_string(*hi - *lo) + " K below the required " +
                              std::to_string(min_span_k) + " K");

    TemperatureFit fit;
    double tm = 0;
    for (double t : readings.temp_k) tm += t;
    tm /= static_cast<double>(n);
    fit.mean_temp_k = tm;
    fit.span_k = *hi - *lo;

    double sxx = 0;
    for (double t : readings.temp_k) sxx += (t - tm) * (t - tm);
    for (int axis = 0; axis < 3; ++axis) {
        double sxy = 0, sy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = readings.b[i][axis] - known_field_nt[axis];
            sy += e;
            sxy += (readings.temp_k[i] - tm) * e;
        }
        const double slope = sxy / sxx;
        const double intercept = sy / static_cast<double>(n);
        double ssr = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = readings.b[i][axis] - known_field_nt[axis];
            const double r = e - intercept - slope * (readings.temp_k[i] - tm);
            ssr += r * r;
        }
        const double s2 = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
        fit.slope_nt_per_k[axis] = slope;
        fit.intercept_nt[axis] = intercept;
        fit.slope_se[axis] = std::sqrt(s2 / sxx);
    }
    return fit;
}

namespace {

// largest angular hole in the direction coverage, probed on a Fibonacci sphere
double coverage_gap_deg(const std::vector<Vec3>& dirs) {
    constexpr int probes = 512;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    double worst = 0;
    for (int i = 0; i < probes; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / probes;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        const Vec3 p{r * std::cos(phi), r * std::sin(phi), z};
        double best = -1.0;
        for (const auto& d : dirs) best = std::max(best, p.dot(d));
        worst = std::max(worst, std::acos(std::clamp(best, -1.0, 1.0)));
    }
    return worst * 180.0 / std::numbers::pi;
}

}  // namespace

CalibrationModel spin_calibration(const TimeSeries& readings, const SpinCalOptions& opt) {
    const std::size_t n = readings.size();
    if (n < opt.min_points)
        throw ValidationError("spin_calibration: " + std::to_string(n) +
                              " readings, need at least " + std::to_string(opt.min_points));

    std::vector<Vec3> dirs;
    dirs.reserve(n);
    double mean_mag = 0;
    for (const auto& v : readings.b) {
        const double mag = v.norm();
        if (mag <= 0) throw ValidationError("spin_calibration: zero-magnitude reading");
        mean_mag += mag;
        dirs.push_back(v / mag);
    }
    mean_mag /= static_cast<double>(n);
    const double gap = coverage_gap_deg(dirs);
    if (gap >= opt.max_gap_deg) throw CoverageError(gap);

    const double ref = opt.reference_tmi_nt > 0 ? opt.reference_tmi_nt : mean_mag;

    CalibrationModel m;
    if (opt.offsets_only) {
        // Kasa sphere fit: |v|^2 = 2 o.v + (R^2 - |o|^2), linear in (o, d)
        Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
        Eigen::Vector4d atb = Eigen::Vector4d::Zero();
        for (const auto& v : readings.b) {
            const Eigen::Vector4d row(2 * v.x, 2 * v.y, 2 * v.z, 1.0);
            ata += row * row.transpose();
            atb += row * v.dot(v);
        }
        const Eigen::Vector4d x = ata.ldlt().solve(atb);
        m.matrix = Mat3::identity();
        m.offset_nt = {-x(0), -x(1), -x(2)};
    } else {
        // general quadric v^T Q v + 2 q.v + c = 0 in centroid-scaled coordinates,
        // smallest-eigenvalue direction of the 10x10 normal matrix
        Vec3 mu{};
        for (const auto& v : readings.b) mu = mu + v;
        mu = mu / static_cast<double>(n);
        double s = 0;
        for (const auto& v : readings.b) s += (v - mu).norm();
        s /= static_cast<double>(n);
        if (s <= 0) throw ValidationError("spin_calibration: degenerate point cloud");

        Eigen::Matrix<double, 10, 10> dtd = Eigen::Matrix<double, 10, 10>::Zero();
        for (const auto& v : readings.b) {
            const Vec3 u = (v - mu) / s;
            Eigen::Matrix<double, 10, 1> row;
            row << u.x * u.x, u.y * u.y, u.z * u.z, u.x * u.y, u.x * u.z, u.y * u.z,
                u.x, u.y, u.z, 1.0;
            dtd += row * row.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 10, 10>> es(dtd);
        Eigen::Matrix<double, 10, 1> a = es.eigenvectors().col(0);

        Eigen::Matrix3d q;
        q << a(0), a(3) / 2, a(4) / 2,
             a(3) / 2, a(1), a(5) / 2,
             a(4) / 2, a(5) / 2, a(2);
        if (q.trace() < 0) {
            q = -q;
            a = -a;
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> qes(q);
        if (qes.eigenvalues().minCoeff() <= 0)
            throw NumericalError("spin_calibration: quadric is not an ellipsoid "
                                 "(insufficient excitation of one axis)");

        const Eigen::Vector3d qv(a(6) / 2, a(7) / 2, a(8) / 2);
        const Eigen::Vector3d center_u = -q.ldlt().solve(qv);
        const double k = center_u.dot(q * center_u) - a(9);
        if (k <= 0) throw NumericalError("spin_calibration: degenerate quadric scale");

        // symmetric square root of Q/k maps the ellipsoid onto the unit sphere
        const Eigen::Matrix3d su = q / k;
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ses(su);
        const Eigen::Matrix3d au = ses.eigenvectors() *
                                   ses.eigenvalues().cwiseSqrt().asDiagonal() *
                                   ses.eigenvectors().transpose();

        const Vec3 center_v = mu + Vec3{center_u(0), center_u(1), center_u(2)} * s;
        Mat3 av;
        for (int r = 0; r < 3; ++r)
            for (int c2 = 0; c2 < 3; ++c2) av(r, c2) = au(r, c2) / s;
        for (int r = 0; r < 3; ++r)
            for (int c2 = 0; c2 < 3; ++c2) m.matrix(r, c2) = ref * av(r, c2);
        m.offset_nt = -(m.matrix * center_v);
    }

    // training residual: spread of the corrected magnitudes around the reference
    double ssr = 0;
    for (const auto& v : readings.b) {
        const double d = (m.matrix * v + m.offset_nt).norm() - ref;
        ssr += d * d;
    }
    const double tmi_std = std::sqrt(ssr / static_cast<double>(n));
    m.residual_std_nt = {tmi_std, tmi_std, tmi_std};
    return m;
}

AccuracyReport evaluate_accuracy(const TimeSeries& corrected, const TimeSeries& reference) {
    require_aligned(corrected, reference, "evaluate_accuracy");
    AccuracyReport rep;
    rep.n = corrected.size();
    const double n = static_cast<double>(rep.n);
    Vec3 sum{}, sum2{}, mx{};
    double tmi2 = 0;
    for (std::size_t i = 0; i < rep.n; ++i) {
        const Vec3 e = corrected.b[i] - reference.b[i];
        sum = sum + e;
        sum2 = sum2 + Vec3{e.x * e.x, e.y * e.y, e.z * e.z};
        mx = {std::max(mx.x, std::abs(e.x)), std::max(mx.y, std::abs(e.y)),
              std::max(mx.z, std::abs(e.z))};
        const double dt = corrected.b[i].norm() - reference.b[i].norm();
        tmi2 += dt * dt;
    }
    rep.mean_err_nt = sum / n;
    for (int axis = 0; axis < 3; ++axis) {
        const double var = sum2[axis] / n - rep.mean_err_nt[axis] * rep.mean_err_nt[axis];
        rep.std_err_nt[axis] = std::sqrt(std::max(0.0, var));
    }
    rep.max_abs_err_nt = mx;
    rep.tmi_rms_nt = std::sqrt(tmi2 / n);
    return rep;
}

}  // namespace nvmag
