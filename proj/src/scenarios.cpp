#include "nvmag/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "nvmag/errors.hpp"
#include "nvmag/formats.hpp"
#include "nvmag/kernels.hpp"
#include "nvmag/rng.hpp"

namespace nvmag {

namespace {

TimeSeries make_series(std::size_t n, double rate_hz, double temp_k) {
    TimeSeries s;
    s.t.resize(n);
    s.b.assign(n, Vec3{});
    s.temp_k.assign(n, temp_k);
    for (std::size_t i = 0; i < n; ++i) s.t[i] = static_cast<double>(i) / rate_hz;
    return s;
}

// rotation of v by theta about unit axis k (Rodrigues)
Vec3 rotate(const Vec3& v, const Vec3& k, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
}

Vec3 unit_sphere_dir(Rng& rng) {
    // normalized gaussian triple, uniform on the sphere
    while (true) {
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

}  // namespace

TimeSeries coil_points(std::size_t count, double max_amp_nt, std::uint64_t seed,
                       double rate_hz, double temp_k) {
    if (count == 0) throw ValidationError("coil_points: count must be positive");
    if (max_amp_nt < 0) throw ValidationError("coil_points: max amplitude must be >= 0");
    TimeSeries s = make_series(count, rate_hz, temp_k);
    Rng rng(seed);
    for (auto& b : s.b) {
        const Vec3 dir = unit_sphere_dir(rng);
        b = dir * rng.uniform(0.0, max_amp_nt);
    }
    return s;
}

TimeSeries ramp(int axis, double from_nt, double to_nt, std::size_t steps, double rate_hz,
                double temp_k) {
    if (axis < 0 || axis > 2) throw ValidationError("ramp: axis must be 0, 1 or 2");
    if (steps < 2) throw ValidationError("ramp: need at least 2 steps");
    TimeSeries s = make_series(steps, rate_hz, temp_k);
    for (std::size_t i = 0; i < steps; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(steps - 1);
        s.b[i][axis] = from_nt + (to_nt - from_nt) * u;
    }
    return s;
}

TimeSeries spin_trajectory(const Vec3& ambient_nt, const Vec3& axis, double period_s,
                           double duration_s, double rate_hz, double temp_k) {
    if (period_s <= 0) throw ValidationError("spin_trajectory: period must be positive");
    if (duration_s <= 0 || rate_hz <= 0)
        throw ValidationError("spin_trajectory: duration and rate must be positive");
    const Vec3 k = axis.normalized();
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    TimeSeries s = make_series(std::max<std::size_t>(n, 1), rate_hz, temp_k);
    const double w = 2.0 * std::numbers::pi / period_s;
    for (std::size_t i = 0; i < s.size(); ++i) s.b[i] = rotate(ambient_nt, k, -w * s.t[i]);
    return s;
}

TimeSeries storm_profile(const Vec3& base_nt, double amp_nt, double duration_s, double rate_hz,
                         std::uint64_t seed, double temp_k) {
    if (amp_nt < 0) throw ValidationError("storm_profile: amplitude must be >= 0");
    if (duration_s <= 0 || rate_hz <= 0)
        throw ValidationError("storm_profile: duration and rate must be positive");
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    TimeSeries s = make_series(std::max<std::size_t>(n, 1), rate_hz, temp_k);
    for (auto& b : s.b) b = base_nt;
    if (amp_nt == 0) return s;

    Rng rng(seed);
    for (int axis = 0; axis < 3; ++axis) {
        Rng ar = rng.fork(static_cast<std::uint64_t>(axis) + 17);
        const int nsin = 5 + static_cast<int>(ar.next_u64() % 16);  // 5..20 components
        std::vector<double> amp(static_cast<std::size_t>(nsin)), omega(amp.size()), phase(amp.size());
        const double lp_lo = std::log(600.0), lp_hi = std::log(21600.0);  // 10 min .. 6 h
        for (int j = 0; j < nsin; ++j) {
            amp[static_cast<std::size_t>(j)] = ar.uniform(0.5, 1.0);
            omega[static_cast<std::size_t>(j)] =
                2.0 * std::numbers::pi / std::exp(ar.uniform(lp_lo, lp_hi));
            phase[static_cast<std::size_t>(j)] = ar.uniform(0.0, 2.0 * std::numbers::pi);
        }
        std::vector<double> wave(s.size());
        double peak = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            double v = 0;
            for (std::size_t j = 0; j < amp.size(); ++j)
                v += amp[j] * std::sin(omega[j] * s.t[i] + phase[j]);
            wave[i] = v;
            peak = std::max(peak, std::abs(v));
        }
        const double scale = peak > 0 ? amp_nt / peak : 0.0;  // per-axis peak == amp_nt
        for (std::size_t i = 0; i < s.size(); ++i) s.b[i][axis] += scale * wave[i];
    }
    return s;
}

TimeSeries balloon_flight(const Vec3& ambient_nt, const Vec3& axis, double period_s,
                          double spin_stop_s, double duration_s, double rate_hz, double temp_k) {
    if (spin_stop_s < 0 || spin_stop_s > duration_s)
        throw ValidationError("balloon_flight: spin stop must lie inside the flight");
    TimeSeries s = spin_trajectory(ambient_nt, axis, period_s, duration_s, rate_hz, temp_k);
    const Vec3 k = axis.normalized();
    const double w = 2.0 * std::numbers::pi / period_s;
    const Vec3 frozen = rotate(ambient_nt, k, -w * spin_stop_s);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.t[i] > spin_stop_s) s.b[i] = frozen;
    return s;
}

TimeSeries dipole_survey(const DipoleSurveyParams& p, double rate_hz, double temp_k) {
    if (p.nlines < 1 || p.line_spacing_m <= 0 || p.line_length_m <= 0 || p.speed_mps <= 0 ||
        rate_hz <= 0)
        throw ValidationError("dipole_survey: geometry and speed must be positive");
    const auto per_line =
        static_cast<std::size_t>(std::floor(p.line_length_m / p.speed_mps * rate_hz)) + 1;
    const std::size_t n = per_line * static_cast<std::size_t>(p.nlines);
    TimeSeries s = make_series(n, rate_hz, temp_k);
    s.lat_deg.resize(n);
    s.lon_deg.resize(n);
    s.alt_m.assign(n, p.altitude_m);

    std::vector<Vec3> pos(n);
    const double step = p.speed_mps / rate_hz;
    for (int line = 0; line < p.nlines; ++line) {
        const double y = p.line_spacing_m * line;
        for (std::size_t k = 0; k < per_line; ++k) {
            const double along = std::min(step * static_cast<double>(k), p.line_length_m);
            const double x = (line % 2 == 0) ? along : p.line_length_m - along;
            pos[static_cast<std::size_t>(line) * per_line + k] = {x, y, p.altitude_m};
        }
    }
    std::vector<Vec3> anomaly(n);
    kernels::dipole_series(pos, p.source_pos_m, p.moment_am2, anomaly);

    const double coslat = std::cos(p.origin_lat_deg * std::numbers::pi / 180.0);
    constexpr double m_per_deg = 111320.0;
    for (std::size_t i = 0; i < n; ++i) {
        s.b[i] = p.background_nt + anomaly[i];
        s.lat_deg[i] = p.origin_lat_deg + pos[i].y / m_per_deg;
        s.lon_deg[i] = p.origin_lon_deg + pos[i].x / (m_per_deg * coslat);
    }
    return s;
}

namespace {

const std::map<std::string, std::set<std::string>>& kind_params() {
    static const std::map<std::string, std::set<std::string>> table = {
        {"chamber", {}},
        {"coil", {"count", "max_amp_nt"}},
        {"ramp", {"axis", "from_nt", "to_nt"}},
        {"spin", {"bx_nt", "by_nt", "bz_nt", "period_s", "axis_x", "axis_y", "axis_z"}},
        {"storm", {"bx_nt", "by_nt", "bz_nt", "amp_nt", "storm_seed"}},
        {"balloon",
         {"bx_nt", "by_nt", "bz_nt", "period_s", "spin_stop_s", "axis_x", "axis_y", "axis_z"}},
        {"survey",
         {"nlines", "spacing_m", "line_m", "altitude_m", "speed_mps", "src_x_m", "src_y_m",
          "src_z_m", "mx_am2", "my_am2", "mz_am2", "bg_x_nt", "bg_y_nt", "bg_z_nt", "lat0_deg",
          "lon0_deg"}},
    };
    return table;
}

double param_or(const Scenario& sc, const std::string& key, double fallback) {
    const auto it = sc.params.find(key);
    return it == sc.params.end() ? fallback : it->second;
}

bool has_param(const Scenario& sc, const std::string& key) { return sc.params.count(key) > 0; }

}  // namespace

void Scenario::validate() const {
    const auto& table = kind_params();
    const auto it = table.find(kind);
    if (it == table.end()) {
        std::string names;
        for (const auto& [k, v] : table) names += (names.empty() ? "" : ", ") + k;
        throw ValidationError("unknown scenario '" + kind + "'; known scenarios: " + names);
    }
    if (duration_s <= 0) throw ValidationError("scenario duration must be positive");
    if (rate_hz <= 0) throw ValidationError("scenario sample rate must be positive");
    for (const auto& [k, v] : params)
        if (k != "temp_k" && k != "temp_rate_k_per_s" && !it->second.count(k))
            throw ValidationError("scenario '" + kind + "' does not take parameter '" + k + "'");
}

TimeSeries scenario_truth(const Scenario& sc) {
    sc.validate();
    const double temp0 = param_or(sc, "temp_k", 298.15);
    const double trate = param_or(sc, "temp_rate_k_per_s", 0.0);
    const auto nsamp = static_cast<std::size_t>(std::llround(sc.duration_s * sc.rate_hz));

    TimeSeries s;
    if (sc.kind == "chamber") {
        s = make_series(std::max<std::size_t>(nsamp, 1), sc.rate_hz, temp0);
    } else if (sc.kind == "coil") {
        const auto count = static_cast<std::size_t>(
            param_or(sc, "count", static_cast<double>(std::max<std::size_t>(nsamp, 1))));
        s = coil_points(count, param_or(sc, "max_amp_nt", 60000.0), sc.seed, sc.rate_hz, temp0);
    } else if (sc.kind == "ramp") {
        s = ramp(static_cast<int>(param_or(sc, "axis", 0)), param_or(sc, "from_nt", -50000.0),
                 param_or(sc, "to_nt", 50000.0), std::max<std::size_t>(nsamp, 2), sc.rate_hz,
                 temp0);
    } else if (sc.kind == "spin" || sc.kind == "balloon") {
        const Vec3 ambient{param_or(sc, "bx_nt", 30000.0), param_or(sc, "by_nt", 0.0),
                           param_or(sc, "bz_nt", -40000.0)};
        const double period = param_or(sc, "period_s", 10.0);
        if (has_param(sc, "axis_x") || has_param(sc, "axis_y") || has_param(sc, "axis_z")) {
            const Vec3 axis{param_or(sc, "axis_x", 0.0), param_or(sc, "axis_y", 0.0),
                            param_or(sc, "axis_z", 1.0)};
            if (axis.norm() <= 0) throw ValidationError("scenario spin axis must be nonzero");
            s = sc.kind == "spin"
                    ? spin_trajectory(ambient, axis, period, sc.duration_s, sc.rate_hz, temp0)
                    : balloon_flight(ambient, axis, period,
                                     param_or(sc, "spin_stop_s", sc.duration_s / 2.0),
                                     sc.duration_s, sc.rate_hz, temp0);
        } else if (sc.kind == "balloon") {
            // default balloon axis: perpendicular to the ambient field
            const Vec3 bh = ambient.normalized();
            const Vec3 e = std::abs(bh.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            s = balloon_flight(ambient, bh.cross(e).normalized(), period,
                               param_or(sc, "spin_stop_s", sc.duration_s / 2.0), sc.duration_s,
                               sc.rate_hz, temp0);
        } else {
            // tumble: two half-duration spins about orthogonal axes perpendicular
            // to the ambient field; two great circles keep the largest coverage
            // gap at 45 degrees, inside the spin-calibration gate
            const Vec3 bh = ambient.normalized();
            const Vec3 e = std::abs(bh.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            const Vec3 u1 = bh.cross(e).normalized();
            const Vec3 u2 = bh.cross(u1).normalized();
            TimeSeries first =
                spin_trajectory(ambient, u1, period, sc.duration_s / 2.0, sc.rate_hz, temp0);
            const TimeSeries second =
                spin_trajectory(ambient, u2, period, sc.duration_s / 2.0, sc.rate_hz, temp0);
            const double toff = static_cast<double>(first.size()) / sc.rate_hz;
            for (std::size_t i = 0; i < second.size(); ++i) {
                first.t.push_back(second.t[i] + toff);
                first.b.push_back(second.b[i]);
                first.temp_k.push_back(second.temp_k[i]);
            }
            s = std::move(first);
        }
    } else if (sc.kind == "storm") {
        const Vec3 base{param_or(sc, "bx_nt", 20000.0), param_or(sc, "by_nt", 0.0),
                        param_or(sc, "bz_nt", 45000.0)};
        const auto storm_seed =
            static_cast<std::uint64_t>(param_or(sc, "storm_seed", static_cast<double>(sc.seed)));
        s = storm_profile(base, param_or(sc, "amp_nt", 300.0), sc.duration_s, sc.rate_hz,
                          storm_seed, temp0);
    } else {  // survey
        DipoleSurveyParams p;
        p.nlines = static_cast<int>(param_or(sc, "nlines", 10));
        p.line_spacing_m = param_or(sc, "spacing_m", 10.0);
        p.line_length_m = param_or(sc, "line_m", 100.0);
        p.altitude_m = param_or(sc, "altitude_m", 30.0);
        p.speed_mps = param_or(sc, "speed_mps", 5.0);
        p.source_pos_m = {param_or(sc, "src_x_m", 50.0), param_or(sc, "src_y_m", 40.0),
                          param_or(sc, "src_z_m", -20.0)};
        p.moment_am2 = {param_or(sc, "mx_am2", 0.0), param_or(sc, "my_am2", 0.0),
                        param_or(sc, "mz_am2", 4.0e4)};
        p.background_nt = {param_or(sc, "bg_x_nt", 0.0), param_or(sc, "bg_y_nt", 0.0),
                           param_or(sc, "bg_z_nt", 50000.0)};
        p.origin_lat_deg = param_or(sc, "lat0_deg", 45.0);
        p.origin_lon_deg = param_or(sc, "lon0_deg", -72.0);
        s = dipole_survey(p, sc.rate_hz, temp0);
    }

    if (trate != 0.0)
        for (std::size_t i = 0; i < s.size(); ++i) s.temp_k[i] = temp0 + trate * s.t[i];
    return s;
}

DatasetFiles generate_dataset(const Scenario& sc, const ImperfectionModel& imp, DatasetMode mode,
                              const std::string& out_dir, const RunConfig& cfg) {
    sc.validate();
    imp.validate();
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    const TimeSeries truth = scenario_truth(sc);
    Rng root(sc.seed);
    const TimeSeries measured = apply_imperfections(truth, imp, root.fork(1).next_u64());

    DatasetFiles files;
    files.truth_csv = out_dir + "/truth.csv";
    files.measured_csv = out_dir + "/measured.csv";
    files.manifest_txt = out_dir + "/manifest.txt";
    write_timeseries(files.truth_csv, truth);
    write_timeseries(files.measured_csv, measured);

    if (mode == DatasetMode::spectra) {
        files.spectra_csv = out_dir + "/spectra.csv";
        SpectraWriter writer(files.spectra_csv);
        Rng noise_root = root.fork(2);
        for (std::size_t i = 0; i < measured.size(); ++i) {
            const Vec3 total = cfg.bias.at(truth.temp_k[i]) + measured.b[i];
            const auto res = forward_resonances(total, truth.temp_k[i], cfg.constants);
            OdmrSpectrum spec = synthesize_spectrum(to_peak_set(res, cfg.line), cfg.line,
                                                    cfg.grid, cfg.spectrum_noise_std,
                                                    noise_root.next_u64());
            spec.frame = static_cast<std::int64_t>(i);
            spec.t_s = measured.t[i];
            writer.add(spec);
        }
        writer.close();
    }

    std::map<std::string, std::string> manifest = config_entries(cfg);
    manifest["scenario.kind"] = sc.kind;
    manifest["scenario.duration_s"] = fmt_double(sc.duration_s);
    manifest["scenario.rate_hz"] = fmt_double(sc.rate_hz);
    manifest["scenario.seed"] = std::to_string(sc.seed);
    for (const auto& [k, v] : sc.params) manifest["scenario." + k] = fmt_double(v);
    manifest["imperfections.scale_x"] = fmt_double(imp.scale.x);
    manifest["imperfections.scale_y"] = fmt_double(imp.scale.y);
    manifest["imperfections.scale_z"] = fmt_double(imp.scale.z);
    manifest["imperfections.angle_xy_rad"] = fmt_double(imp.angles_rad.x);
    manifest["imperfections.angle_xz_rad"] = fmt_double(imp.angles_rad.y);
    manifest["imperfections.angle_yz_rad"] = fmt_double(imp.angles_rad.z);
    manifest["imperfections.offset_x_nt"] = fmt_double(imp.offset_nt.x);
    manifest["imperfections.offset_y_nt"] = fmt_double(imp.offset_nt.y);
    manifest["imperfections.offset_z_nt"] = fmt_double(imp.offset_nt.z);
    manifest["imperfections.offset_slope_x_nt_per_k"] = fmt_double(imp.offset_slope_nt_per_k.x);
    manifest["imperfections.offset_slope_y_nt_per_k"] = fmt_double(imp.offset_slope_nt_per_k.y);
    manifest["imperfections.offset_slope_z_nt_per_k"] = fmt_double(imp.offset_slope_nt_per_k.z);
    manifest["imperfections.ref_temp_k"] = fmt_double(imp.ref_temp_k);
    manifest["imperfections.noise_std_x_nt"] = fmt_double(imp.noise_std_nt.x);
    manifest["imperfections.noise_std_y_nt"] = fmt_double(imp.noise_std_nt.y);
    manifest["imperfections.noise_std_z_nt"] = fmt_double(imp.noise_std_nt.z);
    manifest["dataset.mode"] = mode == DatasetMode::spectra ? "spectra" : "fields";
    write_kv(files.manifest_txt, manifest);
    return files;
}

}  // namespace nvmag
