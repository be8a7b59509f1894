// nvmag: command-line surface over the simulator, spectral pipeline,
// calibration and survey analysis. Every command is deterministic given its
// arguments and input files; all randomness flows from explicit seeds.

#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvmag/analysis.hpp"
#include "nvmag/calibration.hpp"
#include "nvmag/config.hpp"
#include "nvmag/errors.hpp"
#include "nvmag/formats.hpp"
#include "nvmag/inversion.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/scenarios.hpp"
#include "nvmag/spectral.hpp"

namespace {

using namespace nvmag;

double to_double(const std::string& s, const std::string& what) {
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ValidationError(what + ": '" + s + "' is not a number");
    return v;
}

std::pair<std::string, std::string> split_pair(const std::string& s, const std::string& what) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError(what + ": expected key=value, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

Vec3 parse_vec3(const std::string& s, const std::string& what) {
    Vec3 v;
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const auto comma = i < 2 ? s.find(',', pos) : s.size();
        if (comma == std::string::npos)
            throw ValidationError(what + ": expected x,y,z, got '" + s + "'");
        v[i] = to_double(s.substr(pos, comma - pos), what);
        pos = comma + 1;
    }
    return v;
}

// Shared --config / --manifest / --set resolution. A dataset manifest is a
// superset of the config keys, so the generator's exact grid, line shape and
// bias flow back into the pipeline without retyping them.
RunConfig resolve_config(const std::string& config_path, const std::string& manifest_path,
                         const std::vector<std::string>& overrides) {
    if (!config_path.empty() && !manifest_path.empty())
        throw ValidationError("give either --config or --manifest, not both");
    RunConfig cfg;
    if (!config_path.empty()) {
        cfg = load_config(config_path);
    } else if (!manifest_path.empty()) {
        for (const auto& [k, v] : read_kv(manifest_path)) {
            if (k.starts_with("scenario.") || k.starts_with("imperfections.") ||
                k.starts_with("dataset."))
                continue;
            apply_config_entry(cfg, k, v);
        }
    }
    for (const auto& kv : overrides) {
        const auto [k, v] = split_pair(kv, "--set");
        apply_config_entry(cfg, k, v);
    }
    cfg.track.fit = cfg.fit;
    cfg.validate();
    return cfg;
}

ImperfectionModel parse_imperfections(const std::string& s) {
    if (s.empty() || s == "none") return {};
    if (s == "table1-before") return ImperfectionModel::table1_before();
    if (s == "table1-after") return ImperfectionModel::table1_after();
    ImperfectionModel m;
    for (const auto& [k, v] : read_kv(s)) {
        const double d = to_double(v, s + ": " + k);
        if (k == "scale_x") m.scale.x = d;
        else if (k == "scale_y") m.scale.y = d;
        else if (k == "scale_z") m.scale.z = d;
        else if (k == "angle_xy_rad") m.angles_rad.x = d;
        else if (k == "angle_xz_rad") m.angles_rad.y = d;
        else if (k == "angle_yz_rad") m.angles_rad.z = d;
        else if (k == "offset_x_nt") m.offset_nt.x = d;
        else if (k == "offset_y_nt") m.offset_nt.y = d;
        else if (k == "offset_z_nt") m.offset_nt.z = d;
        else if (k == "offset_slope_x_nt_per_k") m.offset_slope_nt_per_k.x = d;
        else if (k == "offset_slope_y_nt_per_k") m.offset_slope_nt_per_k.y = d;
        else if (k == "offset_slope_z_nt_per_k") m.offset_slope_nt_per_k.z = d;
        else if (k == "ref_temp_k") m.ref_temp_k = d;
        else if (k == "noise_std_x_nt") m.noise_std_nt.x = d;
        else if (k == "noise_std_y_nt") m.noise_std_nt.y = d;
        else if (k == "noise_std_z_nt") m.noise_std_nt.z = d;
        else throw ValidationError(s + ": unknown imperfection key '" + k + "'");
    }
    m.validate();
    return m;
}

void print_kv(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) std::cout << k << '=' << v << '\n';
}

// ---------------------------------------------------------------- sim

struct SimOpts {
    std::string kind;
    double duration_s = 60.0;
    double rate_hz = 10.0;
    std::uint64_t seed = 1;
    std::vector<std::string> params;
    std::string mode = "fields";
    std::string imperfections = "none";
    std::string out_dir = "dataset";
    std::string config, manifest;
    std::vector<std::string> sets;
};

void run_sim(const SimOpts& o) {
    Scenario sc;
    sc.kind = o.kind;
    sc.duration_s = o.duration_s;
    sc.rate_hz = o.rate_hz;
    sc.seed = o.seed;
    for (const auto& p : o.params) {
        const auto [k, v] = split_pair(p, "--param");
        sc.params[k] = to_double(v, "--param " + k);
    }
    DatasetMode mode;
    if (o.mode == "fields") mode = DatasetMode::fields;
    else if (o.mode == "spectra") mode = DatasetMode::spectra;
    else throw ValidationError("--mode must be fields or spectra, got '" + o.mode + "'");

    const RunConfig cfg = resolve_config(o.config, o.manifest, o.sets);
    const ImperfectionModel imp = parse_imperfections(o.imperfections);
    const DatasetFiles files = generate_dataset(sc, imp, mode, o.out_dir, cfg);
    std::cout << "truth=" << files.truth_csv << '\n';
    std::cout << "measured=" << files.measured_csv << '\n';
    if (!files.spectra_csv.empty()) std::cout << "spectra=" << files.spectra_csv << '\n';
    std::cout << "manifest=" << files.manifest_txt << '\n';
}

// ---------------------------------------------------------------- pipeline

struct PipelineOpts {
    std::string spectra;
    std::string out;
    std::string config, manifest;
    std::vector<std::string> sets;
};

MagReading invalid_reading(double t_s) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    MagReading r;
    r.t_s = t_s;
    r.field.b = {nan, nan, nan};
    r.diamond_temp_k = nan;
    r.residual_nt = nan;
    r.sigma_nt = {nan, nan, nan};
    r.midpoint_spread_hz = nan;
    r.valid = false;
    return r;
}

PeakSet detect_fit_pair(const OdmrSpectrum& spec, const RunConfig& cfg) {
    const auto guesses = detect_peaks(spec, 8, cfg.detect);
    const LineFit fit = fit_lorentzians(spec, guesses, cfg.fit);
    // the bias alone predicts the line order: it is laid out so a full-range
    // external field cannot push any doublet past its neighbour
    const auto res = forward_resonances(cfg.bias.at(cfg.constants.t0_k), cfg.constants.t0_k,
                                        cfg.constants);
    return pair_peaks(fit, to_peak_set(res, cfg.line));
}

void run_pipeline(const PipelineOpts& o) {
    const RunConfig cfg = resolve_config(o.config, o.manifest, o.sets);
    SpectraReader reader(o.spectra);
    ReadingsWriter writer(o.out);

    bool have_prev = false;
    PeakSet prev;
    std::size_t frames = 0, invalid = 0, relocks = 0;
    while (true) {
        OdmrSpectrum spec;
        try {
            auto s = reader.next();
            if (!s) break;
            spec = std::move(*s);
        } catch (const FrameError& e) {
            std::cerr << "warning: skipped unreadable " << e.what() << '\n';
            writer.add(invalid_reading(e.t_s));
            ++frames;
            ++invalid;
            have_prev = false;
            continue;
        }
        ++frames;
        MagReading reading;
        try {
            PeakSet cur;
            if (have_prev) {
                try {
                    cur = track_peaks(prev, spec, cfg.track);
                } catch (const NumericalError& e) {
                    // one full re-detection before giving up on the frame
                    std::cerr << "warning: frame " << spec.frame << ": " << e.what()
                              << "; re-detecting\n";
                    ++relocks;
                    cur = detect_fit_pair(spec, cfg);
                }
            } else {
                cur = detect_fit_pair(spec, cfg);
            }
            reading = invert_frame(cur, spec.t_s, cfg.bias, cfg.constants);
            prev = cur;
            have_prev = true;
        } catch (const NumericalError& e) {
            std::cerr << "warning: frame " << spec.frame << " marked invalid: " << e.what()
                      << '\n';
            reading = invalid_reading(spec.t_s);
            ++invalid;
            have_prev = false;
        }
        writer.add(reading);
    }
    writer.close();
    std::cout << "frames=" << frames << " invalid=" << invalid << " relocks=" << relocks << '\n';
}

// ---------------------------------------------------------------- cal

struct CalFitOpts {
    std::string measured, reference, out;
    bool use_temperature = false;
    std::size_t min_points = 12;
};

void run_cal_fit(const CalFitOpts& o) {
    AffineFitOptions opt;
    opt.use_temperature = o.use_temperature;
    opt.min_points = o.min_points;
    const CalibrationModel m =
        fit_affine_calibration(read_timeseries(o.measured), read_timeseries(o.reference), opt);
    write_calibration(o.out, m);
    std::cout << "model=" << o.out << '\n';
    std::cout << "residual_std_nt=" << fmt_double(m.residual_std_nt.x) << ','
              << fmt_double(m.residual_std_nt.y) << ',' << fmt_double(m.residual_std_nt.z)
              << '\n';
}

struct CalApplyOpts {
    std::string model, in, out;
};

void run_cal_apply(const CalApplyOpts& o) {
    const CalibrationModel m = read_calibration(o.model);
    write_timeseries(o.out, apply_calibration(m, read_timeseries(o.in)));
    std::cout << "corrected=" << o.out << '\n';
}

struct CalSpinOpts {
    std::string in, out;
    double reference_tmi_nt = 0.0;
    bool offsets_only = false;
    double max_gap_deg = 60.0;
};

void run_cal_spin(const CalSpinOpts& o) {
    SpinCalOptions opt;
    opt.reference_tmi_nt = o.reference_tmi_nt;
    opt.offsets_only = o.offsets_only;
    opt.max_gap_deg = o.max_gap_deg;
    const CalibrationModel m = spin_calibration(read_timeseries(o.in), opt);
    write_calibration(o.out, m);
    std::cout << "model=" << o.out << '\n';
}

struct CalTempOpts {
    std::string in, known, model, out;
    double min_span_k = 5.0;
};

void run_cal_temp(const CalTempOpts& o) {
    CalibrationModel base;
    if (!o.model.empty()) base = read_calibration(o.model);
    const TimeSeries calibrated = apply_calibration(base, read_timeseries(o.in));
    const Vec3 known = parse_vec3(o.known, "--known");
    const TemperatureFit tf = fit_temperature_model(calibrated, known, o.min_span_k);

    CalibrationModel out = base;
    out.temp_coeff_nt_per_k = -tf.slope_nt_per_k;  // cancels the fitted drift
    out.ref_temp_k = tf.mean_temp_k;
    out.offset_nt = out.offset_nt - tf.intercept_nt;
    write_calibration(o.out, out);

    std::map<std::string, std::string> report;
    for (int i = 0; i < 3; ++i) {
        const std::string ax(1, "xyz"[i]);
        report["slope_" + ax + "_nt_per_k"] = fmt_double(tf.slope_nt_per_k[i]);
        report["slope_se_" + ax] = fmt_double(tf.slope_se[i]);
        report["intercept_" + ax + "_nt"] = fmt_double(tf.intercept_nt[i]);
    }
    report["mean_temp_k"] = fmt_double(tf.mean_temp_k);
    report["span_k"] = fmt_double(tf.span_k);
    report["model"] = o.out;
    print_kv(report);
}

struct CalEvalOpts {
    std::string model, in, reference, out;
};

void run_cal_eval(const CalEvalOpts& o) {
    const CalibrationModel m = read_calibration(o.model);
    const CalTable t = cal_table(m);
    std::map<std::string, std::string> report;
    for (int i = 0; i < 3; ++i) {
        const std::string ax(1, "xyz"[i]);
        report["scale_" + ax] = fmt_double(t.scale[i]);
        report["ortho_" + ax + "_rad"] = fmt_double(t.ortho_rad[i]);
        report["offset_" + ax + "_nt"] = fmt_double(t.offset_nt[i]);
        report["residual_std_" + ax + "_nt"] = fmt_double(m.residual_std_nt[i]);
    }
    report["shear_exact"] = t.exact ? "1" : "0";
    if (!o.in.empty() || !o.reference.empty()) {
        if (o.in.empty() || o.reference.empty())
            throw ValidationError("cal eval needs both --in and --reference for an error report");
        const TimeSeries corrected = apply_calibration(m, read_timeseries(o.in));
        const AccuracyReport acc = evaluate_accuracy(corrected, read_timeseries(o.reference));
        for (int i = 0; i < 3; ++i) {
            const std::string ax(1, "xyz"[i]);
            report["err_mean_" + ax + "_nt"] = fmt_double(acc.mean_err_nt[i]);
            report["err_std_" + ax + "_nt"] = fmt_double(acc.std_err_nt[i]);
            report["err_max_" + ax + "_nt"] = fmt_double(acc.max_abs_err_nt[i]);
        }
        report["tmi_rms_nt"] = fmt_double(acc.tmi_rms_nt);
        report["points"] = std::to_string(acc.n);
    }
    if (!o.out.empty()) write_kv(o.out, report);
    print_kv(report);
}

// ---------------------------------------------------------------- analysis

struct AllanOpts {
    std::string in, out, report;
    std::string taus;
    double sensitivity_tau_s = 0.0;
};

void run_allan(const AllanOpts& o) {
    const TimeSeries s = read_timeseries(o.in);
    std::vector<double> taus;
    if (!o.taus.empty()) {
        std::size_t pos = 0;
        while (pos <= o.taus.size()) {
            auto comma = o.taus.find(',', pos);
            if (comma == std::string::npos) comma = o.taus.size();
            taus.push_back(to_double(o.taus.substr(pos, comma - pos), "--taus"));
            pos = comma + 1;
        }
    } else {
        if (s.size() < 3) throw ValidationError(o.in + ": need at least 3 samples");
        const double dt = s.t[1] - s.t[0];
        for (std::size_t m = 1; 2 * m + 1 <= s.size(); m *= 2)
            taus.push_back(static_cast<double>(m) * dt);
    }
    const AllanCurve curve = allan_deviation(s, taus);
    write_allan(o.out, curve);

    std::map<std::string, std::string> report;
    for (int i = 0; i < 3; ++i)
        report[std::string("knee_tau_") + "xyz"[i] + "_s"] = fmt_double(curve.knee_tau_s[i]);
    if (o.sensitivity_tau_s > 0) {
        const Vec3 sens = sensitivity_at(curve, o.sensitivity_tau_s);
        for (int i = 0; i < 3; ++i)
            report[std::string("sensitivity_") + "xyz"[i] + "_nt_per_sqrt_hz"] =
                fmt_double(sens[i]);
    }
    report["curve"] = o.out;
    if (!o.report.empty()) write_kv(o.report, report);
    print_kv(report);
}

struct SurveyOpts {
    std::string in, out;
    double spacing_m = 5.0;
    double origin_lat_deg = std::numeric_limits<double>::quiet_NaN();
    double origin_lon_deg = std::numeric_limits<double>::quiet_NaN();
    int nx = 0, ny = 0;
};

void run_survey(const SurveyOpts& o) {
    const TimeSeries s = read_timeseries(o.in);
    if (!s.has_geo()) throw ValidationError(o.in + ": no geo columns, cannot grid");
    GridSpec2D spec;
    spec.spacing_m = o.spacing_m;
    spec.nx = o.nx;
    spec.ny = o.ny;
    if (std::isnan(o.origin_lat_deg) || std::isnan(o.origin_lon_deg)) {
        spec.origin_lat_deg = *std::min_element(s.lat_deg.begin(), s.lat_deg.end());
        spec.origin_lon_deg = *std::min_element(s.lon_deg.begin(), s.lon_deg.end());
    } else {
        spec.origin_lat_deg = o.origin_lat_deg;
        spec.origin_lon_deg = o.origin_lon_deg;
    }
    const TmiGrid grid = grid_tmi_map(s, spec);
    write_grid(o.out, grid);

    int best_ix = -1, best_iy = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double v = grid.at(ix, iy);
            if (!std::isnan(v) && v > best) {
                best = v;
                best_ix = ix;
                best_iy = iy;
            }
        }
    std::map<std::string, std::string> report;
    report["grid"] = o.out;
    report["nx"] = std::to_string(grid.nx);
    report["ny"] = std::to_string(grid.ny);
    if (best_ix >= 0) {
        report["peak_ix"] = std::to_string(best_ix);
        report["peak_iy"] = std::to_string(best_iy);
        report["peak_tmi_nt"] = fmt_double(best);
    }
    print_kv(report);
}

struct DiurnalOpts {
    std::string survey, base, out;
};

void run_diurnal(const DiurnalOpts& o) {
    const TimeSeries corrected =
        diurnal_correct(read_timeseries(o.survey), read_timeseries(o.base));
    write_timeseries(o.out, corrected);
    std::cout << "corrected=" << o.out << '\n';
}

void add_config_opts(CLI::App* cmd, std::string& config, std::string& manifest,
                     std::vector<std::string>& sets) {
    cmd->add_option("--config", config, "key=value config file");
    cmd->add_option("--manifest", manifest, "dataset manifest to take the config from");
    cmd->add_option("--set", sets, "config override key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NV-diamond vector magnetometer simulator and processing toolkit"};
    app.require_subcommand(1);

    SimOpts sim;
    auto* sim_cmd = app.add_subcommand("sim", "generate a scenario dataset");
    sim_cmd->add_option("kind", sim.kind,
                        "chamber | coil | ramp | spin | storm | balloon | survey")
        ->required();
    sim_cmd->add_option("--duration", sim.duration_s, "length in seconds");
    sim_cmd->add_option("--rate", sim.rate_hz, "sample rate in Hz");
    sim_cmd->add_option("--seed", sim.seed, "master seed");
    sim_cmd->add_option("--param", sim.params, "scenario parameter key=value (repeatable)");
    sim_cmd->add_option("--mode", sim.mode, "fields (default) or spectra");
    sim_cmd->add_option("--imperfections", sim.imperfections,
                        "none | table1-before | table1-after | key=value file");
    sim_cmd->add_option("--out", sim.out_dir, "output directory");
    add_config_opts(sim_cmd, sim.config, sim.manifest, sim.sets);
    sim_cmd->callback([&] { run_sim(sim); });

    PipelineOpts pipe;
    auto* pipe_cmd =
        app.add_subcommand("pipeline", "spectra stream to readings: detect, fit, track, invert");
    pipe_cmd->add_option("--spectra", pipe.spectra, "input spectra CSV")->required();
    pipe_cmd->add_option("--out", pipe.out, "output readings CSV")->required();
    add_config_opts(pipe_cmd, pipe.config, pipe.manifest, pipe.sets);
    pipe_cmd->callback([&] { run_pipeline(pipe); });

    auto* cal_cmd = app.add_subcommand("cal", "calibration fitting and application");
    cal_cmd->require_subcommand(1);

    CalFitOpts cfit;
    auto* cfit_cmd = cal_cmd->add_subcommand("fit", "affine fit against a reference series");
    cfit_cmd->add_option("--measured", cfit.measured, "measured series CSV")->required();
    cfit_cmd->add_option("--reference", cfit.reference, "reference series CSV")->required();
    cfit_cmd->add_option("--out", cfit.out, "output model file")->required();
    cfit_cmd->add_flag("--use-temperature", cfit.use_temperature,
                       "include a linear temperature term");
    cfit_cmd->add_option("--min-points", cfit.min_points, "minimum training points");
    cfit_cmd->callback([&] { run_cal_fit(cfit); });

    CalApplyOpts capply;
    auto* capply_cmd = cal_cmd->add_subcommand("apply", "apply a model to a series");
    capply_cmd->add_option("--model", capply.model, "model file")->required();
    capply_cmd->add_option("--in", capply.in, "input series CSV")->required();
    capply_cmd->add_option("--out", capply.out, "output series CSV")->required();
    capply_cmd->callback([&] { run_cal_apply(capply); });

    CalSpinOpts cspin;
    auto* cspin_cmd =
        cal_cmd->add_subcommand("spin", "scalar-reference ellipsoid fit on rotation data");
    cspin_cmd->add_option("--in", cspin.in, "rotation series CSV")->required();
    cspin_cmd->add_option("--out", cspin.out, "output model file")->required();
    cspin_cmd->add_option("--reference-tmi", cspin.reference_tmi_nt,
                          "reference magnitude, nT (default: mean measured)");
    cspin_cmd->add_flag("--offsets-only", cspin.offsets_only, "sphere fit, matrix left identity");
    cspin_cmd->add_option("--max-gap", cspin.max_gap_deg, "largest allowed coverage gap, deg");
    cspin_cmd->callback([&] { run_cal_spin(cspin); });

    CalTempOpts ctemp;
    auto* ctemp_cmd =
        cal_cmd->add_subcommand("temp", "fit temperature drift at a known constant field");
    ctemp_cmd->add_option("--in", ctemp.in, "raw measured series CSV")->required();
    ctemp_cmd->add_option("--known", ctemp.known, "true field bx,by,bz in nT")->required();
    ctemp_cmd->add_option("--model", ctemp.model, "base model applied before the fit");
    ctemp_cmd->add_option("--out", ctemp.out, "output model file")->required();
    ctemp_cmd->add_option("--min-span", ctemp.min_span_k, "minimum temperature span, K");
    ctemp_cmd->callback([&] { run_cal_temp(ctemp); });

    CalEvalOpts ceval;
    auto* ceval_cmd = cal_cmd->add_subcommand("eval", "model report and optional test-set error");
    ceval_cmd->add_option("--model", ceval.model, "model file")->required();
    ceval_cmd->add_option("--in", ceval.in, "measured test series CSV");
    ceval_cmd->add_option("--reference", ceval.reference, "reference test series CSV");
    ceval_cmd->add_option("--out", ceval.out, "write the report as key=value");
    ceval_cmd->callback([&] { run_cal_eval(ceval); });

    AllanOpts allan;
    auto* allan_cmd = app.add_subcommand("allan", "overlapping Allan deviation per axis");
    allan_cmd->add_option("--in", allan.in, "input series CSV")->required();
    allan_cmd->add_option("--out", allan.out, "output curve CSV")->required();
    allan_cmd->add_option("--taus", allan.taus,
                          "comma-separated taus in s (default: doubling from one period)");
    allan_cmd->add_option("--report", allan.report, "write knees and sensitivity as key=value");
    allan_cmd->add_option("--sensitivity-tau", allan.sensitivity_tau_s,
                          "report white-noise ASD read at this tau");
    allan_cmd->callback([&] { run_allan(allan); });

    SurveyOpts survey;
    auto* survey_cmd = app.add_subcommand("survey", "grid the TMI of a geo-referenced series");
    survey_cmd->add_option("--in", survey.in, "geo series CSV")->required();
    survey_cmd->add_option("--out", survey.out, "output grid file")->required();
    survey_cmd->add_option("--spacing", survey.spacing_m, "grid spacing, m");
    survey_cmd->add_option("--origin-lat", survey.origin_lat_deg,
                           "grid origin latitude (default: data minimum)");
    survey_cmd->add_option("--origin-lon", survey.origin_lon_deg,
                           "grid origin longitude (default: data minimum)");
    survey_cmd->add_option("--nx", survey.nx, "columns (default: sized to data)");
    survey_cmd->add_option("--ny", survey.ny, "rows (default: sized to data)");
    survey_cmd->callback([&] { run_survey(survey); });

    DiurnalOpts diurnal;
    auto* diurnal_cmd =
        app.add_subcommand("diurnal", "subtract base-station variation from a survey");
    diurnal_cmd->add_option("--survey", diurnal.survey, "survey series CSV")->required();
    diurnal_cmd->add_option("--base", diurnal.base, "base station series CSV")->required();
    diurnal_cmd->add_option("--out", diurnal.out, "output corrected CSV")->required();
    diurnal_cmd->callback([&] { run_diurnal(diurnal); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
