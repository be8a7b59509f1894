#include "nvmag/config.hpp"

#include <charconv>
#include <fstream>

#include "nvmag/errors.hpp"
#include "nvmag/formats.hpp"

namespace nvmag {

namespace {

double to_double(const std::string& key, const std::string& value) {
    double d;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ValidationError("config key " + key + ": '" + value + "' is not a number");
    return d;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t u;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), u);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ValidationError("config key " + key + ": '" + value +
                              "' is not a non-negative integer");
    return u;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto d = [&] { return to_double(key, value); };
    if (key == "constants.d0_hz") cfg.constants.d0_hz = d();
    else if (key == "constants.beta_hz_per_k") cfg.constants.beta_hz_per_k = d();
    else if (key == "constants.gamma_hz_per_nt") cfg.constants.gamma_hz_per_nt = d();
    else if (key == "constants.t0_k") cfg.constants.t0_k = d();
    else if (key == "constants.max_axis_projection_nt") cfg.constants.max_axis_projection_nt = d();
    else if (key == "constants.temp_min_k") cfg.constants.temp_min_k = d();
    else if (key == "constants.temp_max_k") cfg.constants.temp_max_k = d();
    else if (key == "bias.x_nt") cfg.bias.field_nt.x = d();
    else if (key == "bias.y_nt") cfg.bias.field_nt.y = d();
    else if (key == "bias.z_nt") cfg.bias.field_nt.z = d();
    else if (key == "bias.temp_coeff_x_nt_per_k") cfg.bias.temp_coeff_nt_per_k.x = d();
    else if (key == "bias.temp_coeff_y_nt_per_k") cfg.bias.temp_coeff_nt_per_k.y = d();
    else if (key == "bias.temp_coeff_z_nt_per_k") cfg.bias.temp_coeff_nt_per_k.z = d();
    else if (key == "bias.ref_temp_k") cfg.bias.ref_temp_k = d();
    else if (key == "bias.separation_margin_nt") cfg.bias.separation_margin_nt = d();
    else if (key == "bias.max_external_nt") cfg.bias.max_external_nt = d();
    else if (key == "line.fwhm_hz") cfg.line.fwhm_hz = d();
    else if (key == "line.contrast") cfg.line.contrast = d();
    else if (key == "line.baseline") cfg.line.baseline = d();
    else if (key == "grid.f_min_hz") cfg.grid.f_min_hz = d();
    else if (key == "grid.f_max_hz") cfg.grid.f_max_hz = d();
    else if (key == "grid.step_hz") cfg.grid.step_hz = d();
    else if (key == "detect.smooth_window") cfg.detect.smooth_window = static_cast<int>(to_u64(key, value));
    else if (key == "detect.prominence_frac") cfg.detect.prominence_frac = d();
    else if (key == "detect.min_separation_hz") cfg.detect.min_separation_hz = d();
    else if (key == "fit.max_iterations") cfg.fit.max_iterations = static_cast<int>(to_u64(key, value));
    else if (key == "fit.rel_tol") cfg.fit.rel_tol = d();
    else if (key == "fit.init_fwhm_hz") cfg.fit.init_fwhm_hz = d();
    else if (key == "track.window_fwhm") cfg.track.window_fwhm = d();
    else if (key == "track.min_depth_frac") cfg.track.min_depth_frac = d();
    else if (key == "spectrum.noise_std") cfg.spectrum_noise_std = d();
    else if (key == "seed") cfg.seed = to_u64(key, value);
    else throw ValidationError("unknown config key: " + key);
}

void RunConfig::validate() const {
    constants.validate();
    if (line.fwhm_hz <= 0 || line.contrast <= 0 || line.contrast >= 1 || line.baseline <= 0)
        throw ValidationError("line parameters out of range (fwhm > 0, 0 < contrast < 1, "
                              "baseline > 0)");
    if (grid.step_hz <= 0 || grid.f_max_hz <= grid.f_min_hz)
        throw ValidationError("frequency grid: need f_max > f_min and step > 0");
    if (detect.smooth_window < 1 || detect.smooth_window % 2 == 0)
        throw ValidationError("detect.smooth_window must be odd and >= 1");
    if (detect.prominence_frac <= 0 || detect.prominence_frac >= 1)
        throw ValidationError("detect.prominence_frac must be in (0, 1)");
    if (fit.max_iterations < 1 || fit.rel_tol <= 0 || fit.init_fwhm_hz <= 0)
        throw ValidationError("fit settings out of range");
    if (track.window_fwhm <= 0 || track.min_depth_frac <= 0 || track.min_depth_frac >= 1)
        throw ValidationError("track settings out of range");
    if (spectrum_noise_std < 0) throw ValidationError("spectrum.noise_std must be >= 0");
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    for (const auto& [k, v] : read_kv(path)) apply_config_entry(cfg, k, v);
    cfg.track.fit = cfg.fit;
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> config_entries(const RunConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["constants.d0_hz"] = fmt_double(cfg.constants.d0_hz);
    kv["constants.beta_hz_per_k"] = fmt_double(cfg.constants.beta_hz_per_k);
    kv["constants.gamma_hz_per_nt"] = fmt_double(cfg.constants.gamma_hz_per_nt);
    kv["constants.t0_k"] = fmt_double(cfg.constants.t0_k);
    kv["constants.max_axis_projection_nt"] = fmt_double(cfg.constants.max_axis_projection_nt);
    kv["constants.temp_min_k"] = fmt_double(cfg.constants.temp_min_k);
    kv["constants.temp_max_k"] = fmt_double(cfg.constants.temp_max_k);
    kv["bias.x_nt"] = fmt_double(cfg.bias.field_nt.x);
    kv["bias.y_nt"] = fmt_double(cfg.bias.field_nt.y);
    kv["bias.z_nt"] = fmt_double(cfg.bias.field_nt.z);
    kv["bias.temp_coeff_x_nt_per_k"] = fmt_double(cfg.bias.temp_coeff_nt_per_k.x);
    kv["bias.temp_coeff_y_nt_per_k"] = fmt_double(cfg.bias.temp_coeff_nt_per_k.y);
    kv["bias.temp_coeff_z_nt_per_k"] = fmt_double(cfg.bias.temp_coeff_nt_per_k.z);
    kv["bias.ref_temp_k"] = fmt_double(cfg.bias.ref_temp_k);
    kv["bias.separation_margin_nt"] = fmt_double(cfg.bias.separation_margin_nt);
    kv["bias.max_external_nt"] = fmt_double(cfg.bias.max_external_nt);
    kv["line.fwhm_hz"] = fmt_double(cfg.line.fwhm_hz);
    kv["line.contrast"] = fmt_double(cfg.line.contrast);
    kv["line.baseline"] = fmt_double(cfg.line.baseline);
    kv["grid.f_min_hz"] = fmt_double(cfg.grid.f_min_hz);
    kv["grid.f_max_hz"] = fmt_double(cfg.grid.f_max_hz);
    kv["grid.step_hz"] = fmt_double(cfg.grid.step_hz);
    kv["detect.smooth_window"] = std::to_string(cfg.detect.smooth_window);
    kv["detect.prominence_frac"] = fmt_double(cfg.detect.prominence_frac);
    kv["detect.min_separation_hz"] = fmt_double(cfg.detect.min_separation_hz);
    kv["fit.max_iterations"] = std::to_string(cfg.fit.max_iterations);
    kv["fit.rel_tol"] = fmt_double(cfg.fit.rel_tol);
    kv["fit.init_fwhm_hz"] = fmt_double(cfg.fit.init_fwhm_hz);
    kv["track.window_fwhm"] = fmt_double(cfg.track.window_fwhm);
    kv["track.min_depth_frac"] = fmt_double(cfg.track.min_depth_frac);
    kv["spectrum.noise_std"] = fmt_double(cfg.spectrum_noise_std);
    kv["seed"] = std::to_string(cfg.seed);
    return kv;
}

}  // namespace nvmag
