#include "nvmag/formats.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

#include "nvmag/errors.hpp"

namespace nvmag {

std::string fmt_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

void append_double(std::string& s, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, r.ptr);
}

double parse_double(std::string_view tok, const std::string& path, std::size_t lineno) {
    double d;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" +
                      std::string(tok) + "'");
    return d;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::map<std::string, std::string> read_kv(const std::string& path) {
    auto in = open_in(path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_kv(const std::string& path, const std::map<std::string, std::string>& kv) {
    auto out = open_out(path);
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed: " + path);
}

namespace {

constexpr const char* kBaseHeader = "t_s,bx_nT,by_nT,bz_nT,temp_K";
constexpr const char* kGeoHeader = "t_s,bx_nT,by_nT,bz_nT,temp_K,lat_deg,lon_deg,alt_m";
constexpr const char* kReadingsHeader =
    "t_s,bx_nT,by_nT,bz_nT,temp_K,residual_nT,sx_nT,sy_nT,sz_nT,spread_Hz,valid";

}  // namespace

void write_timeseries(const std::string& path, const TimeSeries& s) {
    auto out = open_out(path);
    const bool geo = s.has_geo();
    std::string buf;
    buf.reserve(1 << 16);
    buf += geo ? kGeoHeader : kBaseHeader;
    buf += '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        append_double(buf, s.t[i]);
        buf += ',';
        append_double(buf, s.b[i].x);
        buf += ',';
        append_double(buf, s.b[i].y);
        buf += ',';
        append_double(buf, s.b[i].z);
        buf += ',';
        append_double(buf, s.temp_k[i]);
        if (geo) {
            buf += ',';
            append_double(buf, s.lat_deg[i]);
            buf += ',';
            append_double(buf, s.lon_deg[i]);
            buf += ',';
            append_double(buf, s.alt_m[i]);
        }
        buf += '\n';
        if (buf.size() > (1 << 15)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

TimeSeries read_timeseries(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, expected a header");
    strip_cr(line);

    const bool base = line == kBaseHeader;
    const bool geo = line == kGeoHeader;
    const bool readings = line == kReadingsHeader;
    if (!base && !geo && !readings)
        throw IoError(path + ": unrecognized header '" + line + "'");
    const std::size_t ncol = base ? 5 : (geo ? 8 : 11);

    TimeSeries s;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto tok = split_csv(line);
        if (tok.size() != ncol)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(ncol) + " columns, got " + std::to_string(tok.size()));
        s.t.push_back(parse_double(tok[0], path, lineno));
        s.b.push_back({parse_double(tok[1], path, lineno), parse_double(tok[2], path, lineno),
                       parse_double(tok[3], path, lineno)});
        s.temp_k.push_back(parse_double(tok[4], path, lineno));
        if (geo) {
            s.lat_deg.push_back(parse_double(tok[5], path, lineno));
            s.lon_deg.push_back(parse_double(tok[6], path, lineno));
            s.alt_m.push_back(parse_double(tok[7], path, lineno));
        }
    }
    return s;
}

namespace {

void append_reading_row(std::string& buf, const MagReading& r) {
    append_double(buf, r.t_s);
    buf += ',';
    append_double(buf, r.field.b.x);
    buf += ',';
    append_double(buf, r.field.b.y);
    buf += ',';
    append_double(buf, r.field.b.z);
    buf += ',';
    append_double(buf, r.diamond_temp_k);
    buf += ',';
    append_double(buf, r.residual_nt);
    buf += ',';
    append_double(buf, r.sigma_nt.x);
    buf += ',';
    append_double(buf, r.sigma_nt.y);
    buf += ',';
    append_double(buf, r.sigma_nt.z);
    buf += ',';
    append_double(buf, r.midpoint_spread_hz);
    buf += ',';
    buf += r.valid ? '1' : '0';
    buf += '\n';
}

}  // namespace

void write_readings(const std::string& path, const std::vector<MagReading>& rows) {
    auto out = open_out(path);
    std::string buf;
    buf.reserve(1 << 16);
    buf += kReadingsHeader;
    buf += '\n';
    for (const auto& r : rows) {
        append_reading_row(buf, r);
        if (buf.size() > (1 << 15)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

ReadingsWriter::ReadingsWriter(const std::string& path)
    : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    out_ << kReadingsHeader << '\n';
}

void ReadingsWriter::add(const MagReading& row) {
    std::string buf;
    append_reading_row(buf, row);
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out_) throw IoError("write failed: " + path_);
}

void ReadingsWriter::close() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw IoError("write failed: " + path_);
}

std::vector<MagReading> read_readings(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, expected a header");
    strip_cr(line);
    if (line != kReadingsHeader)
        throw IoError(path + ": unrecognized readings header '" + line + "'");
    std::vector<MagReading> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto tok = split_csv(line);
        if (tok.size() != 11)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 11 columns");
        MagReading r;
        r.t_s = parse_double(tok[0], path, lineno);
        r.field.b = {parse_double(tok[1], path, lineno), parse_double(tok[2], path, lineno),
                     parse_double(tok[3], path, lineno)};
        r.diamond_temp_k = parse_double(tok[4], path, lineno);
        r.residual_nt = parse_double(tok[5], path, lineno);
        r.sigma_nt = {parse_double(tok[6], path, lineno), parse_double(tok[7], path, lineno),
                      parse_double(tok[8], path, lineno)};
        r.midpoint_spread_hz = parse_double(tok[9], path, lineno);
        r.valid = tok[10] == "1";
        if (!r.valid && tok[10] != "0")
            throw IoError(path + ":" + std::to_string(lineno) + ": valid flag must be 0 or 1");
        rows.push_back(std::move(r));
    }
    return rows;
}

SpectraWriter::SpectraWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    out_ << "frame,t_s,freq_Hz,contrast\n";
}

void SpectraWriter::add(const OdmrSpectrum& spec) {
    if (spec.frame != next_frame_)
        throw ValidationError("spectra frames must be contiguous: expected " +
                              std::to_string(next_frame_) + ", got " + std::to_string(spec.frame));
    ++next_frame_;
    std::string buf;
    buf.reserve(spec.size() * 40 + 64);
    std::string prefix = std::to_string(spec.frame) + ",";
    append_double(prefix, spec.t_s);
    prefix += ',';
    for (std::size_t i = 0; i < spec.size(); ++i) {
        buf += prefix;
        append_double(buf, spec.freq_at(i));
        buf += ',';
        append_double(buf, spec.contrast[i]);
        buf += '\n';
    }
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out_) throw IoError("write failed: " + path_);
}

void SpectraWriter::close() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw IoError("write failed: " + path_);
}

SpectraReader::SpectraReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path + " for reading");
    std::string header;
    if (!std::getline(in_, header)) throw IoError(path + ": empty file, expected a header");
    strip_cr(header);
    if (header != "frame,t_s,freq_Hz,contrast")
        throw IoError(path + ": unrecognized spectra header '" + header + "'");
    lineno_ = 1;
}

// Skips the rest of the broken frame: the first row whose index parses and
// exceeds `frame` becomes the pending row of the next call. Requiring a larger
// index guarantees forward progress through duplicated or descending indices.
void SpectraReader::resync_fail(std::int64_t frame, double t_s, const std::string& detail) {
    std::string line;
    while (true) {
        if (!pending_.empty()) {
            line.swap(pending_);
            pending_.clear();
        } else if (!std::getline(in_, line)) {
            break;
        } else {
            ++lineno_;
            strip_cr(line);
            if (line.empty()) continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        std::int64_t id = 0;
        const auto [p, ec] = std::from_chars(line.data(), line.data() + comma, id);
        if (ec != std::errc() || p != line.data() + comma || id <= frame) continue;
        pending_ = line;
        break;
    }
    next_frame_ = frame + 1;
    throw FrameError(frame, t_s, detail);
}

std::optional<OdmrSpectrum> SpectraReader::next() {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    OdmrSpectrum spec;
    bool any = false;
    double prev_freq = 0;
    std::string line;
    while (true) {
        if (!pending_.empty()) {
            line.swap(pending_);
            pending_.clear();
        } else if (!std::getline(in_, line)) {
            break;
        } else {
            ++lineno_;
            strip_cr(line);
            if (line.empty()) continue;
        }
        const std::string at = path_ + ":" + std::to_string(lineno_);
        const auto tok = split_csv(line);
        if (tok.size() != 4) {
            pending_ = line;  // let resync decide whether this row starts a later frame
            resync_fail(any ? spec.frame : next_frame_, any ? spec.t_s : nan,
                        at + ": expected 4 columns");
        }
        std::int64_t frame;
        {
            const auto [p, ec] = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), frame);
            if (ec != std::errc() || p != tok[0].data() + tok[0].size()) {
                pending_ = line;
                resync_fail(any ? spec.frame : next_frame_, any ? spec.t_s : nan,
                            at + ": bad frame index");
            }
        }
        if (any && frame != spec.frame) {
            pending_ = line;  // first row of a later frame; gaps surface next call
            break;
        }
        if (!any && frame != next_frame_) {
            pending_ = line;
            resync_fail(next_frame_, nan,
                        at + ": expected frame " + std::to_string(next_frame_) + ", got " +
                            std::to_string(frame));
        }
        double t, f, c;
        try {
            t = parse_double(tok[1], path_, lineno_);
            f = parse_double(tok[2], path_, lineno_);
            c = parse_double(tok[3], path_, lineno_);
        } catch (const IoError& e) {
            resync_fail(frame, any ? spec.t_s : nan, e.what());
        }
        if (!any) {
            spec.frame = frame;
            spec.t_s = t;
            spec.f_min_hz = f;
            any = true;
        } else {
            if (spec.size() == 1) {
                spec.step_hz = f - spec.f_min_hz;
                if (spec.step_hz <= 0)
                    resync_fail(frame, spec.t_s, at + ": frequencies must ascend");
            } else if (std::abs((f - prev_freq) - spec.step_hz) > 1e-6 * spec.step_hz) {
                resync_fail(frame, spec.t_s, at + ": frequency grid is not uniform");
            }
        }
        prev_freq = f;
        spec.contrast.push_back(c);
    }
    if (!any) return std::nullopt;
    if (spec.size() < 2)
        resync_fail(spec.frame, spec.t_s,
                    path_ + ": frame " + std::to_string(spec.frame) + " has fewer than 2 samples");
    ++next_frame_;
    return spec;
}

void write_calibration(const std::string& path, const CalibrationModel& m) {
    std::map<std::string, std::string> kv;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            kv["m" + std::to_string(r) + std::to_string(c)] = fmt_double(m.matrix(r, c));
    for (int i = 0; i < 3; ++i) kv["o" + std::to_string(i)] = fmt_double(m.offset_nt[i]);
    if (m.temp_coeff_nt_per_k) {
        for (int i = 0; i < 3; ++i)
            kv["t" + std::to_string(i)] = fmt_double((*m.temp_coeff_nt_per_k)[i]);
        kv["tref"] = fmt_double(m.ref_temp_k);
    }
    if (!m.fitted_at.empty()) kv["fitted_at"] = m.fitted_at;
    kv["residual_std"] = fmt_double(m.residual_std_nt.x) + "," +
                         fmt_double(m.residual_std_nt.y) + "," + fmt_double(m.residual_std_nt.z);
    write_kv(path, kv);
}

CalibrationModel read_calibration(const std::string& path) {
    const auto kv = read_kv(path);
    CalibrationModel m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const std::string key = "m" + std::to_string(r) + std::to_string(c);
            const auto it = kv.find(key);
            if (it == kv.end())
                throw IoError(path + ": calibration matrix entry " + key + " missing");
            m.matrix(r, c) = parse_double(it->second, path, 0);
        }
    for (int i = 0; i < 3; ++i) {
        const std::string key = "o" + std::to_string(i);
        const auto it = kv.find(key);
        if (it == kv.end()) throw IoError(path + ": calibration offset " + key + " missing");
        m.offset_nt[i] = parse_double(it->second, path, 0);
    }
    const bool has_t = kv.count("t0") || kv.count("t1") || kv.count("t2");
    if (has_t) {
        Vec3 tc;
        for (int i = 0; i < 3; ++i) {
            const auto it = kv.find("t" + std::to_string(i));
            if (it == kv.end())
                throw IoError(path + ": partial temperature coefficients (t0..t2 required)");
            tc[i] = parse_double(it->second, path, 0);
        }
        m.temp_coeff_nt_per_k = tc;
        const auto it = kv.find("tref");
        if (it == kv.end())
            throw IoError(path + ": temperature coefficients without tref");
        m.ref_temp_k = parse_double(it->second, path, 0);
    }
    if (const auto it = kv.find("fitted_at"); it != kv.end()) m.fitted_at = it->second;
    if (const auto it = kv.find("residual_std"); it != kv.end()) {
        const auto tok = split_csv(it->second);
        if (tok.size() != 3) throw IoError(path + ": residual_std needs three values");
        for (int i = 0; i < 3; ++i) m.residual_std_nt[i] = parse_double(tok[static_cast<std::size_t>(i)], path, 0);
    }
    for (const auto& [k, v] : kv) {
        static const char* known[] = {"tref", "fitted_at", "residual_std"};
        const bool matrix_key = k.size() == 3 && (k[0] == 'm' || k[0] == 'o' || k[0] == 't') &&
                                std::isdigit(static_cast<unsigned char>(k[1])) &&
                                (k[0] != 'm' || std::isdigit(static_cast<unsigned char>(k[2])));
        const bool vec_key = k.size() == 2 && (k[0] == 'o' || k[0] == 't') &&
                             std::isdigit(static_cast<unsigned char>(k[1]));
        bool ok = matrix_key || vec_key;
        for (const char* kn : known) ok = ok || k == kn;
        if (!ok) throw IoError(path + ": unknown calibration key '" + k + "'");
    }
    return m;
}

void write_allan(const std::string& path, const AllanCurve& curve) {
    auto out = open_out(path);
    out << "tau_s,sx_nT,sy_nT,sz_nT\n";
    for (std::size_t j = 0; j < curve.tau_s.size(); ++j)
        out << fmt_double(curve.tau_s[j]) << ',' << fmt_double(curve.sigma_nt[0][j]) << ','
            << fmt_double(curve.sigma_nt[1][j]) << ',' << fmt_double(curve.sigma_nt[2][j]) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_grid(const std::string& path, const TmiGrid& grid) {
    auto out = open_out(path);
    out << "origin_lat_deg " << fmt_double(grid.origin_lat_deg) << '\n'
        << "origin_lon_deg " << fmt_double(grid.origin_lon_deg) << '\n'
        << "spacing_m " << fmt_double(grid.spacing_m) << '\n'
        << "dims " << grid.nx << ' ' << grid.ny << '\n'
        << "empty nan\n";
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (ix) out << ' ';
            const double v = grid.at(ix, iy);
            if (std::isnan(v))
                out << "nan";
            else
                out << fmt_double(v);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

TmiGrid read_grid(const std::string& path) {
    auto in = open_in(path);
    TmiGrid g;
    std::string key, dummy;
    if (!(in >> key >> g.origin_lat_deg) || key != "origin_lat_deg")
        throw IoError(path + ": bad grid header (origin_lat_deg)");
    if (!(in >> key >> g.origin_lon_deg) || key != "origin_lon_deg")
        throw IoError(path + ": bad grid header (origin_lon_deg)");
    if (!(in >> key >> g.spacing_m) || key != "spacing_m")
        throw IoError(path + ": bad grid header (spacing_m)");
    if (!(in >> key >> g.nx >> g.ny) || key != "dims" || g.nx <= 0 || g.ny <= 0)
        throw IoError(path + ": bad grid header (dims)");
    if (!(in >> key >> dummy) || key != "empty" || dummy != "nan")
        throw IoError(path + ": bad grid header (empty sentinel)");
    g.tmi_nt.resize(static_cast<std::size_t>(g.nx) * g.ny);
    g.hits.assign(g.tmi_nt.size(), 0);
    for (auto& v : g.tmi_nt) {
        std::string tok;
        if (!(in >> tok)) throw IoError(path + ": grid data truncated");
        if (tok == "nan") {
            v = std::numeric_limits<double>::quiet_NaN();
        } else {
            v = parse_double(tok, path, 0);
        }
    }
    return g;
}

}  // namespace nvmag
