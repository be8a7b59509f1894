#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nvmag/analysis.hpp"
#include "nvmag/calibration.hpp"
#include "nvmag/types.hpp"

namespace nvmag {

// All files are UTF-8 with LF line endings and comma separators without quoting.
// Doubles are written in shortest round-trip form so rewriting a parsed file
// reproduces it byte for byte.

std::string fmt_double(double v);

// key=value lines, '#' comments and blank lines skipped
std::map<std::string, std::string> read_kv(const std::string& path);
void write_kv(const std::string& path, const std::map<std::string, std::string>& kv);

// time series CSV: t_s,bx_nT,by_nT,bz_nT,temp_K with optional lat_deg,lon_deg,alt_m
void write_timeseries(const std::string& path, const TimeSeries& s);
TimeSeries read_timeseries(const std::string& path);

// pipeline output: the time-series columns plus residual_nT, sx_nT, sy_nT, sz_nT,
// spread_Hz, valid. read_timeseries accepts this superset and keeps the first five.
void write_readings(const std::string& path, const std::vector<MagReading>& rows);
std::vector<MagReading> read_readings(const std::string& path);

// Row-at-a-time variant of write_readings for streaming pipelines.
class ReadingsWriter {
  public:
    ReadingsWriter(const std::string& path);
    void add(const MagReading& row);
    void close();

  private:
    std::ofstream out_;
    std::string path_;
};

// spectrum CSV: frame,t_s,freq_Hz,contrast; frames contiguous ascending,
// frequencies ascending on a uniform grid within each frame
class SpectraWriter {
  public:
    SpectraWriter(const std::string& path);
    void add(const OdmrSpectrum& spec);  // flushes at frame granularity
    void close();

  private:
    std::ofstream out_;
    std::string path_;
    std::int64_t next_frame_ = 0;
};

// next() throws FrameError for a frame it could not parse after skipping past
// it, so callers may flag that frame and keep reading; other IoErrors are fatal.
class SpectraReader {
  public:
    SpectraReader(const std::string& path);
    std::optional<OdmrSpectrum> next();

  private:
    [[noreturn]] void resync_fail(std::int64_t frame, double t_s, const std::string& detail);

    std::ifstream in_;
    std::string path_;
    std::string pending_;
    std::int64_t next_frame_ = 0;
    std::size_t lineno_ = 0;
};

// calibration model file: key=value with m00..m22, o0..o2, optional t0..t2 and
// tref, fitted_at (ISO-8601), residual_std (comma-separated). Parsers reject
// files with matrix entries missing.
void write_calibration(const std::string& path, const CalibrationModel& m);
CalibrationModel read_calibration(const std::string& path);

// allan report: tau_s,sx_nT,sy_nT,sz_nT
void write_allan(const std::string& path, const AllanCurve& curve);

// grid file: five header lines (origin lat, origin lon, spacing, dims, nan
// sentinel) then ny rows of nx space-separated TMI values
void write_grid(const std::string& path, const TmiGrid& grid);
TmiGrid read_grid(const std::string& path);

}  // namespace nvmag
