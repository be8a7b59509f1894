#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nvmag {

// All fields in nT, frequencies in Hz, temperatures in K, times in s.

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3. Enough surface for the models here; heavy decompositions use Eigen internally.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double& operator()(int r, int c) { return m[3 * r + c]; }
    double operator()(int r, int c) const { return m[3 * r + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    static Mat3 identity() { return {}; }
    static Mat3 diag(const Vec3& d) { return Mat3{{d.x, 0, 0, 0, d.y, 0, 0, 0, d.z}}; }
};

// Coordinate frame tag. Operations that mix frames must convert explicitly.
enum class Frame : std::uint8_t { sensor, earth };

struct FieldVector {
    Vec3 b;  // nT
    Frame frame = Frame::sensor;
};

// Uniformly sampled vector time series, the interchange type between modules.
// geo_* are either all empty or all sized like t.
struct TimeSeries {
    std::vector<double> t;       // s
    std::vector<Vec3> b;         // nT
    std::vector<double> temp_k;  // diamond or ambient temperature per sample
    std::vector<double> lat_deg, lon_deg, alt_m;
    Frame frame = Frame::sensor;

    std::size_t size() const { return t.size(); }
    bool has_geo() const { return !lat_deg.empty(); }
    double rate_hz() const { return size() >= 2 ? 1.0 / (t[1] - t[0]) : 0.0; }
};

// One fitted ODMR frame after inversion.
struct MagReading {
    double t_s = 0.0;
    FieldVector field;                 // external field, bias removed
    double diamond_temp_k = 0.0;
    double residual_nt = 0.0;          // projection-space misfit |N*B - p|
    Vec3 sigma_nt;                     // per-axis 1-sigma from peak uncertainties
    double midpoint_spread_hz = 0.0;   // max-min of the four pair midpoints
    bool high_spread = false;          // midpoint spread above 10x mean peak sigma
    bool valid = true;
    std::map<std::string, double> aux;
};

struct LineParams {
    double fwhm_hz = 1.0e6;
    double contrast = 0.02;   // unit-height Lorentzian depth, fractional
    double baseline = 1.0;
};

struct FreqGrid {
    double f_min_hz = 2.850e9;
    double f_max_hz = 2.890e9;
    double step_hz = 4.0e3;

    std::size_t points() const {
        return static_cast<std::size_t>(std::floor((f_max_hz - f_min_hz) / step_hz)) + 1;
    }
};

struct OdmrSpectrum {
    double f_min_hz = 0.0;
    double step_hz = 0.0;
    std::vector<double> contrast;
    std::int64_t frame = 0;
    double t_s = 0.0;

    double freq_at(std::size_t i) const { return f_min_hz + step_hz * static_cast<double>(i); }
    std::size_t size() const { return contrast.size(); }
};

// Eight fitted resonance lines plus the axis pairing.
// centers ascending; pairing[axis] = (index of f-, index of f+); every index used once.
struct PeakSet {
    std::array<double, 8> center_hz{};
    std::array<double, 8> sigma_hz{};   // 1-sigma center uncertainty, 0 for model output
    std::array<double, 8> fwhm_hz{};
    std::array<double, 8> contrast{};
    double baseline = 1.0;
    std::array<std::pair<int, int>, 4> pairing{};
    double fit_quality = 0.0;           // residual rms in contrast units
};

}  // namespace nvmag
