#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nvmag/errors.hpp"
#include "nvmag/inversion.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/rng.hpp"

using namespace nvmag;

namespace {

// zero-splitting set at a common center, consecutive-index pairing
PeakSet flat_set(double center_hz) {
    PeakSet p;
    p.center_hz.fill(center_hz);
    p.pairing = {{{0, 1}, {2, 3}, {4, 5}, {6, 7}}};
    return p;
}

Vec3 random_field(Rng& rng, double max_norm) {
    // uniform direction, radius scaled for uniform density in the ball
    double x, y, z, q;
    do {
        x = rng.uniform(-1, 1);
        y = rng.uniform(-1, 1);
        z = rng.uniform(-1, 1);
        q = x * x + y * y + z * z;
    } while (q > 1.0 || q == 0.0);
    const double r = max_norm * std::cbrt(rng.uniform01());
    return Vec3{x, y, z} / std::sqrt(q) * r;
}

}  // namespace

TEST_CASE("splitting to projection uses the bias sign and the 2 gamma divisor") {
    const BiasFieldConfig bias;  // axis 0 projection positive, axis 1 negative

    PeakSet p = flat_set(2.87e9);
    p.center_hz[0] = 2.87e9 - 1.4012e6;
    p.center_hz[1] = 2.87e9 + 1.4012e6;
    auto proj = splittings_to_projections(p, bias);
    CHECK(proj[0] == doctest::Approx(50000.0).epsilon(1e-12));
    CHECK(proj[1] == 0.0);
    CHECK(proj[2] == 0.0);
    CHECK(proj[3] == 0.0);

    PeakSet q = flat_set(2.87e9);
    q.center_hz[2] = 2.87e9 - 0.46705e6;
    q.center_hz[3] = 2.87e9 + 0.46705e6;
    proj = splittings_to_projections(q, bias);
    CHECK(proj[1] == doctest::Approx(-0.46705e6 / 28.024).epsilon(1e-12));
    CHECK(std::abs(proj[1] - (-16667.0)) < 1.0);
}

TEST_CASE("inverted pair ordering is rejected") {
    const BiasFieldConfig bias;
    PeakSet p = flat_set(2.87e9);
    p.center_hz[0] = 2.87e9 + 1e6;
    p.center_hz[1] = 2.87e9 - 1e6;
    CHECK_THROWS_AS((void)splittings_to_projections(p, bias), ValidationError);
}

TEST_CASE("splitting implying a field beyond first-order validity is rejected") {
    const BiasFieldConfig bias;
    PeakSet p = flat_set(2.87e9);
    const double half = 28.024 * 2.1e6;  // 2.1 mT equivalent
    p.center_hz[0] = 2.87e9 - half;
    p.center_hz[1] = 2.87e9 + half;
    CHECK_THROWS_AS((void)splittings_to_projections(p, bias), ValidationError);
}

TEST_CASE("projection solve round-trips a known field with zero residual") {
    const auto& axes = tetrahedral_axes();
    const Vec3 b{12000.0, -34000.0, 5000.0};
    std::array<double, 4> p;
    for (int a = 0; a < 4; ++a) p[a] = b.dot(axes[a]);
    const FieldSolution sol = projections_to_field(p);
    CHECK(std::abs(sol.field_nt.x - b.x) < 1e-9);
    CHECK(std::abs(sol.field_nt.y - b.y) < 1e-9);
    CHECK(std::abs(sol.field_nt.z - b.z) < 1e-9);
    CHECK(sol.residual_nt < 1e-9);
}

TEST_CASE("uniform projections are pure common mode: zero field, residual 2k") {
    const double k = 1000.0;
    const FieldSolution sol = projections_to_field({k, k, k, k});
    CHECK(std::abs(sol.field_nt.x) < 1e-9);
    CHECK(std::abs(sol.field_nt.y) < 1e-9);
    CHECK(std::abs(sol.field_nt.z) < 1e-9);
    CHECK(sol.residual_nt == doctest::Approx(2.0 * k).epsilon(1e-12));

    const FieldSolution zero = projections_to_field({0, 0, 0, 0});
    CHECK(zero.field_nt.norm() == 0.0);
    CHECK(zero.residual_nt == 0.0);
}

TEST_CASE("pseudoinverse composed with the projection map is the identity") {
    const auto& axes = tetrahedral_axes();
    const std::array<Vec3, 3> basis{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    for (const Vec3& e : basis) {
        std::array<double, 4> p;
        for (int a = 0; a < 4; ++a) p[a] = e.dot(axes[a]);
        const Vec3 back = projections_to_field(p).field_nt;
        CHECK(std::abs(back.x - e.x) < 1e-12);
        CHECK(std::abs(back.y - e.y) < 1e-12);
        CHECK(std::abs(back.z - e.z) < 1e-12);
    }
}

TEST_CASE("common mode maps to temperature through the linear splitting model") {
    CHECK(common_mode_to_temperature(flat_set(2.870e9)) == doctest::Approx(298.15).epsilon(1e-12));
    CHECK(common_mode_to_temperature(flat_set(2.870e9 - 742e3)) ==
          doctest::Approx(308.15).epsilon(1e-12));
    CHECK(common_mode_to_temperature(flat_set(2868378730.0)) ==
          doctest::Approx(320.0).epsilon(1e-12));
    // midpoint implying 138 K is outside the model range
    CHECK_THROWS_AS((void)common_mode_to_temperature(flat_set(2.870e9 + 74.2e3 * 160.0)),
                    ValidationError);
}

TEST_CASE("frame inversion round-trips field and temperature") {
    const BiasFieldConfig bias;
    Rng rng(424242);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 ext = random_field(rng, 60e3);
        const double t = rng.uniform(278.15, 318.15);
        const auto res = forward_resonances(bias.at(t) + ext, t);
        const MagReading r = invert_frame(to_peak_set(res), 1.5, bias);
        CHECK(std::abs(r.field.b.x - ext.x) < 1e-6);
        CHECK(std::abs(r.field.b.y - ext.y) < 1e-6);
        CHECK(std::abs(r.field.b.z - ext.z) < 1e-6);
        CHECK(std::abs(r.diamond_temp_k - t) < 1e-6);
        CHECK(r.residual_nt < 1e-6);
        CHECK(r.t_s == 1.5);
        CHECK(r.valid);
    }
}

TEST_CASE("zero external field inverts to zero") {
    const BiasFieldConfig bias;
    const auto res = forward_resonances(bias.at(298.15), 298.15);
    const MagReading r = invert_frame(to_peak_set(res), 0.0, bias);
    CHECK(std::abs(r.field.b.x) < 1e-6);
    CHECK(std::abs(r.field.b.y) < 1e-6);
    CHECK(std::abs(r.field.b.z) < 1e-6);
}

TEST_CASE("temperature estimate ignores external field changes") {
    const BiasFieldConfig bias;
    const double t = 301.0;
    const auto r1 = invert_frame(to_peak_set(forward_resonances(bias.at(t) + Vec3{50e3, 0, 0}, t)),
                                 0.0, bias);
    const auto r2 = invert_frame(to_peak_set(forward_resonances(bias.at(t) + Vec3{0, -40e3, 20e3}, t)),
                                 0.0, bias);
    CHECK(std::abs(r1.diamond_temp_k - r2.diamond_temp_k) < 1e-9);
}

TEST_CASE("a single perturbed line shows up as inversion residual") {
    const BiasFieldConfig bias;
    auto peaks = to_peak_set(forward_resonances(bias.at(298.15) + Vec3{10e3, 5e3, -8e3}, 298.15));
    const MagReading clean = invert_frame(peaks, 0.0, bias);
    CHECK(clean.residual_nt < 1e-9);

    peaks.center_hz[3] += 1e3;
    const MagReading bent = invert_frame(peaks, 0.0, bias);
    CHECK(bent.residual_nt > 1.0);
}

TEST_CASE("equal peak sigmas propagate through the pseudoinverse rows") {
    const BiasFieldConfig bias;
    auto peaks = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const double s = 28.024 * 0.4;  // 400 pT equivalent per center
    peaks.sigma_hz.fill(s);
    const MagReading r = invert_frame(peaks, 0.0, bias);
    // sigma(p) = s*sqrt(2)/(2 gamma) = 0.4/sqrt(2); row norm of (3/4)N^T is sqrt(3)/2
    const double expect = 0.4 / std::sqrt(2.0) * std::sqrt(3.0) / 2.0;
    CHECK(r.sigma_nt.x == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r.sigma_nt.y == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r.sigma_nt.z == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.24494897427831783).epsilon(1e-12));
}

TEST_CASE("axis midpoints drifting apart sets the spread flag without blocking the reading") {
    const BiasFieldConfig bias;
    auto peaks = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    peaks.sigma_hz.fill(100.0);
    CHECK_FALSE(invert_frame(peaks, 0.0, bias).high_spread);

    // move one pair's midpoint 5 kHz without touching its splitting
    const auto [lo, hi] = peaks.pairing[2];
    peaks.center_hz[lo] += 5e3;
    peaks.center_hz[hi] += 5e3;
    const MagReading r = invert_frame(peaks, 0.0, bias);
    CHECK(r.high_spread);
    CHECK(r.midpoint_spread_hz == doctest::Approx(5e3).epsilon(1e-9));
    CHECK(r.valid);
}

TEST_CASE("bias configuration rejects fields that break pairing guarantees") {
    CHECK_NOTHROW(BiasFieldConfig{}.validate());

    BiasFieldConfig zero;
    zero.field_nt = {0, 0, 0};
    CHECK_THROWS_AS(zero.validate(), ValidationError);

    // single-axis bias projects equally on all four axes: no separation
    BiasFieldConfig mono;
    mono.field_nt = {0, 0, 500000.0};
    CHECK_THROWS_AS(mono.validate(), ValidationError);

    BiasFieldConfig huge;
    huge.field_nt = {3.4e6, 0, 0};
    CHECK_THROWS_AS(huge.validate(), ValidationError);
}
