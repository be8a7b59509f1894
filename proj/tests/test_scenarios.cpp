#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "nvmag/errors.hpp"
#include "nvmag/formats.hpp"
#include "nvmag/scenarios.hpp"

using namespace nvmag;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "nvmag_test" / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("coil points are bounded, isotropic, and seed-stable") {
    const TimeSeries a = coil_points(253, 60e3, 42);
    REQUIRE(a.size() == 253);
    Vec3 mean_dir{};
    for (const Vec3& v : a.b) {
        CHECK(v.norm() <= 60e3 + 1e-9);
        if (v.norm() > 0) mean_dir = mean_dir + v / v.norm();
    }
    mean_dir = mean_dir / 253.0;
    CHECK(mean_dir.norm() < 0.15);  // ~3.6 sigma for 253 uniform directions

    const TimeSeries b = coil_points(253, 60e3, 42);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.b[i].x == b.b[i].x);
        CHECK(a.b[i].y == b.b[i].y);
        CHECK(a.b[i].z == b.b[i].z);
    }

    const TimeSeries c = coil_points(253, 60e3, 43);
    int same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a.b[i].x == c.b[i].x;
    CHECK(same == 0);
}

TEST_CASE("ramp hits its endpoints exactly and centers on zero") {
    const TimeSeries s = ramp(1, -50e3, 50e3, 101);
    REQUIRE(s.size() == 101);
    CHECK(s.b.front().y == -50e3);
    CHECK(s.b.back().y == 50e3);
    CHECK(s.b[50].y == doctest::Approx(0.0).epsilon(1e-12));
    for (const Vec3& v : s.b) {
        CHECK(v.x == 0.0);
        CHECK(v.z == 0.0);
    }

    const TimeSeries two = ramp(0, 1.0, 2.0, 2);
    CHECK(two.b.front().x == 1.0);
    CHECK(two.b.back().x == 2.0);

    CHECK_THROWS_AS((void)ramp(0, 0.0, 1.0, 1), ValidationError);
    CHECK_THROWS_AS((void)ramp(3, 0.0, 1.0, 10), ValidationError);
}

TEST_CASE("spin about z sweeps the ambient vector at constant magnitude") {
    const Vec3 ambient{50000.0, 0.0, 0.0};
    const TimeSeries s = spin_trajectory(ambient, {0, 0, 1}, 10.0, 30.0, 10.0);
    REQUIRE(s.size() == 300);
    CHECK(s.b[0].x == doctest::Approx(50000.0).epsilon(1e-12));
    CHECK(s.b[0].y == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double ang = 2.0 * std::numbers::pi * s.t[i] / 10.0;
        CHECK(s.b[i].x == doctest::Approx(50000.0 * std::cos(ang)).epsilon(1e-9));
        CHECK(s.b[i].y == doctest::Approx(-50000.0 * std::sin(ang)).epsilon(1e-9));
        CHECK(std::abs(s.b[i].z) < 1e-6);
        CHECK(s.b[i].norm() == doctest::Approx(50000.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS((void)spin_trajectory(ambient, {0, 0, 1}, 0.0, 30.0, 10.0), ValidationError);
}

TEST_CASE("storm excursions peak exactly at the requested amplitude") {
    const Vec3 base{20000.0, 0.0, 45000.0};
    const TimeSeries s = storm_profile(base, 300.0, 3600.0, 1.0, 7);
    double peak[3] = {0, 0, 0};
    for (std::size_t i = 0; i < s.size(); ++i)
        for (int ax = 0; ax < 3; ++ax)
            peak[ax] = std::max(peak[ax], std::abs(s.b[i][ax] - base[ax]));
    for (int ax = 0; ax < 3; ++ax) CHECK(peak[ax] == doctest::Approx(300.0).epsilon(1e-9));

    // axes are decorrelated streams
    bool differ = false;
    for (std::size_t i = 0; i < s.size() && !differ; ++i)
        differ = std::abs((s.b[i].x - base.x) - (s.b[i].y - base.y)) > 1.0;
    CHECK(differ);

    const TimeSeries again = storm_profile(base, 300.0, 3600.0, 1.0, 7);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.b[i].x == again.b[i].x);

    const TimeSeries calm = storm_profile(base, 0.0, 60.0, 1.0, 7);
    for (const Vec3& v : calm.b) {
        CHECK(v.x == base.x);
        CHECK(v.y == base.y);
        CHECK(v.z == base.z);
    }
}

TEST_CASE("balloon flight spins then freezes the attitude") {
    const Vec3 ambient{30000.0, 0.0, -40000.0};
    const Vec3 axis = Vec3{0, 1, 0};
    const TimeSeries s = balloon_flight(ambient, axis, 10.0, 20.0, 60.0, 10.0);
    REQUIRE(s.size() == 600);

    const TimeSeries pure = spin_trajectory(ambient, axis, 10.0, 60.0, 10.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.b[i].norm() == doctest::Approx(50000.0).epsilon(1e-9));
        if (s.t[i] <= 20.0) {
            CHECK(s.b[i].x == pure.b[i].x);  // identical while spinning
        } else {
            CHECK(s.b[i].x == s.b[300].x);  // frozen after the stop
            CHECK(s.b[i].y == s.b[300].y);
            CHECK(s.b[i].z == s.b[300].z);
        }
    }

    CHECK_THROWS_AS((void)balloon_flight(ambient, axis, 10.0, -1.0, 60.0, 10.0),
                    ValidationError);
    CHECK_THROWS_AS((void)balloon_flight(ambient, axis, 10.0, 61.0, 60.0, 10.0),
                    ValidationError);
}

TEST_CASE("dipole survey flies boustrophedon lines over the source") {
    DipoleSurveyParams p;  // source (50, 40, -20), vertical 4e4 moment, alt 30
    const TimeSeries s = dipole_survey(p, 5.0);
    // 10 lines, 100 m at 5 m/s and 5 Hz: 101 samples per line
    REQUIRE(s.size() == 1010);
    REQUIRE(s.has_geo());

    // line 0 heads east, line 1 returns west
    CHECK(s.lon_deg[1] > s.lon_deg[0]);
    CHECK(s.lon_deg[102] < s.lon_deg[101]);
    // all samples share the flight altitude
    for (double a : s.alt_m) CHECK(a == 30.0);

    // strongest anomaly directly above the source: sample 50 of line 4
    const std::size_t above = 4 * 101 + 50;
    double best = 0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double dev = std::abs(s.b[i].norm() - 50000.0);
        if (dev > best) {
            best = dev;
            best_i = i;
        }
    }
    CHECK(best_i == above);
    CHECK(best == doctest::Approx(64.0).epsilon(1e-6));

    // the anomaly dies off away from the source: corner samples are quiet
    CHECK(std::abs(s.b[0].norm() - 50000.0) < 0.04 * best);
}

TEST_CASE("scenario validation names the known kinds and rejects stray params") {
    Scenario sc;
    sc.kind = "volcano";
    try {
        sc.validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string w = e.what();
        CHECK(w.find("chamber") != std::string::npos);
        CHECK(w.find("survey") != std::string::npos);
        CHECK(w.find("volcano") != std::string::npos);
    }

    sc.kind = "chamber";
    CHECK_NOTHROW(sc.validate());
    sc.params["period_s"] = 10.0;  // spin parameter on a chamber run
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc.params.clear();

    sc.params["temp_k"] = 300.0;  // accepted everywhere
    sc.params["temp_rate_k_per_s"] = 0.01;
    CHECK_NOTHROW(sc.validate());

    sc.duration_s = 0.0;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
    sc.duration_s = 60.0;
    sc.rate_hz = -1.0;
    CHECK_THROWS_AS(sc.validate(), ValidationError);
}

TEST_CASE("scenario truth carries the temperature profile") {
    Scenario sc;
    sc.kind = "chamber";
    sc.duration_s = 10.0;
    sc.rate_hz = 2.0;
    sc.params["temp_k"] = 305.0;
    sc.params["temp_rate_k_per_s"] = 0.5;
    const TimeSeries s = scenario_truth(sc);
    REQUIRE(s.size() == 20);
    CHECK(s.temp_k[0] == 305.0);
    CHECK(s.temp_k[10] == doctest::Approx(305.0 + 0.5 * 5.0).epsilon(1e-12));
    for (const Vec3& v : s.b) CHECK(v.norm() == 0.0);  // chamber is field-free
}

TEST_CASE("scenario truth is deterministic per seed") {
    Scenario sc;
    sc.kind = "coil";
    sc.duration_s = 30.0;
    sc.rate_hz = 1.0;
    sc.seed = 77;
    const TimeSeries a = scenario_truth(sc);
    const TimeSeries b = scenario_truth(sc);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.b[i].x == b.b[i].x);
        CHECK(a.b[i].y == b.b[i].y);
        CHECK(a.b[i].z == b.b[i].z);
    }
}

TEST_CASE("dataset generation writes matching truth, measured, and manifest") {
    Scenario sc;
    sc.kind = "chamber";
    sc.duration_s = 2.0;
    sc.rate_hz = 5.0;
    sc.seed = 3;
    RunConfig cfg;

    const auto dir = fresh_dir("fields_run");
    const DatasetFiles f =
        generate_dataset(sc, ImperfectionModel{}, DatasetMode::fields, dir.string(), cfg);
    CHECK(std::filesystem::exists(f.truth_csv));
    CHECK(std::filesystem::exists(f.measured_csv));
    CHECK(std::filesystem::exists(f.manifest_txt));
    CHECK(f.spectra_csv.empty());

    // identity imperfections: measured file equals truth byte for byte
    CHECK(slurp(f.truth_csv) == slurp(f.measured_csv));

    const auto manifest = read_kv(f.manifest_txt);
    CHECK(manifest.at("scenario.kind") == "chamber");
    CHECK(manifest.at("dataset.mode") == "fields");
    CHECK(manifest.at("scenario.seed") == "3");

    // every config entry appears in the manifest
    for (const auto& [k, v] : config_entries(cfg)) {
        INFO(k);
        CHECK(manifest.count(k) == 1);
        CHECK(manifest.at(k) == v);
    }

    // a second run reproduces every file byte for byte
    const auto dir2 = fresh_dir("fields_rerun");
    const DatasetFiles g =
        generate_dataset(sc, ImperfectionModel{}, DatasetMode::fields, dir2.string(), cfg);
    CHECK(slurp(f.truth_csv) == slurp(g.truth_csv));
    CHECK(slurp(f.measured_csv) == slurp(g.measured_csv));
    CHECK(slurp(f.manifest_txt) == slurp(g.manifest_txt));
}

TEST_CASE("spectra mode emits one frame per sample on the configured grid") {
    Scenario sc;
    sc.kind = "chamber";
    sc.duration_s = 2.0;
    sc.rate_hz = 5.0;
    sc.seed = 4;
    RunConfig cfg;
    cfg.spectrum_noise_std = 0.002;

    const auto dir = fresh_dir("spectra_run");
    const DatasetFiles f =
        generate_dataset(sc, ImperfectionModel{}, DatasetMode::spectra, dir.string(), cfg);
    REQUIRE_FALSE(f.spectra_csv.empty());

    SpectraReader reader(f.spectra_csv);
    std::size_t frames = 0;
    while (auto spec = reader.next()) {
        CHECK(spec->f_min_hz == cfg.grid.f_min_hz);
        CHECK(spec->step_hz == cfg.grid.step_hz);
        CHECK(spec->size() == cfg.grid.points());
        CHECK(spec->frame == static_cast<std::int64_t>(frames));
        ++frames;
    }
    CHECK(frames == 10);

    // noise comes from the dataset seed: rerun matches byte for byte
    const auto dir2 = fresh_dir("spectra_rerun");
    const DatasetFiles g =
        generate_dataset(sc, ImperfectionModel{}, DatasetMode::spectra, dir2.string(), cfg);
    CHECK(slurp(f.spectra_csv) == slurp(g.spectra_csv));
}

TEST_CASE("dataset truth and measured diverge under imperfections") {
    Scenario sc;
    sc.kind = "coil";
    sc.duration_s = 5.0;
    sc.rate_hz = 1.0;
    sc.seed = 6;
    RunConfig cfg;

    const auto dir = fresh_dir("imperfect_run");
    const DatasetFiles f = generate_dataset(sc, ImperfectionModel::table1_before(),
                                            DatasetMode::fields, dir.string(), cfg);
    const TimeSeries truth = read_timeseries(f.truth_csv);
    const TimeSeries measured = read_timeseries(f.measured_csv);
    REQUIRE(truth.size() == measured.size());
    const auto imp = ImperfectionModel::table1_before();
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Vec3 want = imp.matrix() * truth.b[i] + imp.offset_nt;
        CHECK((measured.b[i] - want).norm() < 1e-6);
    }
    const auto manifest = read_kv(f.manifest_txt);
    CHECK(manifest.count("imperfections.scale_x") == 1);
}
