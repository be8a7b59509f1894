#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nvmag/errors.hpp"
#include "nvmag/inversion.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/spectral.hpp"

using namespace nvmag;

namespace {

// eight hand-placed lines, at least `sep_hz` apart, synthesized noiselessly
PeakSet spread_peaks(double first_hz, double sep_hz) {
    PeakSet p;
    for (int i = 0; i < 8; ++i) p.center_hz[i] = first_hz + sep_hz * i;
    p.pairing = {{{0, 1}, {2, 3}, {4, 5}, {6, 7}}};
    return p;
}

OdmrSpectrum chamber_spectrum(double noise, std::uint64_t seed) {
    const BiasFieldConfig bias;
    const auto res = forward_resonances(bias.at(298.15), 298.15);
    return synthesize_spectrum(to_peak_set(res), {}, {}, noise, seed);
}

}  // namespace

TEST_CASE("detection finds well-separated noiseless peaks within one linewidth") {
    LineParams line;
    line.fwhm_hz = 0.8e6;
    const PeakSet truth = spread_peaks(2.8545e9, 4.0e6);  // 5 fwhm apart
    const OdmrSpectrum spec = synthesize_spectrum(truth, line, {}, 0.0, 1);
    const auto found = detect_peaks(spec, 8);
    REQUIRE(found.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(found[i] - truth.center_hz[i]) < line.fwhm_hz);
        if (i) CHECK(found[i] > found[i - 1]);
    }
}

TEST_CASE("detection fails on a flat spectrum reporting zero found") {
    OdmrSpectrum flat;
    flat.f_min_hz = 2.85e9;
    flat.step_hz = 4e3;
    flat.contrast.assign(2001, 1.0);
    try {
        (void)detect_peaks(flat, 8);
        FAIL("expected DetectionError");
    } catch (const DetectionError& e) {
        CHECK(e.found == 0);
        CHECK(e.expected == 8);
    }
}

TEST_CASE("detection under 10 percent contrast noise succeeds in at least 95 of 100 trials") {
    const BiasFieldConfig bias;
    const PeakSet truth = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const OdmrSpectrum spec = chamber_spectrum(0.002, seed);
        try {
            const auto found = detect_peaks(spec, 8);
            bool all = found.size() == 8;
            for (int i = 0; all && i < 8; ++i)
                all = std::abs(found[i] - truth.center_hz[i]) < 2.0e6;
            ok += all;
        } catch (const DetectionError&) {
        }
    }
    CHECK(ok >= 95);
}

TEST_CASE("single-line fit recovers the center from a 0.3 fwhm-off guess") {
    PeakSet one;
    for (int i = 0; i < 8; ++i) one.center_hz[i] = 2.87e9;
    one.pairing = {{{0, 1}, {2, 3}, {4, 5}, {6, 7}}};
    // synthesize a single dip by collapsing all eight onto one center, depth 8x
    LineParams line;
    line.contrast = 0.0025;
    const OdmrSpectrum spec = synthesize_spectrum(one, line, {}, 0.0, 1);
    const std::vector<double> guess{2.87e9 + 0.3e6};
    const LineFit f = fit_lorentzians(spec, guess);
    REQUIRE(f.center_hz.size() == 1);
    CHECK(std::abs(f.center_hz[0] - 2.87e9) < 1e3);
}

TEST_CASE("noiseless eight-line fit is exact to a kilohertz with tiny residual") {
    const BiasFieldConfig bias;
    const PeakSet truth = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    const auto guesses = detect_peaks(spec, 8);
    const LineFit f = fit_lorentzians(spec, guesses);
    REQUIRE(f.center_hz.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(f.center_hz[i] - truth.center_hz[i]) < 1e3);
        CHECK(f.fwhm_hz[i] == doctest::Approx(1e6).epsilon(1e-4));
        CHECK(f.contrast[i] == doctest::Approx(0.02).epsilon(1e-4));
    }
    CHECK(f.baseline == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.residual_rms < 1e-10);
}

TEST_CASE("center estimates are unbiased under symmetric noise") {
    const BiasFieldConfig bias;
    const PeakSet truth = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const auto clean = chamber_spectrum(0.0, 1);
    const auto guesses = detect_peaks(clean, 8);

    std::array<double, 8> err_sum{};
    double sigma_sum = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        const OdmrSpectrum spec = chamber_spectrum(0.002, 1000 + std::uint64_t(r));
        const LineFit f = fit_lorentzians(spec, guesses);
        for (int i = 0; i < 8; ++i) {
            err_sum[i] += f.center_hz[i] - truth.center_hz[i];
            sigma_sum += f.sigma_hz[i];
        }
    }
    const double mean_sigma = sigma_sum / (8.0 * runs);
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(err_sum[i] / runs) < mean_sigma / 5.0);
}

TEST_CASE("fit reports non-convergence with its last iterate") {
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    auto guesses = detect_peaks(spec, 8);
    for (auto& g : guesses) g += 2e6;
    FitConfig cfg;
    cfg.max_iterations = 2;
    try {
        (void)fit_lorentzians(spec, guesses, cfg);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.last_params.size() == 8 * 3 + 1);
        CHECK(e.residual_rms > 0);
    }
}

TEST_CASE("centers merging within a tenth of a linewidth raise a degeneracy error") {
    LineParams line;
    const PeakSet truth = spread_peaks(2.854e9, 4.0e6);
    const OdmrSpectrum spec = synthesize_spectrum(truth, line, {}, 0.0, 1);
    const std::vector<double> guesses{2.860e9, 2.860e9 + line.fwhm_hz / 20.0};
    CHECK_THROWS_AS((void)fit_lorentzians(spec, guesses), DegeneracyError);
}

TEST_CASE("window cuts the grid without resampling") {
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    const OdmrSpectrum win = window(spec, 2.862e9, 2.8655e9);
    REQUIRE(win.size() > 0);
    CHECK(win.step_hz == spec.step_hz);
    CHECK(win.f_min_hz >= 2.862e9);
    CHECK(win.freq_at(win.size() - 1) <= 2.8655e9);
    const auto off = std::llround((win.f_min_hz - spec.f_min_hz) / spec.step_hz);
    for (std::size_t i = 0; i < win.size(); ++i)
        CHECK(win.contrast[i] == spec.contrast[std::size_t(off) + i]);
}

TEST_CASE("tracking an unchanged spectrum is deterministic and stationary") {
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    const auto guesses = detect_peaks(spec, 8);
    const LineFit f = fit_lorentzians(spec, guesses);
    const BiasFieldConfig bias;
    const PeakSet predicted = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const PeakSet first = pair_peaks(f, predicted);

    const PeakSet a = track_peaks(first, spec);
    const PeakSet again = track_peaks(first, spec);
    CHECK(again.center_hz == a.center_hz);
    CHECK(again.fwhm_hz == a.fwhm_hz);
    CHECK(again.pairing == a.pairing);

    // a second identical frame reproduces the set; 1 Hz is 0.04 nT equivalent
    const PeakSet b = track_peaks(a, spec);
    CHECK(b.pairing == a.pairing);
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(b.center_hz[i] - a.center_hz[i]) < 1.0);
}

TEST_CASE("tracking equals a joint fit restricted to the merged window") {
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    const BiasFieldConfig bias;
    const PeakSet predicted = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const PeakSet first = pair_peaks(fit_lorentzians(spec, detect_peaks(spec, 8)), predicted);

    // at default parameters all eight windows chain into one span
    const TrackConfig cfg;
    const double lo = first.center_hz[0] - cfg.window_fwhm * first.fwhm_hz[0];
    const double hi = first.center_hz[7] + cfg.window_fwhm * first.fwhm_hz[7];
    const std::vector<double> prev(first.center_hz.begin(), first.center_hz.end());
    const LineFit restricted = fit_lorentzians(window(spec, lo, hi), prev, cfg.fit);

    const PeakSet tracked = track_peaks(first, spec, cfg);
    for (int i = 0; i < 8; ++i) {
        CHECK(tracked.center_hz[i] == restricted.center_hz[i]);
        CHECK(tracked.fwhm_hz[i] == restricted.fwhm_hz[i]);
        CHECK(tracked.contrast[i] == restricted.contrast[i]);
    }
}

TEST_CASE("tracking follows a ramp of one linewidth per frame within 2 kHz") {
    LineParams line;
    line.fwhm_hz = 0.2e6;
    FreqGrid grid;
    grid.step_hz = 40e3;  // fwhm/5
    TrackConfig cfg;

    PeakSet truth = spread_peaks(2.853e9, 3.0e6);
    OdmrSpectrum spec = synthesize_spectrum(truth, line, grid, 0.0, 1);
    auto found = detect_peaks(spec, 8);
    PeakSet cur = pair_peaks(fit_lorentzians(spec, found), truth);

    for (int frame = 1; frame <= 50; ++frame) {
        for (int i = 0; i < 8; ++i) truth.center_hz[i] += line.fwhm_hz;
        spec = synthesize_spectrum(truth, line, grid, 0.0, 1);
        cur = track_peaks(cur, spec, cfg);
        for (int i = 0; i < 8; ++i)
            CHECK(std::abs(cur.center_hz[i] - truth.center_hz[i]) < 2e3);
    }
}

TEST_CASE("a ten-linewidth step breaks tracking with the axis named") {
    LineParams line;
    line.fwhm_hz = 0.2e6;
    FreqGrid grid;
    grid.step_hz = 40e3;
    PeakSet truth = spread_peaks(2.856e9, 3.0e6);
    const OdmrSpectrum spec = synthesize_spectrum(truth, line, grid, 0.0, 1);
    const PeakSet first = pair_peaks(fit_lorentzians(spec, detect_peaks(spec, 8)), truth);

    for (int i = 0; i < 8; ++i) truth.center_hz[i] += 10.0 * line.fwhm_hz;
    const OdmrSpectrum moved = synthesize_spectrum(truth, line, grid, 0.0, 1);
    try {
        (void)track_peaks(first, moved);
        FAIL("expected TrackingLossError");
    } catch (const TrackingLossError& e) {
        CHECK(e.axis >= 0);
        CHECK(e.axis < 4);
    }
}

TEST_CASE("a collapsing dip breaks tracking") {
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    const BiasFieldConfig bias;
    const PeakSet predicted = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const PeakSet first = pair_peaks(fit_lorentzians(spec, detect_peaks(spec, 8)), predicted);

    LineParams faint;
    faint.contrast = 0.02 * 0.05;  // 5% of the previous depth
    const auto res = forward_resonances(bias.at(298.15), 298.15);
    const OdmrSpectrum dim = synthesize_spectrum(to_peak_set(res), faint, {}, 0.0, 1);
    CHECK_THROWS_AS((void)track_peaks(first, dim), TrackingLossError);
}

TEST_CASE("pairing is the identity on the predicted set and tolerates a uniform shift") {
    const BiasFieldConfig bias;
    const PeakSet predicted = to_peak_set(forward_resonances(bias.at(298.15), 298.15));

    LineFit exact;
    exact.center_hz.assign(predicted.center_hz.begin(), predicted.center_hz.end());
    exact.sigma_hz.assign(8, 100.0);
    exact.fwhm_hz.assign(8, 1e6);
    exact.contrast.assign(8, 0.02);
    exact.baseline = 1.0;
    const PeakSet same = pair_peaks(exact, predicted);
    CHECK(same.pairing == predicted.pairing);

    LineFit shifted = exact;
    for (auto& c : shifted.center_hz) c += 100e3;
    const PeakSet moved = pair_peaks(shifted, predicted);
    CHECK(moved.pairing == predicted.pairing);
}

TEST_CASE("pairing is independent of guess ordering") {
    const BiasFieldConfig bias;
    const PeakSet predicted = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    const OdmrSpectrum spec = chamber_spectrum(0.0, 1);
    auto guesses = detect_peaks(spec, 8);
    const PeakSet a = pair_peaks(fit_lorentzians(spec, guesses), predicted);
    std::reverse(guesses.begin(), guesses.end());
    std::swap(guesses[0], guesses[3]);
    const PeakSet b = pair_peaks(fit_lorentzians(spec, guesses), predicted);
    CHECK(a.pairing == b.pairing);
    CHECK(a.center_hz == b.center_hz);
}

TEST_CASE("two lines crowding one prediction raise a pairing error") {
    const BiasFieldConfig bias;
    const PeakSet predicted = to_peak_set(forward_resonances(bias.at(298.15), 298.15));
    LineFit fit;
    // both measured centers hug predicted line 0
    fit.center_hz = {predicted.center_hz[0] - 5e3, predicted.center_hz[0] + 5e3};
    for (int i = 2; i < 8; ++i) fit.center_hz.push_back(predicted.center_hz[i]);
    std::sort(fit.center_hz.begin(), fit.center_hz.end());
    fit.sigma_hz.assign(8, 100.0);
    fit.fwhm_hz.assign(8, 1e6);
    fit.contrast.assign(8, 0.02);
    fit.baseline = 1.0;
    CHECK_THROWS_AS((void)pair_peaks(fit, predicted), PairingError);
}
