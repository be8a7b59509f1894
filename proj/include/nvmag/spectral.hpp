#pragma once

#include <span>
#include <vector>

#include "nvmag/types.hpp"

namespace nvmag {

struct DetectConfig {
    int smooth_window = 5;            // moving-average width, odd
    double prominence_frac = 0.25;    // of the deepest dip
    double min_separation_hz = 1e6;   // dedupe radius for candidate minima
};

// Frequencies of the `expected` most prominent local minima, ascending.
// Throws DetectionError when fewer qualify.
std::vector<double> detect_peaks(const OdmrSpectrum& spec, int expected,
                                 const DetectConfig& cfg = {});

struct FitConfig {
    int max_iterations = 200;
    double rel_tol = 1e-10;       // max relative parameter step at convergence
    double init_fwhm_hz = 1e6;
};

// Joint Levenberg-Marquardt fit result: K Lorentzian dips plus one shared baseline.
struct LineFit {
    std::vector<double> center_hz;   // ascending
    std::vector<double> sigma_hz;    // 1-sigma center uncertainty
    std::vector<double> fwhm_hz;
    std::vector<double> contrast;
    double baseline = 0.0;
    double residual_rms = 0.0;       // contrast units
    int iterations = 0;
};

// Damped Gauss-Newton with analytic Jacobian. Converges when every parameter's
// relative step drops below rel_tol; throws FitError after max_iterations and
// DegeneracyError when centers approach within a tenth of a linewidth.
LineFit fit_lorentzians(const OdmrSpectrum& spec, std::span<const double> center_guesses,
                        const FitConfig& cfg = {});

// Sub-spectrum covering [lo_hz, hi_hz] on the same grid.
OdmrSpectrum window(const OdmrSpectrum& spec, double lo_hz, double hi_hz);

struct TrackConfig {
    double window_fwhm = 5.0;        // half-width in units of the previous fwhm
    double min_depth_frac = 0.25;    // loss when the refit depth collapses below this
    FitConfig fit;
};

// Windowed refit around the previous centers; axis pairing labels carry over.
// Each window is handed to fit_lorentzians with every previous line inside it,
// so a window refit is exactly a restricted joint fit. Throws TrackingLossError
// naming the axis when a line leaves its window or its dip collapses.
PeakSet track_peaks(const PeakSet& prev, const OdmrSpectrum& spec, const TrackConfig& cfg = {});

// Assign fitted lines to the axis pairing of a model-predicted PeakSet by
// nearest predicted center. Throws PairingError on collisions.
PeakSet pair_peaks(const LineFit& fitted, const PeakSet& predicted);

}  // namespace nvmag
