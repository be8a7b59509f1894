#include "nvmag/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nvmag/errors.hpp"

namespace nvmag {

namespace {

std::vector<double> moving_average(const std::vector<double>& v, int w) {
    const int n = static_cast<int>(v.size());
    const int half = w / 2;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        double s = 0;
        for (int j = lo; j <= hi; ++j) s += v[j];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

double upper_quantile(std::vector<double> v, double q) {
    const auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

}  // namespace

std::vector<double> detect_peaks(const OdmrSpectrum& spec, int expected, const DetectConfig& cfg) {
    if (expected <= 0) throw ValidationError("detect_peaks: expected count must be positive");
    if (cfg.smooth_window < 1 || cfg.smooth_window % 2 == 0)
        throw ValidationError("detect_peaks: smoothing window must be odd and >= 1");
    if (spec.size() < static_cast<std::size_t>(cfg.smooth_window) + 2)
        throw ValidationError("detect_peaks: spectrum too short");

    const auto s = moving_average(spec.contrast, cfg.smooth_window);
    const double base = upper_quantile(s, 0.90);

    struct Cand {
        double freq, depth;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] < s[i - 1] && s[i] <= s[i + 1]) {
            const double depth = base - s[i];
            if (depth > 0) cands.push_back({spec.freq_at(i), depth});
        }
    }
    if (cands.empty()) throw DetectionError(0, expected);

    const double deepest = std::max_element(cands.begin(), cands.end(), [](auto& a, auto& b) {
                               return a.depth < b.depth;
                           })->depth;
    const double cut = cfg.prominence_frac * deepest;
    std::erase_if(cands, [cut](const Cand& c) { return c.depth < cut; });

    // deepest-first greedy selection, one candidate per min_separation neighborhood
    std::sort(cands.begin(), cands.end(), [](auto& a, auto& b) { return a.depth > b.depth; });
    std::vector<Cand> picked;
    for (const auto& c : cands) {
        const bool clear = std::none_of(picked.begin(), picked.end(), [&](const Cand& p) {
            return std::abs(p.freq - c.freq) < cfg.min_separation_hz;
        });
        if (clear) picked.push_back(c);
    }
    if (static_cast<int>(picked.size()) < expected)
        throw DetectionError(static_cast<int>(picked.size()), expected);
    picked.resize(static_cast<std::size_t>(expected));

    std::vector<double> out(picked.size());
    std::transform(picked.begin(), picked.end(), out.begin(), [](auto& c) { return c.freq; });
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// residual and (optionally) normal equations for the K-dip + baseline model
struct NormalEq {
    Eigen::MatrixXd h;
    Eigen::VectorXd g;
    double ssr = 0.0;
};

double eval_ssr(const OdmrSpectrum& spec, const Eigen::VectorXd& p, int k) {
    double ssr = 0;
    const double b = p[3 * k];
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double f = spec.freq_at(i);
        double y = b;
        for (int j = 0; j < k; ++j) {
            const double d = f - p[j];
            const double w = p[k + j];
            y -= p[2 * k + j] / (1.0 + 4.0 * d * d / (w * w));
        }
        const double r = spec.contrast[i] - y;
        ssr += r * r;
    }
    return ssr;
}

NormalEq build_normal(const OdmrSpectrum& spec, const Eigen::VectorXd& p, int k) {
    const int np = 3 * k + 1;
    NormalEq ne{Eigen::MatrixXd::Zero(np, np), Eigen::VectorXd::Zero(np), 0.0};
    Eigen::VectorXd row(np);
    const double b = p[3 * k];
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double f = spec.freq_at(i);
        double y = b;
        for (int j = 0; j < k; ++j) {
            const double mu = p[j], w = p[k + j], c = p[2 * k + j];
            const double u = 2.0 * (f - mu) / w;
            const double l = 1.0 / (1.0 + u * u);
            y -= c * l;
            const double l2 = l * l;
            row[j] = -c * 4.0 * u * l2 / w;        // d model / d mu
            row[k + j] = -c * 2.0 * u * u * l2 / w;  // d model / d w
            row[2 * k + j] = -l;                    // d model / d c
        }
        row[3 * k] = 1.0;
        const double r = spec.contrast[i] - y;
        ne.ssr += r * r;
        ne.h.selfadjointView<Eigen::Lower>().rankUpdate(row, 1.0);
        ne.g += row * r;
    }
    ne.h = ne.h.selfadjointView<Eigen::Lower>();
    return ne;
}

void check_degenerate(std::span<const double> centers, std::span<const double> widths) {
    std::vector<std::size_t> idx(centers.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return centers[a] < centers[b]; });
    for (std::size_t i = 1; i < idx.size(); ++i) {
        const double gap = centers[idx[i]] - centers[idx[i - 1]];
        const double w = std::min(std::abs(widths[idx[i]]), std::abs(widths[idx[i - 1]]));
        if (gap < w / 10.0)
            throw DegeneracyError("fitted centers separated by " + std::to_string(gap) +
                                  " Hz, below a tenth of the linewidth");
    }
}

}  // namespace

LineFit fit_lorentzians(const OdmrSpectrum& spec, std::span<const double> center_guesses,
                        const FitConfig& cfg) {
    const int k = static_cast<int>(center_guesses.size());
    if (k < 1) throw ValidationError("fit_lorentzians: need at least one center guess");
    const int np = 3 * k + 1;
    if (spec.size() < static_cast<std::size_t>(np) + 1)
        throw ValidationError("fit_lorentzians: spectrum shorter than parameter count");

    {
        std::vector<double> w0(center_guesses.size(), cfg.init_fwhm_hz);
        check_degenerate(center_guesses, w0);
    }

    // init: shared baseline from the upper envelope, depth read off the data
    const double b0 = upper_quantile(spec.contrast, 0.90);
    const double dmin = *std::min_element(spec.contrast.begin(), spec.contrast.end());
    Eigen::VectorXd p(np);
    for (int j = 0; j < k; ++j) {
        const double g = center_guesses[j];
        auto i = static_cast<std::ptrdiff_t>(std::lround((g - spec.f_min_hz) / spec.step_hz));
        i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(spec.size()) - 1);
        p[j] = g;
        p[k + j] = cfg.init_fwhm_hz;
        p[2 * k + j] = std::max(b0 - spec.contrast[static_cast<std::size_t>(i)],
                                0.05 * (b0 - dmin));
    }
    p[3 * k] = b0;

    double lambda = 1e-3;
    double ssr = eval_ssr(spec, p, k);
    int iter = 0;
    bool converged = false;
    for (; iter < cfg.max_iterations && !converged; ++iter) {
        const NormalEq ne = build_normal(spec, p, k);
        ssr = ne.ssr;
        // Marquardt column scaling keeps the system well conditioned across
        // parameter magnitudes spanning 1e9 Hz to 1e-2 contrast.
        Eigen::VectorXd d = ne.h.diagonal().cwiseMax(1e-300).cwiseSqrt();
        const Eigen::MatrixXd hs = d.cwiseInverse().asDiagonal() * ne.h * d.cwiseInverse().asDiagonal();
        const Eigen::VectorXd gs = d.cwiseInverse().asDiagonal() * ne.g;

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = hs;
            damped.diagonal().array() += lambda;
            const Eigen::VectorXd step = d.cwiseInverse().asDiagonal() *
                                         Eigen::VectorXd(damped.ldlt().solve(gs));
            Eigen::VectorXd ptry = p + step;
            bool sane = ptry.allFinite();
            for (int j = 0; sane && j < k; ++j)
                if (std::abs(ptry[k + j]) < spec.step_hz) sane = false;  // width collapse
            const double ssr_try = sane ? eval_ssr(spec, ptry, k)
                                        : std::numeric_limits<double>::infinity();
            if (ssr_try <= ssr) {
                double rel = 0;
                for (int j = 0; j < np; ++j)
                    rel = std::max(rel, std::abs(step[j]) / std::max(std::abs(p[j]), 1e-30));
                p = ptry;
                ssr = ssr_try;
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                if (rel < cfg.rel_tol) converged = true;
            } else {
                lambda *= 3.0;
                if (lambda > 1e14) {
                    std::vector<double> last(p.data(), p.data() + np);
                    throw FitError("lorentzian fit stalled: damping exhausted without progress",
                                   std::move(last),
                                   std::sqrt(ssr / static_cast<double>(spec.size())));
                }
            }
        }
    }
    if (!converged) {
        std::vector<double> last(p.data(), p.data() + np);
        throw FitError("lorentzian fit did not converge in " +
                       std::to_string(cfg.max_iterations) + " iterations",
                       std::move(last), std::sqrt(ssr / static_cast<double>(spec.size())));
    }

    {
        std::vector<double> mus(p.data(), p.data() + k);
        std::vector<double> ws(p.data() + k, p.data() + 2 * k);
        check_degenerate(mus, ws);
    }

    // covariance of the converged fit for the center uncertainties
    const NormalEq ne = build_normal(spec, p, k);
    const double dof = static_cast<double>(spec.size()) - static_cast<double>(np);
    const double s2 = dof > 0 ? ne.ssr / dof : 0.0;
    Eigen::VectorXd d = ne.h.diagonal().cwiseMax(1e-300).cwiseSqrt();
    const Eigen::MatrixXd hs = d.cwiseInverse().asDiagonal() * ne.h * d.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd hinv_scaled = hs.ldlt().solve(Eigen::MatrixXd::Identity(np, np));

    LineFit fit;
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return p[a] < p[b]; });
    for (int j : order) {
        fit.center_hz.push_back(p[j]);
        const double var = s2 * hinv_scaled(j, j) / (d[j] * d[j]);
        fit.sigma_hz.push_back(var > 0 ? std::sqrt(var) : 0.0);
        fit.fwhm_hz.push_back(std::abs(p[k + j]));
        fit.contrast.push_back(p[2 * k + j]);
    }
    fit.baseline = p[3 * k];
    fit.residual_rms = std::sqrt(ne.ssr / static_cast<double>(spec.size()));
    fit.iterations = iter;
    return fit;
}

OdmrSpectrum window(const OdmrSpectrum& spec, double lo_hz, double hi_hz) {
    if (hi_hz <= lo_hz) throw ValidationError("window: need hi > lo");
    const auto n = static_cast<std::ptrdiff_t>(spec.size());
    auto first = static_cast<std::ptrdiff_t>(std::ceil((lo_hz - spec.f_min_hz) / spec.step_hz));
    auto last = static_cast<std::ptrdiff_t>(std::floor((hi_hz - spec.f_min_hz) / spec.step_hz));
    first = std::clamp<std::ptrdiff_t>(first, 0, n);
    last = std::clamp<std::ptrdiff_t>(last, -1, n - 1);
    OdmrSpectrum out;
    out.frame = spec.frame;
    out.t_s = spec.t_s;
    out.step_hz = spec.step_hz;
    out.f_min_hz = spec.f_min_hz + spec.step_hz * static_cast<double>(first);
    if (last >= first)
        out.contrast.assign(spec.contrast.begin() + first, spec.contrast.begin() + last + 1);
    return out;
}

namespace {

int axis_of_line(const PeakSet& ps, int line) {
    for (int a = 0; a < 4; ++a)
        if (ps.pairing[a].first == line || ps.pairing[a].second == line) return a;
    throw ValidationError("peak set pairing does not cover line " + std::to_string(line));
}

}  // namespace

PeakSet track_peaks(const PeakSet& prev, const OdmrSpectrum& spec, const TrackConfig& cfg) {
    struct Refit {
        double center, sigma, fwhm, contrast, baseline, rms;
    };
    std::array<Refit, 8> refit;

    // Lines whose windows overlap are refit jointly on the merged span; a
    // separate fit per line would leave its neighbours' tails in the window
    // data but not in the model, biasing the centers. Each merged fit is
    // fit_lorentzians restricted to that window. prev centers are ascending,
    // so clusters are contiguous index ranges.
    std::array<double, 8> half;
    for (int j = 0; j < 8; ++j) half[j] = cfg.window_fwhm * prev.fwhm_hz[j];

    for (int lo = 0; lo < 8;) {
        int hi = lo;
        while (hi + 1 < 8 &&
               prev.center_hz[hi + 1] - half[hi + 1] <= prev.center_hz[hi] + half[hi])
            ++hi;

        const double f_lo = prev.center_hz[lo] - half[lo];
        const double f_hi = prev.center_hz[hi] + half[hi];
        const OdmrSpectrum win = window(spec, f_lo, f_hi);
        if (win.size() < 16)
            throw TrackingLossError(axis_of_line(prev, lo), "window left the spectrum grid");

        std::vector<double> guesses(prev.center_hz.begin() + lo, prev.center_hz.begin() + hi + 1);
        LineFit f;
        try {
            f = fit_lorentzians(win, guesses, cfg.fit);
        } catch (const NumericalError& e) {
            throw TrackingLossError(axis_of_line(prev, lo), e.what());
        }

        // fits come back ascending like the cluster's previous centers
        for (int line = lo; line <= hi; ++line) {
            const auto k = static_cast<std::size_t>(line - lo);
            const int axis = axis_of_line(prev, line);
            if (std::abs(f.center_hz[k] - prev.center_hz[line]) > half[line])
                throw TrackingLossError(axis, "refit center left the tracking window");
            if (f.contrast[k] < cfg.min_depth_frac * prev.contrast[line])
                throw TrackingLossError(axis, "dip depth collapsed in the tracking window");
            refit[line] = {f.center_hz[k], f.sigma_hz[k], f.fwhm_hz[k],
                           f.contrast[k], f.baseline,    f.residual_rms};
        }
        lo = hi + 1;
    }

    // keep centers ascending, remapping the carried-over axis labels
    std::array<int, 8> order;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return refit[a].center < refit[b].center; });
    std::array<int, 8> newpos{};
    for (int j = 0; j < 8; ++j) newpos[order[j]] = j;

    PeakSet out;
    double base = 0, rms2 = 0;
    for (int j = 0; j < 8; ++j) {
        const Refit& r = refit[order[j]];
        out.center_hz[j] = r.center;
        out.sigma_hz[j] = r.sigma;
        out.fwhm_hz[j] = r.fwhm;
        out.contrast[j] = r.contrast;
        base += r.baseline;
        rms2 += r.rms * r.rms;
    }
    for (int a = 0; a < 4; ++a)
        out.pairing[a] = {newpos[prev.pairing[a].first], newpos[prev.pairing[a].second]};
    out.baseline = base / 8.0;
    out.fit_quality = std::sqrt(rms2 / 8.0);
    return out;
}

PeakSet pair_peaks(const LineFit& fitted, const PeakSet& predicted) {
    if (fitted.center_hz.size() != 8)
        throw ValidationError("pair_peaks: need exactly 8 fitted lines, got " +
                              std::to_string(fitted.center_hz.size()));
    std::array<int, 8> assign{};  // fitted index (ascending) -> predicted line index
    std::array<int, 8> used{};
    for (int i = 0; i < 8; ++i) {
        int best = 0;
        for (int j = 1; j < 8; ++j)
            if (std::abs(fitted.center_hz[static_cast<std::size_t>(i)] - predicted.center_hz[j]) <
                std::abs(fitted.center_hz[static_cast<std::size_t>(i)] - predicted.center_hz[best]))
                best = j;
        if (used[best]++)
            throw PairingError("two fitted lines map to the same predicted resonance near " +
                               std::to_string(predicted.center_hz[best]) + " Hz");
        assign[i] = best;
    }
    std::array<int, 8> inverse{};  // predicted line -> fitted index
    for (int i = 0; i < 8; ++i) inverse[assign[i]] = i;

    PeakSet out;
    for (int i = 0; i < 8; ++i) {
        out.center_hz[i] = fitted.center_hz[static_cast<std::size_t>(i)];
        out.sigma_hz[i] = fitted.sigma_hz[static_cast<std::size_t>(i)];
        out.fwhm_hz[i] = fitted.fwhm_hz[static_cast<std::size_t>(i)];
        out.contrast[i] = fitted.contrast[static_cast<std::size_t>(i)];
    }
    out.baseline = fitted.baseline;
    out.fit_quality = fitted.residual_rms;
    for (int a = 0; a < 4; ++a)
        out.pairing[a] = {inverse[predicted.pairing[a].first],
                          inverse[predicted.pairing[a].second]};
    return out;
}

}  // namespace nvmag
