#pragma once

#include <array>

#include "nvmag/nv_physics.hpp"
#include "nvmag/types.hpp"

namespace nvmag {

// Applied bias that separates the four axis doublets and fixes projection signs.
// Defaults give |projections| of about 435, 315, 195 and 75 uT: every axis
// dominates a 60 uT external field and adjacent magnitudes sit ~120 uT apart,
// so nearest-prediction pairing stays unambiguous at full external range.
struct BiasFieldConfig {
    Vec3 field_nt{103900.0, 207800.0, 441700.0};
    Vec3 temp_coeff_nt_per_k{0.0, 0.0, 0.0};
    double ref_temp_k = 298.15;
    double separation_margin_nt = 110e3;  // min gap between |axis projections|
    double max_external_nt = 60e3;

    Vec3 at(double temp_k) const {
        return field_nt + temp_coeff_nt_per_k * (temp_k - ref_temp_k);
    }
    // distinct projections and sign dominance over the external budget
    void validate(const NvConstants& c = {}) const;
};

// Signed axis projections from the pair splittings:
//   p_i = sign(bias . n_i) * (f_i+ - f_i-) / (2 gamma),  nT.
// Throws ValidationError when a projection exceeds the first-order validity limit.
std::array<double, 4> splittings_to_projections(const PeakSet& peaks,
                                                const BiasFieldConfig& bias,
                                                const NvConstants& c = {});

struct FieldSolution {
    Vec3 field_nt;       // least-squares field
    double residual_nt;  // |N b - p|_2, consistency of the 4 projections
};

// Pseudoinverse solve; for the canonical axes pinv(N) = (3/4) N^T.
FieldSolution projections_to_field(const std::array<double, 4>& proj_nt,
                                   const NvConstants& c = {});

// T = t0 + (mean pair midpoint - d0) / beta. Throws ValidationError outside range.
double common_mode_to_temperature(const PeakSet& peaks, const NvConstants& c = {});

// Full frame: temperature from the common mode, field from the splittings,
// temperature-adjusted bias subtracted in field space, per-axis sigmas
// propagated through the pseudoinverse rows.
MagReading invert_frame(const PeakSet& peaks, double t_s, const BiasFieldConfig& bias,
                        const NvConstants& c = {});

}  // namespace nvmag
