#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nvmag/inversion.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/spectral.hpp"
#include "nvmag/types.hpp"

namespace nvmag {

// Everything the simulator and pipeline share: physics constants, bias layout,
// line shape, frequency grid, detection/fit/tracking knobs, seeds.
struct RunConfig {
    NvConstants constants;
    BiasFieldConfig bias;
    LineParams line;
    FreqGrid grid;
    DetectConfig detect;
    FitConfig fit;
    TrackConfig track;
    double spectrum_noise_std = 0.0;  // contrast units, per sample
    std::uint64_t seed = 1;

    void validate() const;
};

// key=value file, one pair per line, '#' comments. Unknown keys are rejected;
// values are validated on load. Every key has a default, so an empty file is valid.
RunConfig load_config(const std::string& path);

// Apply one key=value pair; shared by the file loader and CLI overrides.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// The full key set with current values, for manifests.
std::map<std::string, std::string> config_entries(const RunConfig& cfg);

}  // namespace nvmag
