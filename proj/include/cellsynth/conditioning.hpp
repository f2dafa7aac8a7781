// Positional conditioning: a signed, tanh-saturated distance to the
// specimen boundary.

#pragma once

#include <span>
#include <vector>

#include "cellsynth/volume.hpp"

namespace cellsynth {

struct ConditioningMap {
    VoxelVolume map;       // values strictly inside (-1, 1)
    double alpha = 100.0;  // foreground distance scale
    double beta = 100.0;   // background distance scale
    bool degenerate = false;
};

/// tanh(dist/alpha) on foreground, tanh(-dist/beta) on background. Values are
/// kept strictly inside (-1, 1) even where tanh rounds to 1 in float.
[[nodiscard]] ConditioningMap positional_map(const MaskVolume& foreground, double alpha, double beta);

/// One map per alpha from a single distance transform; the background half is
/// shared.
[[nodiscard]] std::vector<ConditioningMap> quality_sweep(const MaskVolume& foreground,
                                                         std::span<const double> alphas, double beta);

/// All-zero map: the neutral input for generators that ignore position.
[[nodiscard]] ConditioningMap neutral_conditioning(const Dims& dims, const Spacing& spacing = {});

}  // namespace cellsynth
