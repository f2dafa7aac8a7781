// Overlapping patch decomposition and weighted reassembly.

#pragma once

#include <array>
#include <vector>

#include "cellsynth/render.hpp"
#include "cellsynth/volume.hpp"

namespace cellsynth {

struct TilingPlan {
    Dims volume;
    Dims patch{128, 128, 64};
    Dims overlap{30, 30, 15};
    Dims crop{30, 30, 15};
    Dims stride;
    std::array<std::vector<std::size_t>, 3> axis_origins;
    std::vector<Index3> origins;  // x fastest, then y, then z

    /// Half-open retained range [lo, hi) of a patch starting at `origin` along
    /// `axis`. The crop is skipped on sides that touch the volume border.
    [[nodiscard]] std::array<std::size_t, 2> retained(int axis, std::size_t origin) const;
};

/// Regular origins with stride = patch - 2 crop - overlap; the last origin on
/// each axis is moved inward so every patch is full size.
[[nodiscard]] TilingPlan plan_tiling(const Dims& volume, const Dims& patch, const Dims& overlap, const Dims& crop);

/// Separable raised-cosine window, rescaled so the corner holds `floor_epsilon`
/// and the center 1.
[[nodiscard]] VoxelVolume concentric_weights(const Dims& dims, double floor_epsilon = 0.01);

/// Full-patch weights: the concentric window over the cropped interior,
/// `floor_epsilon` on the crop margins (only ever retained at volume borders).
[[nodiscard]] VoxelVolume patch_weights(const TilingPlan& plan, double floor_epsilon = 0.01);

/// Retained-voxel coverage count per voxel.
[[nodiscard]] std::vector<std::uint16_t> coverage_count(const TilingPlan& plan);

/// Runs `generator` on every patch in index order and blends the retained
/// regions by weighted averaging.
[[nodiscard]] VoxelVolume process_volume(const VoxelVolume& structure, const VoxelVolume& conditioning,
                                         const Generator& generator, const TilingPlan& plan,
                                         double floor_epsilon = 0.01);

}  // namespace cellsynth
