// Exact Euclidean distance transform, ball dilation and boundary extraction.

#pragma once

#include <vector>

#include "cellsynth/volume.hpp"

namespace cellsynth {

struct DistanceField {
    /// Physical distance (spacing applied) of every voxel to the specimen boundary.
    VoxelVolume distance;
    /// Set when the mask is all foreground or all background. Distances are
    /// then measured to the volume border instead.
    bool degenerate = false;
};

/// Exact anisotropic EDT to the opposite class.
///
/// Foreground voxels receive the distance to the nearest background voxel,
/// with the outside of the volume counting as background. Background voxels
/// receive the distance to the nearest foreground voxel. Voxels touching the
/// boundary therefore hold one spacing step. The class of a voxel is not
/// encoded in the result; callers read it from the mask.
[[nodiscard]] DistanceField euclidean_distance_transform(const MaskVolume& mask);

/// Squared distances (physical units) from every voxel to the nearest site.
/// Voxels with no site anywhere get +infinity. Separable lower-envelope
/// algorithm, one 1D pass per axis.
[[nodiscard]] std::vector<double> squared_distance_to_sites(const MaskVolume& sites,
                                                            const Spacing& spacing);

/// Dilation by a Euclidean ball of `radius_voxels` (voxel units, spacing ignored).
[[nodiscard]] MaskVolume dilate(const MaskVolume& mask, int radius_voxels);

/// Foreground voxels with at least one 6-connected background neighbour.
[[nodiscard]] MaskVolume boundary_mask(const MaskVolume& mask);

/// Coordinates of boundary_mask() voxels in storage order.
[[nodiscard]] std::vector<Point3> boundary_voxels(const MaskVolume& mask);

}  // namespace cellsynth
