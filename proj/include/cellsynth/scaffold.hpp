// Annotation scenes: organism foreground, layer-wise cell seeds, weighted
// Voronoi tessellation into instances, and membrane extraction.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "cellsynth/shapes.hpp"
#include "cellsynth/volume.hpp"

namespace cellsynth {

struct CellSeed {
    Point3 position;  // voxel coordinates
    double weight = 1.0;
    int layer = 0;
};

struct RadiusPrior {
    double mean = 8.0;
    double sd = 1.0;
};

struct PlacementOptions {
    double shell_factor = 2.0;    // shell thickness in mean radii
    double spacing_factor = 1.5;  // minimum seed distance in mean radii
    double weight_min = 0.8;
    double weight_max = 1.25;
};

struct LayerPlacement {
    std::vector<CellSeed> seeds;
    int layers = 0;               // shells that received at least one seed
    double shell_thickness = 0.0;
    std::string warning;          // non-empty when no seed could be placed
};

/// Seeds shells of the interior distance field from the surface inward.
/// Shell k holds depths [k t, (k+1) t), the innermost shell also takes the
/// remainder. Within a shell candidates are visited in random order and kept
/// if no earlier seed lies closer than the minimum spacing. Placement stops
/// at the first shell that receives no seed.
[[nodiscard]] LayerPlacement place_cells_layerwise(const MaskVolume& foreground, const RadiusPrior& prior,
                                                   std::mt19937_64& rng, const PlacementOptions& options = {});

/// Labels each foreground voxel with 1 + argmin_j |x - seed_j| / weight_j
/// (physical distances). Ties go to the lowest seed index.
[[nodiscard]] LabelVolume weighted_tessellation(const MaskVolume& foreground, const std::vector<CellSeed>& seeds);

/// Foreground voxels 6-adjacent to a different label (background and the
/// volume outside included).
[[nodiscard]] MaskVolume membrane_base(const LabelVolume& instances);

/// membrane_base() thickened by (thickness - 1) 6-connected dilation steps
/// that stay inside the foreground.
[[nodiscard]] MaskVolume extract_membranes(const LabelVolume& instances, int thickness_voxels);

struct ShapeModelSource {
    ShapeModel model;
    std::size_t n_modes = 0;
    std::optional<Point3> center;  // defaults to the volume center
};

using OrganismSource = std::variant<ShapeModelSource, SHShape, std::filesystem::path>;

/// Organism foreground from a shape model draw, an SH shape, or a mask file.
[[nodiscard]] MaskVolume generate_organism_shape(const OrganismSource& source, const Dims& dims,
                                                 const Spacing& spacing, std::mt19937_64& rng);

struct NucleiOptions {
    RadiusPrior radius{4.5, 0.5};
    double gamma = 5.0;
    int max_order = 6;
};

struct SceneOptions {
    RadiusPrior cell_radius{};
    PlacementOptions placement{};
    int membrane_thickness = 1;
    std::optional<NucleiOptions> nuclei = NucleiOptions{};
};

struct Scene {
    MaskVolume foreground;
    std::vector<CellSeed> seeds;
    LabelVolume instances;
    MaskVolume membranes;
    std::optional<MaskVolume> nuclei;
    std::vector<std::uint32_t> empty_cells;  // labels that received no voxel
    int layers = 0;
};

/// Seeds, tessellates and extracts membranes (and optional SH nuclei, each
/// restricted to its own cell) inside `foreground`.
[[nodiscard]] Scene build_scene(MaskVolume foreground, const SceneOptions& options, std::mt19937_64& rng);

}  // namespace cellsynth
