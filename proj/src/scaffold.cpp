#include "cellsynth/scaffold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "cellsynth/io.hpp"
#include "cellsynth/morphology.hpp"

namespace cellsynth {
namespace {

constexpr int kFace[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

Point3 physical(const Point3& p, const Spacing& s) {
    return {p.x * s.sx, p.y * s.sy, p.z * s.sz};
}

// Uniform hash grid over physical space for minimum-distance queries.
class SeedGrid {
public:
    explicit SeedGrid(double cell) : cell_(cell) {}

    [[nodiscard]] bool admissible(const Point3& p, double min_dist) const {
        const auto k = key(p);
        const double lim = min_dist * min_dist;
        for (long dz = -1; dz <= 1; ++dz) {
            for (long dy = -1; dy <= 1; ++dy) {
                for (long dx = -1; dx <= 1; ++dx) {
                    const auto it = cells_.find(pack(k[0] + dx, k[1] + dy, k[2] + dz));
                    if (it == cells_.end()) {
                        continue;
                    }
                    for (const auto& q : it->second) {
                        const auto d = p - q;
                        if (d.dot(d) < lim) {
                            return false;
                        }
                    }
                }
            }
        }
        return true;
    }

    void insert(const Point3& p) {
        const auto k = key(p);
        cells_[pack(k[0], k[1], k[2])].push_back(p);
    }

private:
    [[nodiscard]] std::array<long, 3> key(const Point3& p) const {
        return {static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_)),
                static_cast<long>(std::floor(p.z / cell_))};
    }
    static std::uint64_t pack(long x, long y, long z) {
        constexpr long off = 1L << 20;
        return (static_cast<std::uint64_t>(x + off) << 42) | (static_cast<std::uint64_t>(y + off) << 21) |
               static_cast<std::uint64_t>(z + off);
    }

    double cell_;
    std::unordered_map<std::uint64_t, std::vector<Point3>> cells_;
};

bool differs_from_neighbour(const LabelVolume& labels, std::size_t x, std::size_t y, std::size_t z) {
    const auto own = labels(x, y, z);
    for (const auto& o : kFace) {
        const Index3 n{static_cast<std::ptrdiff_t>(x) + o[0], static_cast<std::ptrdiff_t>(y) + o[1],
                       static_cast<std::ptrdiff_t>(z) + o[2]};
        if (!labels.contains(n) || labels.at(n) != own) {
            return true;
        }
    }
    return false;
}

}  // namespace

LayerPlacement place_cells_layerwise(const MaskVolume& foreground, const RadiusPrior& prior, std::mt19937_64& rng,
                                     const PlacementOptions& options) {
    if (!(prior.mean > 0.0) || !(prior.sd >= 0.0)) {
        throw ParameterError("cell radius prior needs mean > 0 and sd >= 0");
    }
    if (!(options.shell_factor > 0.0) || !(options.spacing_factor > 0.0) || !(options.weight_min > 0.0) ||
        options.weight_max < options.weight_min) {
        throw ParameterError("invalid placement options");
    }

    LayerPlacement out;
    out.shell_thickness = options.shell_factor * prior.mean;
    if (count_foreground(foreground) == 0) {
        out.warning = "foreground is empty; no cells placed";
        return out;
    }

    const auto edt = euclidean_distance_transform(foreground).distance;
    double max_depth = 0.0;
    for (std::size_t i = 0; i < foreground.size(); ++i) {
        if (foreground[i]) {
            max_depth = std::max(max_depth, static_cast<double>(edt[i]));
        }
    }
    const int n_shells = std::max(1, static_cast<int>(std::floor(max_depth / out.shell_thickness)));

    std::vector<std::vector<std::size_t>> shells(static_cast<std::size_t>(n_shells));
    for (std::size_t i = 0; i < foreground.size(); ++i) {
        if (foreground[i]) {
            const int k = std::min(static_cast<int>(std::floor(edt[i] / out.shell_thickness)), n_shells - 1);
            shells[static_cast<std::size_t>(k)].push_back(i);
        }
    }

    const double min_dist = options.spacing_factor * prior.mean;
    const auto& sp = foreground.spacing();
    SeedGrid grid(min_dist);
    std::uniform_real_distribution<double> weight(options.weight_min, options.weight_max);

    for (int k = 0; k < n_shells; ++k) {
        auto& cand = shells[static_cast<std::size_t>(k)];
        std::shuffle(cand.begin(), cand.end(), rng);
        std::size_t placed = 0;
        for (const auto i : cand) {
            const auto c = foreground.coord(i);
            const Point3 p{static_cast<double>(c.x), static_cast<double>(c.y), static_cast<double>(c.z)};
            const auto q = physical(p, sp);
            if (!grid.admissible(q, min_dist)) {
                continue;
            }
            grid.insert(q);
            out.seeds.push_back({p, weight(rng), k});
            ++placed;
        }
        if (placed == 0) {
            break;
        }
        out.layers = k + 1;
    }
    return out;
}

LabelVolume weighted_tessellation(const MaskVolume& foreground, const std::vector<CellSeed>& seeds) {
    if (seeds.empty()) {
        throw ParameterError("tessellation needs at least one seed");
    }
    const auto& sp = foreground.spacing();
    std::vector<Point3> pos;
    pos.reserve(seeds.size());
    for (std::size_t j = 0; j < seeds.size(); ++j) {
        const auto& s = seeds[j];
        if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
            throw ParameterError("seed " + std::to_string(j) + " has a non-positive weight");
        }
        const Index3 v{static_cast<std::ptrdiff_t>(std::lround(s.position.x)),
                       static_cast<std::ptrdiff_t>(std::lround(s.position.y)),
                       static_cast<std::ptrdiff_t>(std::lround(s.position.z))};
        if (!s.position.finite() || !foreground.contains(v) || !foreground.at(v)) {
            throw ParameterError("seed " + std::to_string(j) + " lies outside the foreground");
        }
        pos.push_back(physical(s.position, sp));
    }

    // Blocks of kBlock^3 voxels keep only seeds whose smallest possible score
    // over the block does not exceed the best guaranteed score. The bounds use
    // the same rounded coordinate differences as the per-voxel scores, so the
    // argmin and its tie order are unchanged.
    constexpr std::size_t kBlock = 8;
    const auto& d = foreground.dims();
    LabelVolume labels(d, sp);
    std::vector<std::uint32_t> cand;
    std::vector<double> lower(pos.size());
    for (std::size_t bz = 0; bz < d.nz; bz += kBlock) {
        for (std::size_t by = 0; by < d.ny; by += kBlock) {
            for (std::size_t bx = 0; bx < d.nx; bx += kBlock) {
                const std::size_t ex = std::min(bx + kBlock, d.nx), ey = std::min(by + kBlock, d.ny),
                                  ez = std::min(bz + kBlock, d.nz);
                bool any = false;
                for (std::size_t z = bz; z < ez && !any; ++z)
                    for (std::size_t y = by; y < ey && !any; ++y)
                        for (std::size_t x = bx; x < ex && !any; ++x) any = foreground(x, y, z) != 0;
                if (!any) {
                    continue;
                }
                const Point3 lo = physical({double(bx), double(by), double(bz)}, sp);
                const Point3 hi = physical({double(ex - 1), double(ey - 1), double(ez - 1)}, sp);
                double best_upper = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < pos.size(); ++j) {
                    double near2 = 0.0, far2 = 0.0;
                    for (int a = 0; a < 3; ++a) {
                        const double p = pos[j][a];
                        const double n = p < lo[a] ? lo[a] - p : (p > hi[a] ? hi[a] - p : 0.0);
                        const double f = std::max(std::abs(lo[a] - p), std::abs(hi[a] - p));
                        near2 += n * n;
                        far2 += f * f;
                    }
                    lower[j] = std::sqrt(near2) / seeds[j].weight;
                    best_upper = std::min(best_upper, std::sqrt(far2) / seeds[j].weight);
                }
                cand.clear();
                for (std::size_t j = 0; j < pos.size(); ++j) {
                    if (lower[j] <= best_upper) {
                        cand.push_back(static_cast<std::uint32_t>(j));
                    }
                }
                for (std::size_t z = bz; z < ez; ++z) {
                    for (std::size_t y = by; y < ey; ++y) {
                        for (std::size_t x = bx; x < ex; ++x) {
                            if (!foreground(x, y, z)) {
                                continue;
                            }
                            const Point3 q = physical({double(x), double(y), double(z)}, sp);
                            double best = std::numeric_limits<double>::infinity();
                            std::uint32_t arg = 0;
                            for (const auto j : cand) {
                                const auto diff = q - pos[j];
                                const double score = std::sqrt(diff.dot(diff)) / seeds[j].weight;
                                if (score < best) {
                                    best = score;
                                    arg = j;
                                }
                            }
                            labels(x, y, z) = arg + 1;
                        }
                    }
                }
            }
        }
    }
    return labels;
}

MaskVolume membrane_base(const LabelVolume& instances) {
    const auto& d = instances.dims();
    MaskVolume out(d, instances.spacing());
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                if (instances(x, y, z) != 0 && differs_from_neighbour(instances, x, y, z)) {
                    out(x, y, z) = 1;
                }
            }
        }
    }
    return out;
}

MaskVolume extract_membranes(const LabelVolume& instances, int thickness_voxels) {
    if (thickness_voxels < 1) {
        throw ParameterError("membrane thickness must be >= 1");
    }
    auto m = membrane_base(instances);
    const auto& d = instances.dims();
    for (int step = 1; step < thickness_voxels; ++step) {
        auto next = m;
        for (std::size_t z = 0; z < d.nz; ++z) {
            for (std::size_t y = 0; y < d.ny; ++y) {
                for (std::size_t x = 0; x < d.nx; ++x) {
                    if (m(x, y, z) || instances(x, y, z) == 0) {
                        continue;
                    }
                    for (const auto& o : kFace) {
                        const Index3 n{static_cast<std::ptrdiff_t>(x) + o[0], static_cast<std::ptrdiff_t>(y) + o[1],
                                       static_cast<std::ptrdiff_t>(z) + o[2]};
                        if (m.contains(n) && m.at(n)) {
                            next(x, y, z) = 1;
                            break;
                        }
                    }
                }
            }
        }
        m = std::move(next);
    }
    return m;
}

MaskVolume generate_organism_shape(const OrganismSource& source, const Dims& dims, const Spacing& spacing,
                                   std::mt19937_64& rng) {
    if (const auto* sm = std::get_if<ShapeModelSource>(&source)) {
        const Point3 center = sm->center.value_or(Point3{(static_cast<double>(dims.nx) - 1.0) / 2.0,
                                                         (static_cast<double>(dims.ny) - 1.0) / 2.0,
                                                         (static_cast<double>(dims.nz) - 1.0) / 2.0});
        const auto offsets = sample_shape_model(sm->model, sm->n_modes, rng);
        return voxelize_boundary_points(offsets, sm->model.rays, center, dims, spacing).mask;
    }
    if (const auto* sh = std::get_if<SHShape>(&source)) {
        return rasterize_sh(*sh, dims, spacing).mask;
    }
    const auto& path = std::get<std::filesystem::path>(source);
    auto mask = load_mask(path);
    if (!(mask.dims() == dims)) {
        throw ParameterError("mask file " + path.string() + " does not match the requested dims");
    }
    return MaskVolume(dims, spacing, std::vector<std::uint8_t>(mask.values()));
}

Scene build_scene(MaskVolume foreground, const SceneOptions& options, std::mt19937_64& rng) {
    Scene scene;
    auto placement = place_cells_layerwise(foreground, options.cell_radius, rng, options.placement);
    if (placement.seeds.empty()) {
        throw GenerationError(placement.warning.empty() ? "no cell seeds could be placed" : placement.warning);
    }
    scene.layers = placement.layers;
    scene.seeds = std::move(placement.seeds);
    scene.instances = weighted_tessellation(foreground, scene.seeds);
    scene.membranes = extract_membranes(scene.instances, options.membrane_thickness);

    std::vector<std::size_t> sizes(scene.seeds.size() + 1, 0);
    for (const auto l : scene.instances) {
        ++sizes[l];
    }
    for (std::size_t j = 1; j < sizes.size(); ++j) {
        if (sizes[j] == 0) {
            scene.empty_cells.push_back(static_cast<std::uint32_t>(j));
        }
    }

    if (options.nuclei) {
        const auto& nu = *options.nuclei;
        MaskVolume nuclei(foreground.dims(), foreground.spacing());
        std::normal_distribution<double> radius(nu.radius.mean, nu.radius.sd);
        const double r_min = 0.25 * nu.radius.mean;
        for (std::size_t j = 0; j < scene.seeds.size(); ++j) {
            const double r = std::max(radius(rng), r_min);
            const auto shape = random_sh_coefficients(r, nu.gamma, nu.max_order, rng, scene.seeds[j].position);
            const auto label = static_cast<std::uint32_t>(j + 1);
            for_each_voxel_in_sh(shape, foreground.dims(), foreground.spacing(), [&](std::size_t i) {
                if (scene.instances[i] == label) {
                    nuclei[i] = 1;
                }
            });
        }
        scene.nuclei = std::move(nuclei);
    }
    scene.foreground = std::move(foreground);
    return scene;
}

}  // namespace cellsynth
