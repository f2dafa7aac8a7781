#include "cellsynth/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cellsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One lower-envelope pass over a strided line. `f` holds squared distances
// accumulated by earlier passes; `w2` is the squared spacing along this axis.
// Only finite samples become parabolas, so INF never enters the arithmetic.
void envelope_pass(double* line, std::size_t n, std::size_t stride, double w2,
                   std::vector<double>& f, std::vector<std::size_t>& v, std::vector<double>& z) {
    f.resize(n);
    v.resize(n);
    z.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = line[i * stride];
    }

    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::isfinite(f[q])) {
            continue;
        }
        if (!any) {
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            any = true;
            continue;
        }
        const double fq = f[q] + w2 * static_cast<double>(q) * static_cast<double>(q);
        double s = 0.0;
        while (true) {
            const auto p = v[k];
            const double fp = f[p] + w2 * static_cast<double>(p) * static_cast<double>(p);
            s = (fq - fp) / (2.0 * w2 * static_cast<double>(q - p));
            // z[0] is -inf, so the loop always stops at k == 0
            if (s <= z[k]) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }

    if (!any) {
        for (std::size_t i = 0; i < n; ++i) {
            line[i * stride] = kInf;
        }
        return;
    }

    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q)) {
            ++k;
        }
        const auto p = v[k];
        const double d = static_cast<double>(q) - static_cast<double>(p);
        line[q * stride] = w2 * d * d + f[p];
    }
}

bool has_background_neighbour(const MaskVolume& mask, std::size_t x, std::size_t y, std::size_t z) {
    const auto& d = mask.dims();
    if (x == 0 || y == 0 || z == 0 || x + 1 == d.nx || y + 1 == d.ny || z + 1 == d.nz) {
        return true;
    }
    return !mask(x - 1, y, z) || !mask(x + 1, y, z) || !mask(x, y - 1, z) || !mask(x, y + 1, z) ||
           !mask(x, y, z - 1) || !mask(x, y, z + 1);
}

}  // namespace

std::vector<double> squared_distance_to_sites(const MaskVolume& sites, const Spacing& spacing) {
    const auto& d = sites.dims();
    std::vector<double> g(d.count());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = sites[i] ? 0.0 : kInf;
    }
    if (g.empty()) {
        return g;
    }

    std::vector<double> f;
    std::vector<std::size_t> v;
    std::vector<double> z;

    const double wx = spacing.sx * spacing.sx;
    const double wy = spacing.sy * spacing.sy;
    const double wz = spacing.sz * spacing.sz;

    for (std::size_t iz = 0; iz < d.nz; ++iz) {
        for (std::size_t iy = 0; iy < d.ny; ++iy) {
            envelope_pass(&g[(iz * d.ny + iy) * d.nx], d.nx, 1, wx, f, v, z);
        }
    }
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
        for (std::size_t ix = 0; ix < d.nx; ++ix) {
            envelope_pass(&g[iz * d.ny * d.nx + ix], d.ny, d.nx, wy, f, v, z);
        }
    }
    for (std::size_t iy = 0; iy < d.ny; ++iy) {
        for (std::size_t ix = 0; ix < d.nx; ++ix) {
            envelope_pass(&g[iy * d.nx + ix], d.nz, d.nx * d.ny, wz, f, v, z);
        }
    }
    return g;
}

MaskVolume boundary_mask(const MaskVolume& mask) {
    const auto& d = mask.dims();
    MaskVolume out(d, mask.spacing());
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                if (mask(x, y, z) && has_background_neighbour(mask, x, y, z)) {
                    out(x, y, z) = 1;
                }
            }
        }
    }
    return out;
}

std::vector<Point3> boundary_voxels(const MaskVolume& mask) {
    const auto b = boundary_mask(mask);
    std::vector<Point3> pts;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i]) {
            const auto c = b.coord(i);
            pts.push_back({static_cast<double>(c.x), static_cast<double>(c.y), static_cast<double>(c.z)});
        }
    }
    return pts;
}

DistanceField euclidean_distance_transform(const MaskVolume& mask) {
    const auto& d = mask.dims();
    const auto& sp = mask.spacing();
    DistanceField result{VoxelVolume(d, sp), false};
    if (d.count() == 0) {
        return result;
    }
    const auto fg = count_foreground(mask);
    result.degenerate = fg == 0 || fg == mask.size();

    if (fg == 0) {
        // No boundary at all: measure to the shell just outside the volume.
        for (std::size_t z = 0; z < d.nz; ++z) {
            for (std::size_t y = 0; y < d.ny; ++y) {
                for (std::size_t x = 0; x < d.nx; ++x) {
                    const double dx = static_cast<double>(std::min(x + 1, d.nx - x)) * sp.sx;
                    const double dy = static_cast<double>(std::min(y + 1, d.ny - y)) * sp.sy;
                    const double dz = static_cast<double>(std::min(z + 1, d.nz - z)) * sp.sz;
                    result.distance(x, y, z) = static_cast<float>(std::min({dx, dy, dz}));
                }
            }
        }
        return result;
    }

    // Foreground voxels: distance to the nearest background voxel, where a
    // one-voxel background shell surrounds the volume.
    const Dims padded{d.nx + 2, d.ny + 2, d.nz + 2};
    MaskVolume background(padded, sp, std::uint8_t{1});
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                background(x + 1, y + 1, z + 1) = mask(x, y, z) ? 0 : 1;
            }
        }
    }
    const auto to_background = squared_distance_to_sites(background, sp);
    // Background voxels: distance to the nearest foreground voxel.
    const auto to_foreground = squared_distance_to_sites(mask, sp);

    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                const auto i = mask.index(x, y, z);
                const double sq = mask[i] ? to_background[background.index(x + 1, y + 1, z + 1)] : to_foreground[i];
                result.distance[i] = static_cast<float>(std::sqrt(sq));
            }
        }
    }
    return result;
}

MaskVolume dilate(const MaskVolume& mask, int radius_voxels) {
    if (radius_voxels < 0) {
        throw ParameterError("dilation radius must be non-negative");
    }
    if (radius_voxels == 0 || mask.empty()) {
        return mask;
    }
    const auto sq = squared_distance_to_sites(mask, Spacing{});
    const double limit = static_cast<double>(radius_voxels) * radius_voxels;
    MaskVolume out(mask.dims(), mask.spacing());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        out[i] = sq[i] <= limit ? 1 : 0;
    }
    return out;
}

}  // namespace cellsynth
