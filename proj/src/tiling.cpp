#include "cellsynth/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cellsynth {
namespace {

std::vector<double> raised_cosine(std::size_t n) {
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<double>(std::min(i, n - 1 - i));
        const double s = std::sin(std::numbers::pi * (t + 0.5) / static_cast<double>(n));
        h[i] = s * s;
    }
    return h;
}

std::string origin_text(const Index3& o) {
    return "(" + std::to_string(o.x) + ", " + std::to_string(o.y) + ", " + std::to_string(o.z) + ")";
}

}  // namespace

std::array<std::size_t, 2> TilingPlan::retained(int axis, std::size_t origin) const {
    const std::size_t lo = origin == 0 ? origin : origin + crop[axis];
    const std::size_t end = origin + patch[axis];
    const std::size_t hi = end == volume[axis] ? end : end - crop[axis];
    return {lo, hi};
}

TilingPlan plan_tiling(const Dims& volume, const Dims& patch, const Dims& overlap, const Dims& crop) {
    TilingPlan plan;
    plan.volume = volume;
    plan.patch = patch;
    plan.overlap = overlap;
    plan.crop = crop;
    for (int a = 0; a < 3; ++a) {
        if (patch[a] == 0 || volume[a] == 0) {
            throw ParameterError("tiling dims must be positive");
        }
        if (patch[a] > volume[a]) {
            throw ParameterError("volume is smaller than the patch along axis " + std::to_string(a) +
                                 " (" + std::to_string(volume[a]) + " < " + std::to_string(patch[a]) +
                                 "); pad the volume before tiling");
        }
        if (2 * crop[a] + overlap[a] >= patch[a]) {
            throw ParameterError("2 * crop + overlap must be smaller than the patch along axis " +
                                 std::to_string(a));
        }
        const std::size_t s = patch[a] - 2 * crop[a] - overlap[a];
        plan.stride[a] = s;
        auto& o = plan.axis_origins[static_cast<std::size_t>(a)];
        const std::size_t last = volume[a] - patch[a];
        for (std::size_t p = 0; p < last; p += s) {
            o.push_back(p);
        }
        o.push_back(last);
    }
    for (const auto z : plan.axis_origins[2]) {
        for (const auto y : plan.axis_origins[1]) {
            for (const auto x : plan.axis_origins[0]) {
                plan.origins.push_back({static_cast<std::ptrdiff_t>(x), static_cast<std::ptrdiff_t>(y),
                                        static_cast<std::ptrdiff_t>(z)});
            }
        }
    }
    return plan;
}

VoxelVolume concentric_weights(const Dims& dims, double floor_epsilon) {
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
        throw ParameterError("weight map dims must be >= 1");
    }
    if (!(floor_epsilon > 0.0 && floor_epsilon < 1.0)) {
        throw ParameterError("floor epsilon must lie in (0, 1)");
    }
    const auto hx = raised_cosine(dims.nx);
    const auto hy = raised_cosine(dims.ny);
    const auto hz = raised_cosine(dims.nz);
    const double lo = hx.front() * hy.front() * hz.front();
    const double hi = hx[(dims.nx - 1) / 2] * hy[(dims.ny - 1) / 2] * hz[(dims.nz - 1) / 2];
    VoxelVolume w(dims);
    for (std::size_t z = 0; z < dims.nz; ++z) {
        for (std::size_t y = 0; y < dims.ny; ++y) {
            for (std::size_t x = 0; x < dims.nx; ++x) {
                const double p = hx[x] * hy[y] * hz[z];
                const double t = hi > lo ? (p - lo) / (hi - lo) : 1.0;
                w(x, y, z) = static_cast<float>(floor_epsilon + (1.0 - floor_epsilon) * t);
            }
        }
    }
    return w;
}

VoxelVolume patch_weights(const TilingPlan& plan, double floor_epsilon) {
    const auto& p = plan.patch;
    const auto& c = plan.crop;
    const auto inner = concentric_weights({p.nx - 2 * c.nx, p.ny - 2 * c.ny, p.nz - 2 * c.nz}, floor_epsilon);
    VoxelVolume w(p, {}, static_cast<float>(floor_epsilon));
    for (std::size_t z = 0; z < inner.dims().nz; ++z) {
        for (std::size_t y = 0; y < inner.dims().ny; ++y) {
            for (std::size_t x = 0; x < inner.dims().nx; ++x) {
                w(x + c.nx, y + c.ny, z + c.nz) = inner(x, y, z);
            }
        }
    }
    return w;
}

std::vector<std::uint16_t> coverage_count(const TilingPlan& plan) {
    const auto& d = plan.volume;
    std::vector<std::uint16_t> count(d.count(), 0);
    for (const auto& o : plan.origins) {
        const auto rx = plan.retained(0, static_cast<std::size_t>(o.x));
        const auto ry = plan.retained(1, static_cast<std::size_t>(o.y));
        const auto rz = plan.retained(2, static_cast<std::size_t>(o.z));
        for (std::size_t z = rz[0]; z < rz[1]; ++z) {
            for (std::size_t y = ry[0]; y < ry[1]; ++y) {
                for (std::size_t x = rx[0]; x < rx[1]; ++x) {
                    ++count[(z * d.ny + y) * d.nx + x];
                }
            }
        }
    }
    return count;
}

VoxelVolume process_volume(const VoxelVolume& structure, const VoxelVolume& conditioning, const Generator& generator,
                           const TilingPlan& plan, double floor_epsilon) {
    const auto& d = plan.volume;
    if (!(structure.dims() == d) || !(conditioning.dims() == d)) {
        throw ParameterError("inputs do not match the tiling plan dims");
    }
    const auto weights = patch_weights(plan, floor_epsilon);
    std::vector<double> value(d.count(), 0.0);
    std::vector<double> weight(d.count(), 0.0);

    for (std::size_t k = 0; k < plan.origins.size(); ++k) {
        const auto& o = plan.origins[k];
        const auto in = extract_box(structure, o, plan.patch);
        const auto cond = extract_box(conditioning, o, plan.patch);
        const auto out = generator.apply(in, cond, PatchInfo{o, k});
        if (!(out.dims() == plan.patch)) {
            throw GenerationError("generator returned wrong dims for the patch at origin " + origin_text(o));
        }
        const auto rx = plan.retained(0, static_cast<std::size_t>(o.x));
        const auto ry = plan.retained(1, static_cast<std::size_t>(o.y));
        const auto rz = plan.retained(2, static_cast<std::size_t>(o.z));
        for (std::size_t z = rz[0]; z < rz[1]; ++z) {
            const std::size_t lz = z - static_cast<std::size_t>(o.z);
            for (std::size_t y = ry[0]; y < ry[1]; ++y) {
                const std::size_t ly = y - static_cast<std::size_t>(o.y);
                for (std::size_t x = rx[0]; x < rx[1]; ++x) {
                    const std::size_t lx = x - static_cast<std::size_t>(o.x);
                    const double w = weights(lx, ly, lz);
                    const auto g = (z * d.ny + y) * d.nx + x;
                    value[g] += w * static_cast<double>(out(lx, ly, lz));
                    weight[g] += w;
                }
            }
        }
    }

    VoxelVolume result(d, structure.spacing());
    for (std::size_t i = 0; i < result.size(); ++i) {
        result[i] = static_cast<float>(value[i] / weight[i]);
    }
    return result;
}

}  // namespace cellsynth
