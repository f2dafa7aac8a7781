#include "cellsynth/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace cellsynth {
namespace {

std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double to_unit(std::uint64_t bits) noexcept {
    // 53 random bits into (0, 1)
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> kernel(double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (auto& v : k) {
        v /= sum;
    }
    return k;
}

void blur_axis(std::vector<float>& data, const Dims& d, int axis, double sigma) {
    if (sigma <= 0.0 || d[axis] <= 1) {
        return;
    }
    const auto k = kernel(sigma);
    const auto r = static_cast<std::ptrdiff_t>(k.size() / 2);
    const std::size_t n = d[axis];
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? d.nx : d.nx * d.ny);
    const std::size_t lines = d.count() / n;
    std::vector<double> line(n);

    for (std::size_t l = 0; l < lines; ++l) {
        std::size_t base = 0;
        if (axis == 0) {
            base = l * d.nx;
        } else if (axis == 1) {
            base = (l / d.nx) * d.nx * d.ny + l % d.nx;
        } else {
            base = l;
        }
        bool zero = true;
        for (std::size_t i = 0; i < n; ++i) {
            line[i] = data[base + i * stride];
            zero = zero && line[i] == 0.0;
        }
        if (zero) {
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto lo = std::max<std::ptrdiff_t>(-r, -static_cast<std::ptrdiff_t>(i));
            const auto hi = std::min<std::ptrdiff_t>(r, static_cast<std::ptrdiff_t>(n - 1 - i));
            double acc = 0.0;
            for (auto o = lo; o <= hi; ++o) {
                acc += k[static_cast<std::size_t>(o + r)] * line[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + o)];
            }
            data[base + i * stride] = static_cast<float>(acc);
        }
    }
}

}  // namespace

std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t stream, std::int64_t x, std::int64_t y,
                         std::int64_t z) noexcept {
    std::uint64_t h = mix(seed);
    h = mix(h ^ stream);
    h = mix(h ^ static_cast<std::uint64_t>(x));
    h = mix(h ^ static_cast<std::uint64_t>(y));
    return mix(h ^ static_cast<std::uint64_t>(z));
}

double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::int64_t x, std::int64_t y,
                    std::int64_t z) noexcept {
    const auto b = keyed_bits(seed, stream, x, y, z);
    const double u1 = to_unit(b);
    const double u2 = to_unit(mix(b));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void RenderParams::validate() const {
    for (double s : psf_sigma) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ParameterError("psf sigma must be finite and >= 0");
        }
    }
    if (!(signal_fg >= 0.0) || !(baseline >= 0.0) || !(noise_gaussian_sd >= 0.0) || !(noise_poisson_scale >= 0.0)) {
        throw ParameterError("render amplitudes must be >= 0");
    }
    if (!(attenuation >= 0.0 && attenuation <= 1.0)) {
        throw ParameterError("attenuation must lie in [0, 1]");
    }
}

VoxelVolume gaussian_blur(const VoxelVolume& v, const std::array<double, 3>& sigma) {
    std::vector<float> data(v.values());
    for (int a = 0; a < 3; ++a) {
        blur_axis(data, v.dims(), a, sigma[static_cast<std::size_t>(a)]);
    }
    return VoxelVolume(v.dims(), v.spacing(), std::move(data));
}

VoxelVolume render_patch(const VoxelVolume& structure, const VoxelVolume& conditioning, const RenderParams& params,
                         const Index3& origin) {
    params.validate();
    if (!(structure.dims() == conditioning.dims())) {
        throw ParameterError("structure and conditioning patches differ in dims");
    }
    VoxelVolume signal(structure.dims(), structure.spacing());
    for (std::size_t i = 0; i < signal.size(); ++i) {
        const double f = std::max(0.0, static_cast<double>(conditioning[i]));
        signal[i] = static_cast<float>(params.signal_fg * structure[i] * (1.0 - params.attenuation * f));
    }
    auto img = gaussian_blur(signal, params.psf_sigma);

    const auto& d = img.dims();
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                const std::int64_t gx = origin.x + static_cast<std::int64_t>(x);
                const std::int64_t gy = origin.y + static_cast<std::int64_t>(y);
                const std::int64_t gz = origin.z + static_cast<std::int64_t>(z);
                double v = static_cast<double>(img(x, y, z)) + params.baseline;
                if (params.noise_poisson_scale > 0.0) {
                    std::mt19937_64 g(keyed_bits(params.rng_seed, 2, gx, gy, gz));
                    std::poisson_distribution<long> photons(std::max(v, 0.0) * params.noise_poisson_scale);
                    v = static_cast<double>(photons(g)) / params.noise_poisson_scale;
                }
                if (params.noise_gaussian_sd > 0.0) {
                    v += params.noise_gaussian_sd * keyed_normal(params.rng_seed, 1, gx, gy, gz);
                }
                img(x, y, z) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return img;
}

ClassicalRenderer::ClassicalRenderer(RenderParams params) : params_(params) {
    params_.validate();
}

VoxelVolume ClassicalRenderer::apply(const VoxelVolume& structure, const VoxelVolume& conditioning,
                                     const PatchInfo& info) const {
    return render_patch(structure, conditioning, params_, info.origin);
}

double identity_check(const VoxelVolume& image, const Generator& generator) {
    if (image.empty()) {
        return 0.0;
    }
    const VoxelVolume neutral(image.dims(), image.spacing());
    const auto out = generator.apply(image, neutral, PatchInfo{});
    if (!(out.dims() == image.dims())) {
        throw GenerationError("generator changed the patch dims");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        sum += std::abs(static_cast<double>(image[i]) - static_cast<double>(out[i]));
    }
    return sum / static_cast<double>(image.size());
}

}  // namespace cellsynth
