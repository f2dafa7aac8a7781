// Generator interface and the classical image-formation renderer:
// structure signal, depth attenuation, Gaussian PSF, baseline and noise.

#pragma once

#include <array>
#include <cstdint>

#include "cellsynth/volume.hpp"

namespace cellsynth {

/// Where a patch sits in the full volume. Generators that draw noise use the
/// origin to key it to global coordinates.
struct PatchInfo {
    Index3 origin{0, 0, 0};
    std::size_t index = 0;
};

class Generator {
public:
    virtual ~Generator() = default;

    /// Maps a structure patch (mask or image) and its conditioning patch to an
    /// image patch of the same dims.
    [[nodiscard]] virtual VoxelVolume apply(const VoxelVolume& structure, const VoxelVolume& conditioning,
                                            const PatchInfo& info) const = 0;
};

struct RenderParams {
    std::array<double, 3> psf_sigma{1.5, 1.5, 3.0};  // voxels
    double signal_fg = 0.8;
    double baseline = 0.05;
    double noise_gaussian_sd = 0.02;
    double noise_poisson_scale = 0.0;  // photons per unit intensity, 0 disables
    double attenuation = 0.9;          // kappa in [0, 1]
    std::uint64_t rng_seed = 0;

    /// Throws ParameterError on out-of-range fields.
    void validate() const;
};

/// Separable normalized Gaussian, kernel truncated at ceil(3 sigma), zero
/// padding. sigma 0 leaves an axis untouched.
[[nodiscard]] VoxelVolume gaussian_blur(const VoxelVolume& v, const std::array<double, 3>& sigma);

/// clip(blur(signal_fg * s * (1 - kappa * max(0, f))) + baseline + noise, 0, 1).
/// Noise at a voxel depends only on (rng_seed, origin + local coordinate).
[[nodiscard]] VoxelVolume render_patch(const VoxelVolume& structure, const VoxelVolume& conditioning,
                                       const RenderParams& params, const Index3& origin = {0, 0, 0});

class ClassicalRenderer final : public Generator {
public:
    explicit ClassicalRenderer(RenderParams params);

    [[nodiscard]] VoxelVolume apply(const VoxelVolume& structure, const VoxelVolume& conditioning,
                                    const PatchInfo& info) const override;
    [[nodiscard]] const RenderParams& params() const noexcept { return params_; }

private:
    RenderParams params_;
};

/// Mean |x - G(x, 0)| over all voxels.
[[nodiscard]] double identity_check(const VoxelVolume& image, const Generator& generator);

/// Standard normal and uniform draws keyed by (seed, stream, x, y, z).
[[nodiscard]] double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::int64_t x, std::int64_t y,
                                  std::int64_t z) noexcept;
[[nodiscard]] std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t stream, std::int64_t x, std::int64_t y,
                                       std::int64_t z) noexcept;

}  // namespace cellsynth
