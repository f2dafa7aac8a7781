// Stochastic 3D augmentations and the adaptive augmentation-probability
// controller driven by discriminator outputs on real samples.

#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "cellsynth/volume.hpp"

namespace cellsynth {

enum class AugmentKind { intensity_scale, gaussian_noise, voxel_shuffle, inpaint, linear_ramp };

enum class InpaintFill { mean, zero, noise };

[[nodiscard]] std::string to_string(AugmentKind kind);

struct AugmentParams {
    double scale_min = 0.6;
    double scale_max = 1.2;
    double noise_sd = 0.1;
    Dims shuffle_region{25, 25, 25};
    Dims inpaint_region{15, 15, 15};
    InpaintFill inpaint_fill = InpaintFill::mean;
    double ramp_min_low = 0.3;  // the ramp ends at a factor drawn from [low, high]
    double ramp_min_high = 0.9;
};

/// What one gated operator did.
struct AugmentRecord {
    AugmentKind kind{};
    bool applied = false;
    bool clamped = false;    // region shrunk to fit the patch
    Index3 origin{0, 0, 0};  // region ops
    Dims region{};
    double value = 0.0;      // scale factor or ramp minimum
    int axis = -1;           // ramp axis
};

struct AugmentResult {
    VoxelVolume image;
    std::vector<AugmentRecord> log;
};

/// The five operators in their canonical order.
[[nodiscard]] std::vector<AugmentKind> default_augmentations();

/// Applies `ops` in order, each behind its own Bernoulli(p_aug) draw.
[[nodiscard]] AugmentResult apply_augmentations(const VoxelVolume& patch, std::span<const AugmentKind> ops,
                                                double p_aug, std::mt19937_64& rng,
                                                const AugmentParams& params = {});

/// Mean of sign(D) over a batch of discriminator outputs on real samples.
[[nodiscard]] double estimate_r_ada(std::span<const double> outputs);

struct AdaConfig {
    double target = 0.6;
    double step = 0.05;
    int period = 1;  // epochs between updates
    double initial_p = 0.0;
};

class AdaController {
public:
    explicit AdaController(AdaConfig config = {});

    [[nodiscard]] double p() const noexcept { return p_; }
    [[nodiscard]] const AdaConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

    /// Adds a batch of discriminator outputs to the running estimate.
    void observe(std::span<const double> outputs);
    /// Current running estimate, NaN when nothing was observed.
    [[nodiscard]] double running_estimate() const noexcept;

    /// Applies one update with an explicit estimate if `epoch` is a multiple of
    /// the period. Returns true on update epochs.
    bool step(double r_estimate, int epoch);

    /// Closes an epoch using the running estimate and resets it after an
    /// update. Epochs without observations leave p unchanged.
    bool end_epoch(int epoch);

private:
    AdaConfig config_;
    double p_ = 0.0;
    int last_epoch_ = -1;
    double sign_sum_ = 0.0;
    std::size_t count_ = 0;
    std::vector<double> history_;
};

}  // namespace cellsynth
