#include "cellsynth/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cellsynth {
namespace {

double sign(double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

// Random region of `want` voxels inside `dims`, shrunk where it does not fit.
void place_region(const Dims& dims, const Dims& want, std::mt19937_64& rng, AugmentRecord& rec) {
    for (int a = 0; a < 3; ++a) {
        std::size_t n = want[a];
        if (n > dims[a]) {
            n = dims[a];
            rec.clamped = true;
        }
        rec.region[a] = n;
        std::uniform_int_distribution<std::size_t> pick(0, dims[a] - n);
        rec.origin[a] = static_cast<std::ptrdiff_t>(pick(rng));
    }
}

template <typename F>
void for_region(const AugmentRecord& rec, F&& f) {
    for (std::size_t z = 0; z < rec.region.nz; ++z) {
        for (std::size_t y = 0; y < rec.region.ny; ++y) {
            for (std::size_t x = 0; x < rec.region.nx; ++x) {
                f(static_cast<std::size_t>(rec.origin.x) + x, static_cast<std::size_t>(rec.origin.y) + y,
                  static_cast<std::size_t>(rec.origin.z) + z);
            }
        }
    }
}

void check_params(const AugmentParams& p) {
    if (!(p.scale_min > 0.0) || p.scale_max < p.scale_min || !(p.noise_sd >= 0.0) || !(p.ramp_min_low >= 0.0) ||
        p.ramp_min_high < p.ramp_min_low || p.ramp_min_high > 1.0) {
        throw ParameterError("invalid augmentation parameters");
    }
}

}  // namespace

std::string to_string(AugmentKind kind) {
    switch (kind) {
        case AugmentKind::intensity_scale: return "intensity_scale";
        case AugmentKind::gaussian_noise: return "gaussian_noise";
        case AugmentKind::voxel_shuffle: return "voxel_shuffle";
        case AugmentKind::inpaint: return "inpaint";
        case AugmentKind::linear_ramp: return "linear_ramp";
    }
    return "unknown";
}

std::vector<AugmentKind> default_augmentations() {
    return {AugmentKind::intensity_scale, AugmentKind::gaussian_noise, AugmentKind::voxel_shuffle,
            AugmentKind::inpaint, AugmentKind::linear_ramp};
}

AugmentResult apply_augmentations(const VoxelVolume& patch, std::span<const AugmentKind> ops, double p_aug,
                                  std::mt19937_64& rng, const AugmentParams& params) {
    if (!(p_aug >= 0.0 && p_aug <= 1.0)) {
        throw ParameterError("p_aug must lie in [0, 1]");
    }
    check_params(params);
    AugmentResult out{patch, {}};
    if (patch.empty()) {
        return out;
    }
    auto& img = out.image;
    const auto& d = img.dims();
    std::bernoulli_distribution gate(p_aug);

    for (const auto kind : ops) {
        AugmentRecord rec;
        rec.kind = kind;
        rec.applied = gate(rng);
        if (!rec.applied) {
            out.log.push_back(rec);
            continue;
        }
        switch (kind) {
            case AugmentKind::intensity_scale: {
                rec.value = std::uniform_real_distribution<double>(params.scale_min, params.scale_max)(rng);
                for (auto& v : img) {
                    v = static_cast<float>(rec.value * v);
                }
                break;
            }
            case AugmentKind::gaussian_noise: {
                std::normal_distribution<double> n(0.0, params.noise_sd);
                for (auto& v : img) {
                    v = static_cast<float>(v + n(rng));
                }
                break;
            }
            case AugmentKind::voxel_shuffle: {
                place_region(d, params.shuffle_region, rng, rec);
                std::vector<float> vals;
                vals.reserve(rec.region.count());
                for_region(rec, [&](auto x, auto y, auto z) { vals.push_back(img(x, y, z)); });
                std::shuffle(vals.begin(), vals.end(), rng);
                std::size_t k = 0;
                for_region(rec, [&](auto x, auto y, auto z) { img(x, y, z) = vals[k++]; });
                break;
            }
            case AugmentKind::inpaint: {
                place_region(d, params.inpaint_region, rng, rec);
                const double mean =
                    std::accumulate(img.begin(), img.end(), 0.0) / static_cast<double>(img.size());
                std::normal_distribution<double> n(mean, params.noise_sd);
                for_region(rec, [&](auto x, auto y, auto z) {
                    switch (params.inpaint_fill) {
                        case InpaintFill::mean: img(x, y, z) = static_cast<float>(mean); break;
                        case InpaintFill::zero: img(x, y, z) = 0.0f; break;
                        case InpaintFill::noise: img(x, y, z) = static_cast<float>(n(rng)); break;
                    }
                });
                rec.value = mean;
                break;
            }
            case AugmentKind::linear_ramp: {
                rec.axis = std::uniform_int_distribution<int>(0, 2)(rng);
                rec.value = std::uniform_real_distribution<double>(params.ramp_min_low, params.ramp_min_high)(rng);
                const std::size_t n = d[rec.axis];
                for (std::size_t z = 0; z < d.nz; ++z) {
                    for (std::size_t y = 0; y < d.ny; ++y) {
                        for (std::size_t x = 0; x < d.nx; ++x) {
                            const std::size_t i = rec.axis == 0 ? x : (rec.axis == 1 ? y : z);
                            const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
                            img(x, y, z) = static_cast<float>(img(x, y, z) * (1.0 - (1.0 - rec.value) * t));
                        }
                    }
                }
                break;
            }
        }
        out.log.push_back(rec);
    }
    return out;
}

double estimate_r_ada(std::span<const double> outputs) {
    if (outputs.empty()) {
        throw ParameterError("r_ada needs at least one discriminator output");
    }
    double s = 0.0;
    for (const double v : outputs) {
        s += sign(v);
    }
    return s / static_cast<double>(outputs.size());
}

AdaController::AdaController(AdaConfig config) : config_(config), p_(config.initial_p) {
    if (config_.period < 1 || !(config_.step >= 0.0) || !(config_.initial_p >= 0.0 && config_.initial_p <= 1.0)) {
        throw ParameterError("invalid ADA controller configuration");
    }
}

void AdaController::observe(std::span<const double> outputs) {
    for (const double v : outputs) {
        sign_sum_ += sign(v);
    }
    count_ += outputs.size();
}

double AdaController::running_estimate() const noexcept {
    return count_ == 0 ? std::numeric_limits<double>::quiet_NaN() : sign_sum_ / static_cast<double>(count_);
}

bool AdaController::step(double r_estimate, int epoch) {
    if (epoch < last_epoch_) {
        throw ParameterError("epochs must be nondecreasing");
    }
    last_epoch_ = epoch;
    if (epoch % config_.period != 0) {
        return false;
    }
    history_.push_back(r_estimate);
    if (r_estimate > config_.target) {
        p_ += config_.step;
    } else if (r_estimate < config_.target) {
        p_ -= config_.step;
    }
    p_ = std::clamp(p_, 0.0, 1.0);
    return true;
}

bool AdaController::end_epoch(int epoch) {
    if (count_ == 0) {
        if (epoch < last_epoch_) {
            throw ParameterError("epochs must be nondecreasing");
        }
        last_epoch_ = epoch;
        return false;
    }
    const bool updated = step(running_estimate(), epoch);
    if (updated) {
        sign_sum_ = 0.0;
        count_ = 0;
    }
    return updated;
}

}  // namespace cellsynth
