#include "cellsynth/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cellsynth/morphology.hpp"

namespace cellsynth {
namespace {

constexpr float kOpen = 0.99999994f;  // largest float below 1

void check_scale(double s, const char* name) {
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw ParameterError(std::string(name) + " must be positive and finite");
    }
}

ConditioningMap from_distance(const MaskVolume& fg, const DistanceField& df, double alpha, double beta) {
    ConditioningMap out{VoxelVolume(fg.dims(), fg.spacing()), alpha, beta, df.degenerate};
    for (std::size_t i = 0; i < fg.size(); ++i) {
        const double d = df.distance[i];
        const double v = fg[i] ? std::tanh(d / alpha) : std::tanh(-d / beta);
        out.map[i] = std::clamp(static_cast<float>(v), -kOpen, kOpen);
    }
    return out;
}

}  // namespace

ConditioningMap positional_map(const MaskVolume& foreground, double alpha, double beta) {
    check_scale(alpha, "alpha");
    check_scale(beta, "beta");
    return from_distance(foreground, euclidean_distance_transform(foreground), alpha, beta);
}

std::vector<ConditioningMap> quality_sweep(const MaskVolume& foreground, std::span<const double> alphas,
                                           double beta) {
    check_scale(beta, "beta");
    for (const double a : alphas) {
        check_scale(a, "alpha");
    }
    const auto df = euclidean_distance_transform(foreground);
    std::vector<ConditioningMap> maps;
    maps.reserve(alphas.size());
    for (const double a : alphas) {
        maps.push_back(from_distance(foreground, df, a, beta));
    }
    return maps;
}

ConditioningMap neutral_conditioning(const Dims& dims, const Spacing& spacing) {
    return {VoxelVolume(dims, spacing), 1.0, 1.0, false};
}

}  // namespace cellsynth
