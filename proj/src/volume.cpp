#include "cellsynth/volume.hpp"

namespace cellsynth {

MaskVolume foreground_of(const LabelVolume& labels) {
    MaskVolume out(labels.dims(), labels.spacing());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = labels[i] > 0 ? 1 : 0;
    }
    return out;
}

VoxelVolume to_float(const MaskVolume& mask) {
    VoxelVolume out(mask.dims(), mask.spacing());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out[i] = mask[i] ? 1.0f : 0.0f;
    }
    return out;
}

bool is_binary(const MaskVolume& mask) noexcept {
    return std::all_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v <= 1; });
}

std::size_t count_foreground(const MaskVolume& mask) noexcept {
    return static_cast<std::size_t>(
        std::count_if(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace cellsynth
