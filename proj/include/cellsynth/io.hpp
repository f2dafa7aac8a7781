// Volume file formats: uncompressed multi-page 16-bit TIFF stacks, a raw
// float32 container, and JSON sidecars carrying spacing and provenance.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cellsynth/volume.hpp"

namespace cellsynth {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Stack16 {
    Dims dims;
    std::vector<std::uint16_t> data;  // z-slowest, one page per z
};

/// Writes one little-endian baseline TIFF page per z slice.
void write_tiff16(const std::filesystem::path& path, const Stack16& stack);

/// Reads uncompressed grayscale 8/16-bit pages of identical size, either
/// byte order, any strip layout.
[[nodiscard]] Stack16 read_tiff16(const std::filesystem::path& path);

/// Image export: [0,1] mapped to [0, 65535] with rounding, values clamped.
void save_image(const std::filesystem::path& path, const VoxelVolume& image);
[[nodiscard]] VoxelVolume load_image(const std::filesystem::path& path);

/// Labels above 65535 are rejected.
void save_labels(const std::filesystem::path& path, const LabelVolume& labels);
[[nodiscard]] LabelVolume load_labels(const std::filesystem::path& path);

/// Masks are stored as 0/1; any nonzero value loads as foreground.
void save_mask(const std::filesystem::path& path, const MaskVolume& mask);
[[nodiscard]] MaskVolume load_mask(const std::filesystem::path& path);

/// Raw container: 8-byte magic "CSVOL1\0\0", uint32 nx, ny, nz, float64
/// sx, sy, sz, then float32 samples, all little-endian.
void save_raw(const std::filesystem::path& path, const VoxelVolume& volume);
[[nodiscard]] VoxelVolume load_raw(const std::filesystem::path& path);

/// `<file>.json` next to a volume file.
[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& volume_path);

/// Writes dims, spacing, kind and an optional provenance object (JSON text).
void write_sidecar(const std::filesystem::path& volume_path, const Dims& dims, const Spacing& spacing,
                   const std::string& kind, const std::string& provenance_json = "{}");

/// Spacing from the sidecar, or unit spacing when there is none.
[[nodiscard]] Spacing read_sidecar_spacing(const std::filesystem::path& volume_path);

/// FNV-1a 64-bit checksum of a file's bytes as 16 hex digits.
[[nodiscard]] std::string file_checksum(const std::filesystem::path& path);

}  // namespace cellsynth
