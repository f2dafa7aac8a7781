// Dense 3D voxel grids shared by every stage of the synthesis pipeline.
//
// Storage is row-major with z slowest: index = (z * ny + y) * nx + x.
// Patch extraction and TIFF page order both rely on this layout.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cellsynth {

/// Raised for invalid arguments (ranges, mismatched dims, bad config values).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a stochastic generator cannot produce a valid result.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dims {
    std::size_t nx = 0, ny = 0, nz = 0;

    [[nodiscard]] std::size_t count() const noexcept { return nx * ny * nz; }
    [[nodiscard]] std::size_t operator[](int axis) const noexcept {
        return axis == 0 ? nx : (axis == 1 ? ny : nz);
    }
    std::size_t& operator[](int axis) noexcept { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    friend bool operator==(const Dims&, const Dims&) = default;
};

struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    [[nodiscard]] double operator[](int axis) const noexcept {
        return axis == 0 ? sx : (axis == 1 ? sy : sz);
    }
    [[nodiscard]] bool valid() const noexcept { return sx > 0.0 && sy > 0.0 && sz > 0.0; }
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Integer voxel coordinate.
struct Index3 {
    std::ptrdiff_t x = 0, y = 0, z = 0;

    [[nodiscard]] std::ptrdiff_t operator[](int axis) const noexcept {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }
    std::ptrdiff_t& operator[](int axis) noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }
    friend bool operator==(const Index3&, const Index3&) = default;
};

/// Continuous coordinate (voxel space unless stated otherwise).
struct Point3 {
    double x = 0.0, y = 0.0, z = 0.0;

    [[nodiscard]] double operator[](int axis) const noexcept {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }
    [[nodiscard]] double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
    [[nodiscard]] double dot(const Point3& o) const noexcept { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] bool finite() const noexcept {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }

    friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Point3&, const Point3&) = default;
};

template <typename T>
class Volume {
public:
    using value_type = T;

    Volume() = default;

    explicit Volume(Dims dims, Spacing spacing = {}, T fill = T{})
        : dims_(dims), spacing_(spacing), data_(dims.count(), fill) {
        if (!spacing_.valid()) {
            throw ParameterError("volume spacing must be positive on every axis");
        }
    }

    Volume(Dims dims, Spacing spacing, std::vector<T> data)
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        if (!spacing_.valid()) {
            throw ParameterError("volume spacing must be positive on every axis");
        }
        if (data_.size() != dims_.count()) {
            throw ParameterError("volume data length " + std::to_string(data_.size()) +
                                 " does not match dims (" + std::to_string(dims_.count()) + ")");
        }
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return (z * dims_.ny + y) * dims_.nx + x;
    }
    [[nodiscard]] Index3 coord(std::size_t i) const noexcept {
        const auto x = i % dims_.nx;
        const auto y = (i / dims_.nx) % dims_.ny;
        const auto z = i / (dims_.nx * dims_.ny);
        return {static_cast<std::ptrdiff_t>(x), static_cast<std::ptrdiff_t>(y),
                static_cast<std::ptrdiff_t>(z)};
    }
    [[nodiscard]] bool contains(const Index3& p) const noexcept {
        return p.x >= 0 && p.y >= 0 && p.z >= 0 && static_cast<std::size_t>(p.x) < dims_.nx &&
               static_cast<std::size_t>(p.y) < dims_.ny && static_cast<std::size_t>(p.z) < dims_.nz;
    }

    T& operator()(std::size_t x, std::size_t y, std::size_t z) noexcept { return data_[index(x, y, z)]; }
    const T& operator()(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return data_[index(x, y, z)];
    }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }
    T& at(const Index3& p) { return data_[index(p.x, p.y, p.z)]; }
    const T& at(const Index3& p) const { return data_[index(p.x, p.y, p.z)]; }

    [[nodiscard]] std::span<T> data() noexcept { return data_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<T> data_;
};

/// Intensity images, conditioning maps and distance fields.
using VoxelVolume = Volume<float>;
/// Binary masks; only 0 and 1 are legal values.
using MaskVolume = Volume<std::uint8_t>;
/// Instance or class labels, 0 is background.
using LabelVolume = Volume<std::uint32_t>;

template <typename T>
[[nodiscard]] inline bool same_shape(const Volume<T>& a, const Volume<T>& b) noexcept {
    return a.dims() == b.dims();
}

template <typename A, typename B>
[[nodiscard]] inline bool same_dims(const Volume<A>& a, const Volume<B>& b) noexcept {
    return a.dims() == b.dims();
}

/// Binary foreground of a label volume (label > 0).
[[nodiscard]] MaskVolume foreground_of(const LabelVolume& labels);

/// Float copy of a binary mask (0.0 / 1.0).
[[nodiscard]] VoxelVolume to_float(const MaskVolume& mask);

[[nodiscard]] bool is_binary(const MaskVolume& mask) noexcept;
[[nodiscard]] std::size_t count_foreground(const MaskVolume& mask) noexcept;

/// Copies the box [origin, origin + dims) out of `src`. The box must lie inside.
template <typename T>
[[nodiscard]] Volume<T> extract_box(const Volume<T>& src, const Index3& origin, const Dims& dims) {
    const auto& sd = src.dims();
    if (origin.x < 0 || origin.y < 0 || origin.z < 0 ||
        static_cast<std::size_t>(origin.x) + dims.nx > sd.nx ||
        static_cast<std::size_t>(origin.y) + dims.ny > sd.ny ||
        static_cast<std::size_t>(origin.z) + dims.nz > sd.nz) {
        throw ParameterError("extraction box exceeds source volume");
    }
    Volume<T> out(dims, src.spacing());
    for (std::size_t z = 0; z < dims.nz; ++z) {
        for (std::size_t y = 0; y < dims.ny; ++y) {
            const auto* row = &src(static_cast<std::size_t>(origin.x),
                                   static_cast<std::size_t>(origin.y) + y,
                                   static_cast<std::size_t>(origin.z) + z);
            std::copy(row, row + dims.nx, &out(0, y, z));
        }
    }
    return out;
}

}  // namespace cellsynth
