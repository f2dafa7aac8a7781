// Star-convex shape synthesis: real spherical harmonics and PCA shape models.
//
// All radii and boundary offsets are physical (voxel index times spacing).
// Shape centers are given in voxel coordinates.

#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cellsynth/volume.hpp"

namespace cellsynth {

/// A sampling direction on the unit sphere.
struct Ray {
    Point3 direction;
    double theta = 0.0;  // polar angle in [0, pi]
    double phi = 0.0;    // azimuth in [0, 2 pi)
};

/// Near-uniform directions from a Fibonacci lattice.
[[nodiscard]] std::vector<Ray> fibonacci_rays(std::size_t n);

/// Spherical angles of a (nonzero) direction.
[[nodiscard]] Ray direction_of(const Point3& v);

// --- spherical harmonics -------------------------------------------------

[[nodiscard]] constexpr std::size_t sh_count(int max_order) noexcept {
    return static_cast<std::size_t>((max_order + 1) * (max_order + 1));
}
[[nodiscard]] constexpr std::size_t sh_index(int l, int m) noexcept {
    return static_cast<std::size_t>(l * l + l + m);
}

/// Real orthonormal spherical harmonic Y_l^m. Cosine branch for m > 0, sine
/// branch for m < 0, no Condon-Shortley phase.
[[nodiscard]] double sh_basis(int l, int m, double theta, double phi);

/// All (max_order+1)^2 basis values at one direction, in sh_index() order.
void sh_basis_all(int max_order, double theta, double phi, std::span<double> out);

struct SHShape {
    int max_order = 0;
    std::vector<double> coefficients;  // sh_index() order
    Point3 center;
    /// Multiplies the coefficient sum. Random shapes use sqrt(4 pi) so that
    /// c_0^0 equals the mean radius.
    double radius_scale = 1.0;

    [[nodiscard]] double coefficient(int l, int m) const { return coefficients.at(sh_index(l, m)); }
    [[nodiscard]] double radius(double theta, double phi) const;
    /// Upper bound on the radius over the whole sphere.
    [[nodiscard]] double radius_bound() const;
    /// Smallest radius over a theta/phi validation grid.
    [[nodiscard]] double min_radius_on_grid(int theta_steps = 32, int phi_steps = 64) const;
};

/// Builds a shape after checking the coefficient count.
[[nodiscard]] SHShape make_sh_shape(int max_order, std::vector<double> coefficients, Point3 center,
                                    double radius_scale = 1.0);

/// Shape whose radius is `radius` in every direction.
[[nodiscard]] SHShape sh_sphere(double radius, Point3 center, int max_order = 0);

struct ShRandomOptions {
    int max_attempts = 1000;
    int grid_theta = 32;
    int grid_phi = 64;
};

/// Random smooth shape: c_0^0 = r and c_l^m = r * w * exp(-gamma * (l + |m|))
/// with w ~ N(0, 1). Redraws until the radius is positive on the validation grid.
[[nodiscard]] SHShape random_sh_coefficients(double r, double gamma, int max_order,
                                             std::mt19937_64& rng, Point3 center = {},
                                             const ShRandomOptions& options = {});

struct RasterResult {
    MaskVolume mask;
    bool clipped = false;     // part of the shape fell outside the volume
    bool degenerate = false;  // at most one voxel set
};

/// Foreground iff the physical distance to the center is <= r(theta, phi).
[[nodiscard]] RasterResult rasterize_sh(const SHShape& shape, const Dims& dims, const Spacing& spacing);

/// Calls `visit` for every in-volume voxel inside the shape. Returns true if
/// the shape was clipped by the volume border.
bool for_each_voxel_in_sh(const SHShape& shape, const Dims& dims, const Spacing& spacing,
                          const std::function<void(std::size_t)>& visit);

// --- statistical shape model ---------------------------------------------

struct BoundarySample {
    Point3 centroid;                // voxel coordinates
    std::vector<Point3> offsets;    // physical offsets from the centroid, ray order
    std::size_t violations = 0;     // rays crossing the boundary more than once
};

/// Boundary points of a star-convex mask along `rays` from its centroid.
/// Each radius is the midpoint between the outermost foreground voxel and the
/// nearest background voxel beyond it inside a thin tube around the ray.
[[nodiscard]] BoundarySample sample_boundary(const MaskVolume& mask, std::span<const Ray> rays);

struct ShapeModel {
    std::size_t n_samples = 0;
    std::vector<Ray> rays;
    Eigen::VectorXd mean;          // 3n, x/y/z interleaved
    Eigen::MatrixXd modes;         // 3n x N, orthonormal columns
    Eigen::VectorXd eigenvalues;   // N, descending
    std::size_t violations = 0;    // summed over training shapes

    [[nodiscard]] std::size_t n_points() const noexcept { return rays.size(); }
    [[nodiscard]] std::size_t n_modes() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// PCA over boundary points sampled along a shared Fibonacci ray set.
[[nodiscard]] ShapeModel fit_shape_model(const std::vector<MaskVolume>& shapes, std::size_t n_rays = 642);

/// PCA over already-sampled boundary vectors (each of length 3n).
[[nodiscard]] ShapeModel fit_shape_model_from_points(const std::vector<Eigen::VectorXd>& samples,
                                                     std::vector<Ray> rays);

[[nodiscard]] Eigen::VectorXd flatten(std::span<const Point3> points);
[[nodiscard]] std::vector<Point3> unflatten(const Eigen::VectorXd& v);

/// Mode weights of `p` (length 3n) on all modes.
[[nodiscard]] Eigen::VectorXd project(const ShapeModel& model, const Eigen::VectorXd& p);

/// mean + sum_j b_j phi_j over the first b.size() modes. Each |b_j| must be
/// within 3 * lambda_j.
[[nodiscard]] std::vector<Point3> sample_shape_model(const ShapeModel& model, std::span<const double> b);

/// Same, with b_j drawn uniformly from [-3 lambda_j, 3 lambda_j].
[[nodiscard]] std::vector<Point3> sample_shape_model(const ShapeModel& model, std::size_t n_modes,
                                                     std::mt19937_64& rng);

/// Fills the star-convex surface given by boundary offsets along `rays`
/// around `center` (voxel coordinates).
[[nodiscard]] RasterResult voxelize_boundary_points(std::span<const Point3> offsets, std::span<const Ray> rays,
                                                    Point3 center, const Dims& dims, const Spacing& spacing);

}  // namespace cellsynth
