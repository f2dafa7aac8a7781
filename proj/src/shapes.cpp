#include "cellsynth/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cellsynth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Associated Legendre P_l^m(x), m >= 0, without the Condon-Shortley phase.
double legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
        double odd = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= odd * s;
            odd += 2.0;
        }
    }
    if (l == m) {
        return pmm;
    }
    double pmm1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) {
        return pmm1;
    }
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmm1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmm1;
        pmm1 = pll;
    }
    return pll;
}

double normalization(int l, int m) {
    const double ratio = std::exp(std::lgamma(l - m + 1.0) - std::lgamma(l + m + 1.0));
    return std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
}

struct Box {
    std::ptrdiff_t lo[3];
    std::ptrdiff_t hi[3];  // inclusive
};

Box bounding_box(const Point3& center, double radius, const Spacing& spacing) {
    Box b{};
    for (int a = 0; a < 3; ++a) {
        const double extent = radius / spacing[a];
        b.lo[a] = static_cast<std::ptrdiff_t>(std::floor(center[a] - extent)) - 1;
        b.hi[a] = static_cast<std::ptrdiff_t>(std::ceil(center[a] + extent)) + 1;
    }
    return b;
}

bool in_volume(const Dims& d, std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
    return x >= 0 && y >= 0 && z >= 0 && static_cast<std::size_t>(x) < d.nx &&
           static_cast<std::size_t>(y) < d.ny && static_cast<std::size_t>(z) < d.nz;
}

// Visits every voxel of the box whose physical offset from `center` lies
// inside the radial function. Returns true if any inside voxel was outside
// the volume.
template <typename RadiusFn, typename Visit>
bool scan_star_shape(const Point3& center, double bound, const Dims& dims, const Spacing& spacing,
                     RadiusFn&& radius_at, Visit&& visit) {
    const auto box = bounding_box(center, bound, spacing);
    bool clipped = false;
    const double bound2 = bound * bound;
    for (auto z = box.lo[2]; z <= box.hi[2]; ++z) {
        const double wz = (static_cast<double>(z) - center.z) * spacing.sz;
        for (auto y = box.lo[1]; y <= box.hi[1]; ++y) {
            const double wy = (static_cast<double>(y) - center.y) * spacing.sy;
            for (auto x = box.lo[0]; x <= box.hi[0]; ++x) {
                const double wx = (static_cast<double>(x) - center.x) * spacing.sx;
                const double rho2 = wx * wx + wy * wy + wz * wz;
                if (rho2 > bound2) {
                    continue;
                }
                const bool inside_volume = in_volume(dims, x, y, z);
                if (!inside_volume && clipped) {
                    continue;
                }
                const double rho = std::sqrt(rho2);
                bool inside = false;
                if (rho == 0.0) {
                    inside = radius_at(0.0, 0.0) >= 0.0;
                } else {
                    const auto dir = direction_of({wx, wy, wz});
                    inside = rho <= radius_at(dir.theta, dir.phi);
                }
                if (!inside) {
                    continue;
                }
                if (inside_volume) {
                    visit((static_cast<std::size_t>(z) * dims.ny + static_cast<std::size_t>(y)) * dims.nx +
                          static_cast<std::size_t>(x));
                } else {
                    clipped = true;
                }
            }
        }
    }
    return clipped;
}

}  // namespace

std::vector<Ray> fibonacci_rays(std::size_t n) {
    std::vector<Ray> rays;
    rays.reserve(n);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = std::fmod(golden * static_cast<double>(i), kTwoPi);
        rays.push_back({{r * std::cos(phi), r * std::sin(phi), z}, std::acos(z), phi});
    }
    return rays;
}

Ray direction_of(const Point3& v) {
    const double rho = v.norm();
    if (rho == 0.0) {
        return {{0.0, 0.0, 1.0}, 0.0, 0.0};
    }
    const double theta = std::acos(std::clamp(v.z / rho, -1.0, 1.0));
    double phi = std::atan2(v.y, v.x);
    if (phi < 0.0) {
        phi += kTwoPi;
    }
    if (phi >= kTwoPi) {
        phi = 0.0;
    }
    return {(1.0 / rho) * v, theta, phi};
}

double sh_basis(int l, int m, double theta, double phi) {
    if (l < 0 || std::abs(m) > l) {
        throw ParameterError("spherical harmonic requires l >= 0 and |m| <= l (got l=" + std::to_string(l) +
                             ", m=" + std::to_string(m) + ")");
    }
    const int am = std::abs(m);
    const double p = legendre(l, am, std::cos(theta));
    const double k = normalization(l, am);
    if (m == 0) {
        return k * p;
    }
    const double trig = m > 0 ? std::cos(am * phi) : std::sin(am * phi);
    return std::numbers::sqrt2 * k * p * trig;
}

void sh_basis_all(int max_order, double theta, double phi, std::span<double> out) {
    if (max_order < 0 || out.size() < sh_count(max_order)) {
        throw ParameterError("sh_basis_all: output span too small for max_order");
    }
    const double x = std::cos(theta);
    const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
    double pmm = 1.0;  // P_m^m
    double odd = 1.0;
    for (int m = 0; m <= max_order; ++m) {
        if (m > 0) {
            pmm *= odd * s;
            odd += 2.0;
        }
        const double c = m > 0 ? std::cos(m * phi) : 1.0;
        const double sn = m > 0 ? std::sin(m * phi) : 0.0;
        double p_prev = 0.0;
        double p_cur = pmm;
        for (int l = m; l <= max_order; ++l) {
            if (l == m + 1) {
                p_prev = p_cur;
                p_cur = x * (2.0 * m + 1.0) * pmm;
            } else if (l > m + 1) {
                const double next = ((2.0 * l - 1.0) * x * p_cur - (l + m - 1.0) * p_prev) / (l - m);
                p_prev = p_cur;
                p_cur = next;
            }
            const double k = normalization(l, m);
            if (m == 0) {
                out[sh_index(l, 0)] = k * p_cur;
            } else {
                out[sh_index(l, m)] = std::numbers::sqrt2 * k * p_cur * c;
                out[sh_index(l, -m)] = std::numbers::sqrt2 * k * p_cur * sn;
            }
        }
    }
}

double SHShape::radius(double theta, double phi) const {
    std::vector<double> basis(sh_count(max_order));
    sh_basis_all(max_order, theta, phi, basis);
    double sum = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        sum += coefficients[j] * basis[j];
    }
    return radius_scale * sum;
}

double SHShape::radius_bound() const {
    double bound = 0.0;
    for (int l = 0; l <= max_order; ++l) {
        const double peak = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi));
        for (int m = -l; m <= l; ++m) {
            bound += std::abs(coefficient(l, m)) * peak * (m == 0 ? 1.0 : std::numbers::sqrt2);
        }
    }
    return std::abs(radius_scale) * bound;
}

double SHShape::min_radius_on_grid(int theta_steps, int phi_steps) const {
    std::vector<double> basis(sh_count(max_order));
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= theta_steps; ++i) {
        const double theta = kPi * i / theta_steps;
        for (int j = 0; j < phi_steps; ++j) {
            const double phi = kTwoPi * j / phi_steps;
            sh_basis_all(max_order, theta, phi, basis);
            double sum = 0.0;
            for (std::size_t k = 0; k < basis.size(); ++k) {
                sum += coefficients[k] * basis[k];
            }
            lowest = std::min(lowest, radius_scale * sum);
        }
    }
    return lowest;
}

SHShape make_sh_shape(int max_order, std::vector<double> coefficients, Point3 center, double radius_scale) {
    if (max_order < 0) {
        throw ParameterError("SH max order must be non-negative");
    }
    if (coefficients.size() != sh_count(max_order)) {
        throw ParameterError("SH shape of order " + std::to_string(max_order) + " needs " +
                             std::to_string(sh_count(max_order)) + " coefficients, got " +
                             std::to_string(coefficients.size()));
    }
    if (!center.finite() || !std::isfinite(radius_scale)) {
        throw ParameterError("SH shape center and scale must be finite");
    }
    return SHShape{max_order, std::move(coefficients), center, radius_scale};
}

SHShape sh_sphere(double radius, Point3 center, int max_order) {
    std::vector<double> c(sh_count(max_order), 0.0);
    c[0] = radius * std::sqrt(4.0 * kPi);
    return make_sh_shape(max_order, std::move(c), center, 1.0);
}

SHShape random_sh_coefficients(double r, double gamma, int max_order, std::mt19937_64& rng, Point3 center,
                               const ShRandomOptions& options) {
    if (!(r > 0.0) || !(gamma > 0.0) || max_order < 0) {
        throw ParameterError("random SH shape needs r > 0, gamma > 0 and max_order >= 0");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> c(sh_count(max_order));
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        c[0] = r;
        for (int l = 1; l <= max_order; ++l) {
            for (int m = -l; m <= l; ++m) {
                c[sh_index(l, m)] = r * normal(rng) * std::exp(-gamma * (l + std::abs(m)));
            }
        }
        SHShape shape{max_order, c, center, std::sqrt(4.0 * kPi)};
        if (shape.min_radius_on_grid(options.grid_theta, options.grid_phi) > 0.0) {
            return shape;
        }
    }
    throw GenerationError("could not draw a positive SH radius function within " +
                          std::to_string(options.max_attempts) + " attempts (gamma=" + std::to_string(gamma) +
                          ", r=" + std::to_string(r) + ")");
}

bool for_each_voxel_in_sh(const SHShape& shape, const Dims& dims, const Spacing& spacing,
                          const std::function<void(std::size_t)>& visit) {
    std::vector<double> basis(sh_count(shape.max_order));
    auto radius_at = [&](double theta, double phi) {
        sh_basis_all(shape.max_order, theta, phi, basis);
        double sum = 0.0;
        for (std::size_t k = 0; k < basis.size(); ++k) {
            sum += shape.coefficients[k] * basis[k];
        }
        return shape.radius_scale * sum;
    };
    return scan_star_shape(shape.center, shape.radius_bound(), dims, spacing, radius_at, visit);
}

RasterResult rasterize_sh(const SHShape& shape, const Dims& dims, const Spacing& spacing) {
    RasterResult result{MaskVolume(dims, spacing), false, false};
    std::size_t count = 0;
    result.clipped = for_each_voxel_in_sh(shape, dims, spacing, [&](std::size_t i) {
        result.mask[i] = 1;
        ++count;
    });
    result.degenerate = count <= 1;
    return result;
}

// --- statistical shape model ---------------------------------------------

BoundarySample sample_boundary(const MaskVolume& mask, std::span<const Ray> rays) {
    const auto& d = mask.dims();
    const auto& sp = mask.spacing();

    double cx = 0.0, cy = 0.0, cz = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            const auto c = mask.coord(i);
            cx += static_cast<double>(c.x);
            cy += static_cast<double>(c.y);
            cz += static_cast<double>(c.z);
            ++count;
        }
    }
    if (count == 0) {
        throw ParameterError("cannot sample the boundary of an empty shape");
    }
    BoundarySample out;
    out.centroid = {cx / count, cy / count, cz / count};
    const Point3 c_phys{out.centroid.x * sp.sx, out.centroid.y * sp.sy, out.centroid.z * sp.sz};

    // Voxels adjacent (26-neighbourhood) to the opposite class. The volume
    // border counts as background.
    struct Candidate {
        Point3 offset;
        double rho;
        bool foreground;
    };
    std::vector<Candidate> candidates;
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t y = 0; y < d.ny; ++y) {
            for (std::size_t x = 0; x < d.nx; ++x) {
                const bool fg = mask(x, y, z) != 0;
                bool mixed = false;
                for (int dz = -1; dz <= 1 && !mixed; ++dz) {
                    for (int dy = -1; dy <= 1 && !mixed; ++dy) {
                        for (int dx = -1; dx <= 1 && !mixed; ++dx) {
                            const auto nx = static_cast<std::ptrdiff_t>(x) + dx;
                            const auto ny = static_cast<std::ptrdiff_t>(y) + dy;
                            const auto nz = static_cast<std::ptrdiff_t>(z) + dz;
                            const bool nfg = in_volume(d, nx, ny, nz) &&
                                             mask(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                                  static_cast<std::size_t>(nz)) != 0;
                            mixed = nfg != fg;
                        }
                    }
                }
                if (mixed) {
                    const Point3 w{x * sp.sx - c_phys.x, y * sp.sy - c_phys.y, z * sp.sz - c_phys.z};
                    candidates.push_back({w, w.norm(), fg});
                }
            }
        }
    }

    const double tube = std::max({sp.sx, sp.sy, sp.sz});
    const double tube2 = tube * tube;
    const double step = 0.25 * std::min({sp.sx, sp.sy, sp.sz});
    const double reach = std::sqrt(std::pow(d.nx * sp.sx, 2) + std::pow(d.ny * sp.sy, 2) + std::pow(d.nz * sp.sz, 2));

    out.offsets.reserve(rays.size());
    for (const auto& ray : rays) {
        const auto& u = ray.direction;
        double outer_fg = -1.0;
        for (const auto& cand : candidates) {
            if (!cand.foreground) {
                continue;
            }
            const double t = cand.offset.dot(u);
            if (t >= 0.0 && cand.rho * cand.rho - t * t <= tube2) {
                outer_fg = std::max(outer_fg, cand.rho);
            }
        }
        double inner_bg = std::numeric_limits<double>::infinity();
        for (const auto& cand : candidates) {
            if (cand.foreground || cand.rho <= outer_fg) {
                continue;
            }
            const double t = cand.offset.dot(u);
            if (t > 0.0 && cand.rho * cand.rho - t * t <= tube2) {
                inner_bg = std::min(inner_bg, cand.rho);
            }
        }
        double radius = 0.0;
        if (outer_fg >= 0.0 && std::isfinite(inner_bg)) {
            radius = 0.5 * (outer_fg + inner_bg);
        } else if (outer_fg >= 0.0) {
            radius = outer_fg + 0.5 * std::min({sp.sx, sp.sy, sp.sz});
        } else if (std::isfinite(inner_bg)) {
            radius = 0.5 * inner_bg;
        }
        out.offsets.push_back(radius * u);

        // Star-convexity check: count foreground-to-background transitions.
        int exits = 0;
        bool prev = true;
        for (double t = 0.0; t <= reach; t += step) {
            const double px = (c_phys.x + t * u.x) / sp.sx;
            const double py = (c_phys.y + t * u.y) / sp.sy;
            const double pz = (c_phys.z + t * u.z) / sp.sz;
            const auto ix = static_cast<std::ptrdiff_t>(std::lround(px));
            const auto iy = static_cast<std::ptrdiff_t>(std::lround(py));
            const auto iz = static_cast<std::ptrdiff_t>(std::lround(pz));
            const bool inside_volume = in_volume(d, ix, iy, iz);
            const bool cur = inside_volume && mask(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy),
                                                   static_cast<std::size_t>(iz)) != 0;
            if (prev && !cur) {
                ++exits;
            }
            prev = cur;
            if (!inside_volume) {
                break;
            }
        }
        if (exits > 1) {
            ++out.violations;
        }
    }
    return out;
}

Eigen::VectorXd flatten(std::span<const Point3> points) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(3 * points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        v(static_cast<Eigen::Index>(3 * i)) = points[i].x;
        v(static_cast<Eigen::Index>(3 * i + 1)) = points[i].y;
        v(static_cast<Eigen::Index>(3 * i + 2)) = points[i].z;
    }
    return v;
}

std::vector<Point3> unflatten(const Eigen::VectorXd& v) {
    std::vector<Point3> pts(static_cast<std::size_t>(v.size() / 3));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(3 * i);
        pts[i] = {v(k), v(k + 1), v(k + 2)};
    }
    return pts;
}

ShapeModel fit_shape_model_from_points(const std::vector<Eigen::VectorXd>& samples, std::vector<Ray> rays) {
    const auto k = samples.size();
    if (k < 2) {
        throw ParameterError("a shape model needs at least two shapes (got " + std::to_string(k) + ")");
    }
    const auto dim = static_cast<Eigen::Index>(3 * rays.size());
    for (const auto& s : samples) {
        if (s.size() != dim) {
            throw ParameterError("boundary vector length does not match 3 * n_rays");
        }
    }

    ShapeModel model;
    model.n_samples = k;
    model.rays = std::move(rays);
    model.mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : samples) {
        model.mean += s;
    }
    model.mean /= static_cast<double>(k);

    Eigen::MatrixXd centered(dim, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        centered.col(static_cast<Eigen::Index>(j)) = samples[j] - model.mean;
    }

    // Eigenpairs of the 3n x 3n covariance via the k x k Gram matrix: if
    // G a = mu a with G = X^T X / (k-1), then X a is an eigenvector of
    // X X^T / (k-1) with the same eigenvalue and squared norm (k-1) mu.
    const double denom = static_cast<double>(k - 1);
    const Eigen::MatrixXd gram = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const auto& mu = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();

    const double top = mu.size() > 0 ? std::max(0.0, mu(mu.size() - 1)) : 0.0;
    const double cutoff = 1e-10 * std::max(1.0, top);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = mu.size() - 1; i >= 0; --i) {
        if (mu(i) > cutoff) {
            keep.push_back(i);
        }
    }
    model.modes.resize(dim, static_cast<Eigen::Index>(keep.size()));
    model.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const auto i = keep[j];
        Eigen::VectorXd phi = centered * vecs.col(i);
        phi /= phi.norm();
        model.modes.col(static_cast<Eigen::Index>(j)) = phi;
        model.eigenvalues(static_cast<Eigen::Index>(j)) = mu(i);
    }
    return model;
}

ShapeModel fit_shape_model(const std::vector<MaskVolume>& shapes, std::size_t n_rays) {
    if (shapes.size() < 2) {
        throw ParameterError("a shape model needs at least two shapes (got " + std::to_string(shapes.size()) + ")");
    }
    if (n_rays == 0) {
        throw ParameterError("n_rays must be positive");
    }
    auto rays = fibonacci_rays(n_rays);
    std::vector<Eigen::VectorXd> samples;
    std::size_t violations = 0;
    for (const auto& mask : shapes) {
        auto b = sample_boundary(mask, rays);
        violations += b.violations;
        samples.push_back(flatten(b.offsets));
    }
    auto model = fit_shape_model_from_points(samples, std::move(rays));
    model.violations = violations;
    return model;
}

Eigen::VectorXd project(const ShapeModel& model, const Eigen::VectorXd& p) {
    if (p.size() != model.mean.size()) {
        throw ParameterError("projection vector length does not match the model");
    }
    return model.modes.transpose() * (p - model.mean);
}

std::vector<Point3> sample_shape_model(const ShapeModel& model, std::span<const double> b) {
    if (b.size() > model.n_modes()) {
        throw ParameterError("requested " + std::to_string(b.size()) + " modes but the model has " +
                             std::to_string(model.n_modes()));
    }
    Eigen::VectorXd p = model.mean;
    for (std::size_t j = 0; j < b.size(); ++j) {
        const double limit = 3.0 * model.eigenvalues(static_cast<Eigen::Index>(j));
        if (!(std::abs(b[j]) <= limit)) {
            throw ParameterError("mode weight b_" + std::to_string(j + 1) + "=" + std::to_string(b[j]) +
                                 " outside [-3 lambda, 3 lambda] = +-" + std::to_string(limit));
        }
        p += b[j] * model.modes.col(static_cast<Eigen::Index>(j));
    }
    return unflatten(p);
}

std::vector<Point3> sample_shape_model(const ShapeModel& model, std::size_t n_modes, std::mt19937_64& rng) {
    if (n_modes > model.n_modes()) {
        throw ParameterError("requested " + std::to_string(n_modes) + " modes but the model has " +
                             std::to_string(model.n_modes()));
    }
    std::vector<double> b(n_modes);
    for (std::size_t j = 0; j < n_modes; ++j) {
        const double limit = 3.0 * model.eigenvalues(static_cast<Eigen::Index>(j));
        std::uniform_real_distribution<double> dist(-limit, limit);
        b[j] = dist(rng);
    }
    return sample_shape_model(model, b);
}

RasterResult voxelize_boundary_points(std::span<const Point3> offsets, std::span<const Ray> rays, Point3 center,
                                      const Dims& dims, const Spacing& spacing) {
    if (offsets.empty() || offsets.size() != rays.size()) {
        throw ParameterError("boundary points must correspond one-to-one to rays");
    }
    std::vector<double> radii(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        radii[i] = offsets[i].dot(rays[i].direction);
    }

    // Radius lookup table on a theta/phi grid, Gaussian-weighted over nearby rays.
    constexpr int kTheta = 181;
    constexpr int kPhi = 360;
    const double sigma = 0.5 * std::sqrt(4.0 * kPi / static_cast<double>(rays.size()));
    const double cos_cut = std::cos(std::min(kPi, 3.0 * sigma));
    std::vector<double> table(static_cast<std::size_t>(kTheta) * kPhi);
    double r_max = 0.0;
    double r_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kTheta; ++i) {
        const double theta = kPi * i / (kTheta - 1);
        for (int j = 0; j < kPhi; ++j) {
            const double phi = kTwoPi * j / kPhi;
            const Point3 u{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
            double wsum = 0.0, rsum = 0.0;
            double best_dot = -2.0;
            std::size_t best = 0;
            for (std::size_t k = 0; k < rays.size(); ++k) {
                const double c = std::clamp(u.dot(rays[k].direction), -1.0, 1.0);
                if (c > best_dot) {
                    best_dot = c;
                    best = k;
                }
                if (c >= cos_cut) {
                    const double ang = std::acos(c);
                    const double w = std::exp(-0.5 * ang * ang / (sigma * sigma));
                    wsum += w;
                    rsum += w * radii[k];
                }
            }
            const double r = wsum > 0.0 ? rsum / wsum : radii[best];
            table[static_cast<std::size_t>(i) * kPhi + j] = r;
            r_max = std::max(r_max, r);
            r_min = std::min(r_min, r);
        }
    }
    if (r_min < 0.0) {
        throw ParameterError("boundary points yield a negative interpolated radius (" + std::to_string(r_min) + ")");
    }

    auto radius_at = [&](double theta, double phi) {
        const double ft = theta / kPi * (kTheta - 1);
        const double fp = phi / kTwoPi * kPhi;
        const int i0 = std::clamp(static_cast<int>(std::floor(ft)), 0, kTheta - 1);
        const int i1 = std::min(i0 + 1, kTheta - 1);
        const double at = ft - i0;
        const int j0 = static_cast<int>(std::floor(fp)) % kPhi;
        const int j1 = (j0 + 1) % kPhi;
        const double ap = fp - std::floor(fp);
        auto v = [&](int i, int j) { return table[static_cast<std::size_t>(i) * kPhi + j]; };
        return (1 - at) * ((1 - ap) * v(i0, j0) + ap * v(i0, j1)) + at * ((1 - ap) * v(i1, j0) + ap * v(i1, j1));
    };

    RasterResult result{MaskVolume(dims, spacing), false, false};
    std::size_t count = 0;
    result.clipped = scan_star_shape(center, r_max, dims, spacing, radius_at, [&](std::size_t i) {
        result.mask[i] = 1;
        ++count;
    });
    result.degenerate = count <= 1;
    return result;
}

}  // namespace cellsynth
