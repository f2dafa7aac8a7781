#include "cellsynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <tuple>

#include <fftw3.h>

#include "cellsynth/morphology.hpp"

namespace cellsynth {
namespace {

void same_dims_or_throw(const Dims& a, const Dims& b) {
    if (!(a == b)) {
        throw ParameterError("volumes differ in dims");
    }
}

double value_range(const VoxelVolume& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return static_cast<double>(*hi) - static_cast<double>(*lo);
}

// Sums over every w^3 window, one running-sum pass per axis. Output dims are
// (n - w + 1) per axis.
std::vector<double> box_sums(std::vector<double> f, Dims d, std::size_t w) {
    for (int axis = 0; axis < 3; ++axis) {
        Dims o = d;
        o[axis] = d[axis] - w + 1;
        std::vector<double> g(o.count());
        for (std::size_t z = 0; z < o.nz; ++z) {
            for (std::size_t y = 0; y < o.ny; ++y) {
                for (std::size_t x = 0; x < o.nx; ++x) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < w; ++k) {
                        const std::size_t xx = x + (axis == 0 ? k : 0);
                        const std::size_t yy = y + (axis == 1 ? k : 0);
                        const std::size_t zz = z + (axis == 2 ? k : 0);
                        s += f[(zz * d.ny + yy) * d.nx + xx];
                    }
                    g[(z * o.ny + y) * o.nx + x] = s;
                }
            }
        }
        f = std::move(g);
        d = o;
    }
    return f;
}

}  // namespace

double nrmse(const VoxelVolume& a, const VoxelVolume& b) {
    same_dims_or_throw(a.dims(), b.dims());
    if (a.empty()) {
        throw ParameterError("nrmse of empty volumes");
    }
    const double range = value_range(a);
    if (!(range > 0.0)) {
        throw ParameterError("nrmse reference is constant (range 0)");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.size())) / range;
}

double ssim(const VoxelVolume& a, const VoxelVolume& b, std::size_t window, double k1, double k2) {
    same_dims_or_throw(a.dims(), b.dims());
    const auto& d = a.dims();
    if (window < 2 || d.nx < window || d.ny < window || d.nz < window) {
        throw ParameterError("ssim window " + std::to_string(window) + " does not fit the volume");
    }
    const double L = value_range(a);
    if (!(L > 0.0)) {
        throw ParameterError("ssim reference is constant (range 0)");
    }
    const std::size_t n = d.count();
    std::vector<double> va(n), vb(n), vaa(n), vbb(n), vab(n);
    for (std::size_t i = 0; i < n; ++i) {
        va[i] = a[i];
        vb[i] = b[i];
        vaa[i] = va[i] * va[i];
        vbb[i] = vb[i] * vb[i];
        vab[i] = va[i] * vb[i];
    }
    const auto sa = box_sums(std::move(va), d, window);
    const auto sb = box_sums(std::move(vb), d, window);
    const auto saa = box_sums(std::move(vaa), d, window);
    const auto sbb = box_sums(std::move(vbb), d, window);
    const auto sab = box_sums(std::move(vab), d, window);

    const double np = static_cast<double>(window * window * window);
    const double cov_norm = np / (np - 1.0);
    const double c1 = (k1 * L) * (k1 * L);
    const double c2 = (k2 * L) * (k2 * L);
    double total = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const double ux = sa[i] / np;
        const double uy = sb[i] / np;
        const double vx = cov_norm * (saa[i] / np - ux * ux);
        const double vy = cov_norm * (sbb[i] / np - uy * uy);
        const double vxy = cov_norm * (sab[i] / np - ux * uy);
        total += ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(sa.size());
}

double zncc(const VoxelVolume& a, const VoxelVolume& b) {
    same_dims_or_throw(a.dims(), b.dims());
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - ma;
        const double y = b[i] - mb;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        throw ParameterError("zncc undefined for a constant volume");
    }
    return sab / std::sqrt(saa * sbb);
}

QualityReport quality_report(const VoxelVolume& reference, const VoxelVolume& other) {
    return {nrmse(reference, other), ssim(reference, other), zncc(reference, other)};
}

double tolerant_iou(const VoxelVolume& prediction, const MaskVolume& truth, double threshold, int tolerance_voxels) {
    same_dims_or_throw(prediction.dims(), truth.dims());
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ParameterError("threshold must lie in (0, 1)");
    }
    if (tolerance_voxels < 0) {
        throw ParameterError("tolerance must be >= 0");
    }
    MaskVolume p(prediction.dims(), prediction.spacing());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = prediction[i] > threshold ? 1 : 0;
    }
    const auto np = count_foreground(p);
    const auto nt = count_foreground(truth);
    if (np == 0 && nt == 0) {
        return 1.0;
    }
    if (nt == 0) {
        return 0.0;
    }
    const auto dt = dilate(truth, tolerance_voxels);
    const auto dp = dilate(p, tolerance_voxels);
    std::size_t hit_p = 0, hit_t = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        hit_p += (p[i] && dt[i]);
        hit_t += (truth[i] && dp[i]);
    }
    return static_cast<double>(hit_p + hit_t) / static_cast<double>(np + nt);
}

double instance_iou(const LabelVolume& prediction, const LabelVolume& truth) {
    same_dims_or_throw(prediction.dims(), truth.dims());
    std::map<std::uint32_t, std::size_t> t_size, p_size;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> inter;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = truth[i];
        const auto p = prediction[i];
        if (t) ++t_size[t];
        if (p) ++p_size[p];
        if (t && p) ++inter[{t, p}];
    }
    if (t_size.empty()) {
        throw ParameterError("instance IoU needs at least one truth instance");
    }
    struct Cand {
        double iou;
        std::size_t t_size;
        std::uint32_t t, p;
    };
    std::vector<Cand> cand;
    cand.reserve(inter.size());
    for (const auto& [key, n] : inter) {
        const auto ts = t_size[key.first];
        const auto ps = p_size[key.second];
        cand.push_back({static_cast<double>(n) / static_cast<double>(ts + ps - n), ts, key.first, key.second});
    }
    std::sort(cand.begin(), cand.end(), [](const Cand& x, const Cand& y) {
        return std::tie(y.iou, y.t_size, x.t, x.p) < std::tie(x.iou, x.t_size, y.t, y.p);
    });
    std::map<std::uint32_t, double> best;
    std::map<std::uint32_t, bool> used;
    for (const auto& c : cand) {
        if (best.contains(c.t) || used[c.p]) {
            continue;
        }
        best[c.t] = c.iou;
        used[c.p] = true;
    }
    double sum = 0.0;
    for (const auto& [t, iou] : best) {
        sum += iou;
    }
    return sum / static_cast<double>(t_size.size());
}

void SegEvalConfig::validate() const {
    for (const double t : {t_background, t_membrane, t_centroid}) {
        if (!(t > 0.0 && t < 1.0)) {
            throw ParameterError("segmentation thresholds must lie in (0, 1)");
        }
    }
    if (tol_background < 0 || tol_membrane < 0 || tol_centroid < 0) {
        throw ParameterError("segmentation tolerances must be >= 0");
    }
}

SegScores evaluate_segmentation(const VoxelVolume& p_background, const MaskVolume& t_background,
                                const VoxelVolume& p_membrane, const MaskVolume& t_membrane,
                                const VoxelVolume& p_centroid, const MaskVolume& t_centroid,
                                const SegEvalConfig& config) {
    config.validate();
    return {tolerant_iou(p_background, t_background, config.t_background, config.tol_background),
            tolerant_iou(p_membrane, t_membrane, config.t_membrane, config.tol_membrane),
            tolerant_iou(p_centroid, t_centroid, config.t_centroid, config.tol_centroid)};
}

std::vector<double> center_xz_slice(const VoxelVolume& v) {
    const auto& d = v.dims();
    if (v.empty()) {
        throw ParameterError("empty volume has no center slice");
    }
    const std::size_t y = d.ny / 2;
    std::vector<double> s(d.nx * d.nz);
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t x = 0; x < d.nx; ++x) {
            s[z * d.nx + x] = v(x, y, z);
        }
    }
    return s;
}

std::vector<double> intensity_profile(const VoxelVolume& v) {
    const auto s = center_xz_slice(v);
    const auto& d = v.dims();
    std::vector<double> p(d.nx, 0.0);
    for (std::size_t z = 0; z < d.nz; ++z) {
        for (std::size_t x = 0; x < d.nx; ++x) {
            p[x] += s[z * d.nx + x];
        }
    }
    return p;
}

Spectrum intensity_spectrum(const VoxelVolume& v) {
    const auto s = center_xz_slice(v);
    const auto& d = v.dims();
    Spectrum out;
    out.nx = d.nx;
    out.nz = d.nz;
    const std::size_t n = d.nx * d.nz;

    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buf == nullptr) {
        throw std::bad_alloc();
    }
    const fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(d.nz), static_cast<int>(d.nx), buf, buf,
                                            FFTW_FORWARD, FFTW_ESTIMATE);
    for (std::size_t i = 0; i < n; ++i) {
        buf[i][0] = s[i];
        buf[i][1] = 0.0;
    }
    fftw_execute(plan);

    out.magnitude.assign(n, 0.0);
    out.log_magnitude.assign(n, 0.0);
    for (std::size_t kz = 0; kz < d.nz; ++kz) {
        for (std::size_t kx = 0; kx < d.nx; ++kx) {
            const std::size_t src = kz * d.nx + kx;
            const std::size_t dst = ((kz + d.nz / 2) % d.nz) * d.nx + (kx + d.nx / 2) % d.nx;
            const double m = std::hypot(buf[src][0], buf[src][1]);
            out.magnitude[dst] = m;
            out.log_magnitude[dst] = std::log1p(m);
        }
    }
    fftw_destroy_plan(plan);
    fftw_free(buf);
    return out;
}

}  // namespace cellsynth
