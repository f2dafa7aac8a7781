#include <doctest.h>

#include <random>
#include <string>

#include "cellsynth/tiling.hpp"

using namespace cellsynth;

namespace {

struct Identity final : Generator {
    VoxelVolume apply(const VoxelVolume& s, const VoxelVolume&, const PatchInfo&) const override { return s; }
};

struct Constant final : Generator {
    float c;
    explicit Constant(float v) : c(v) {}
    VoxelVolume apply(const VoxelVolume& s, const VoxelVolume&, const PatchInfo&) const override {
        return VoxelVolume(s.dims(), s.spacing(), c);
    }
};

struct PatchIndex final : Generator {
    VoxelVolume apply(const VoxelVolume& s, const VoxelVolume&, const PatchInfo& info) const override {
        return VoxelVolume(s.dims(), s.spacing(), static_cast<float>(info.index));
    }
};

struct Shrink final : Generator {
    VoxelVolume apply(const VoxelVolume&, const VoxelVolume&, const PatchInfo&) const override {
        return VoxelVolume(Dims{2, 2, 2});
    }
};

VoxelVolume random_volume(Dims d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    VoxelVolume v(d);
    for (auto& x : v) x = u(rng);
    return v;
}

// Independent coverage count: a voxel is retained by a patch if it lies in
// the patch and is not inside a crop margin that faces another patch.
std::vector<int> brute_coverage(const TilingPlan& p) {
    const auto& d = p.volume;
    std::vector<int> c(d.count(), 0);
    for (const auto& o : p.origins) {
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x) {
                    const std::size_t v[3] = {x, y, z};
                    const std::size_t org[3] = {std::size_t(o.x), std::size_t(o.y), std::size_t(o.z)};
                    bool in = true;
                    for (int a = 0; a < 3 && in; ++a) {
                        const std::size_t lo = org[a] + (org[a] > 0 ? p.crop[a] : 0);
                        const std::size_t hi = org[a] + p.patch[a] - (org[a] + p.patch[a] < d[a] ? p.crop[a] : 0);
                        in = v[a] >= lo && v[a] < hi;
                    }
                    c[(z * d.ny + y) * d.nx + x] += in;
                }
    }
    return c;
}

}  // namespace

TEST_CASE("single patch when the volume equals the patch") {
    const auto p = plan_tiling({128, 128, 64}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15});
    REQUIRE(p.origins.size() == 1);
    CHECK(p.origins[0] == Index3{0, 0, 0});
    for (auto c : coverage_count(p)) REQUIRE(c == 1);
}

TEST_CASE("stride arithmetic for 512x512x112") {
    const auto p = plan_tiling({512, 512, 112}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15});
    CHECK(p.stride == Dims{38, 38, 19});
    CHECK(p.axis_origins[0].size() == 12);
    CHECK(p.axis_origins[1].size() == 12);
    CHECK(p.axis_origins[2].size() == 4);
    CHECK(p.axis_origins[0].back() == 384);
    CHECK(p.axis_origins[2].back() == 48);
    CHECK(p.origins.size() == 12 * 12 * 4);
    for (auto c : coverage_count(p)) REQUIRE(c >= 1);
}

TEST_CASE("coverage against the brute-force count") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 6; ++t) {
        std::uniform_int_distribution<std::size_t> pz(8, 40), crop(0, 5), ov(0, 6);
        const Dims patch{pz(rng), pz(rng), pz(rng)};
        Dims c{crop(rng), crop(rng), crop(rng)}, o{ov(rng), ov(rng), ov(rng)};
        for (int a = 0; a < 3; ++a)
            while (2 * c[a] + o[a] >= patch[a]) c[a] = c[a] ? c[a] - 1 : 0, o[a] = o[a] ? o[a] - 1 : 0;
        std::uniform_int_distribution<std::size_t> extra(0, 60);
        const Dims vol{patch.nx + extra(rng), patch.ny + extra(rng), patch.nz + extra(rng)};
        const auto p = plan_tiling(vol, patch, o, c);
        const auto lib = coverage_count(p);
        const auto ref = brute_coverage(p);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            REQUIRE(ref[i] >= 1);
            REQUIRE(int(lib[i]) == ref[i]);
        }
    }
    // exhaustive check at the size bound
    const auto big = plan_tiling({160, 160, 160}, {64, 64, 48}, {10, 10, 6}, {8, 8, 6});
    for (auto c : coverage_count(big)) REQUIRE(c >= 1);
}

TEST_CASE("consecutive retained regions overlap by exactly the overlap margin") {
    const auto p = plan_tiling({300, 200, 100}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15});
    for (int a = 0; a < 3; ++a) {
        const auto& o = p.axis_origins[std::size_t(a)];
        for (std::size_t k = 0; k + 2 < o.size(); ++k) {
            const auto r0 = p.retained(a, o[k]);
            const auto r1 = p.retained(a, o[k + 1]);
            if (k > 0) CHECK(r0[1] - r1[0] == p.overlap[a]);
        }
    }
}

TEST_CASE("plan errors") {
    CHECK_THROWS_AS((void)plan_tiling({100, 128, 64}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15}), ParameterError);
    CHECK_THROWS_AS((void)plan_tiling({128, 128, 64}, {128, 128, 64}, {30, 30, 15}, {50, 30, 15}), ParameterError);
}

TEST_CASE("plan determinism and scaling") {
    const auto a = plan_tiling({400, 300, 100}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15});
    const auto b = plan_tiling({400, 300, 100}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15});
    CHECK(a.origins == b.origins);
    const auto c = plan_tiling({800, 300, 100}, {128, 128, 64}, {30, 30, 15}, {30, 30, 15});
    const double ratio = double(c.axis_origins[0].size()) / double(a.axis_origins[0].size());
    CHECK(ratio > 1.7);
    CHECK(ratio < 2.3);
}

TEST_CASE("concentric weights") {
    const auto w = concentric_weights({9, 7, 5}, 0.01);
    CHECK(w(4, 3, 2) == 1.0f);
    CHECK(w(0, 0, 0) == doctest::Approx(0.01));
    CHECK(w(8, 6, 4) == doctest::Approx(0.01));
    const auto& d = w.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                REQUIRE(w(x, y, z) > 0.0f);
                REQUIRE(w(x, y, z) <= 1.0f);
                REQUIRE(w(x, y, z) == w(d.nx - 1 - x, y, z));
                REQUIRE(w(x, y, z) == w(x, d.ny - 1 - y, z));
                REQUIRE(w(x, y, z) == w(x, y, d.nz - 1 - z));
            }
    // nonincreasing away from the center along each axis
    for (std::size_t x = 4; x + 1 < 9; ++x) CHECK(w(x + 1, 3, 2) <= w(x, 3, 2));
    const auto even = concentric_weights({8, 8, 8}, 0.05);
    CHECK(even(3, 4, 3) == 1.0f);
    CHECK(even(0, 0, 0) == doctest::Approx(0.05));
    CHECK(concentric_weights({1, 1, 1}, 0.01)(0, 0, 0) == 1.0f);
    CHECK_THROWS_AS((void)concentric_weights({2, 2, 2}, 0.0), ParameterError);
}

TEST_CASE("identity and constant generators reassemble exactly") {
    const auto v = random_volume({150, 140, 90}, 3);
    const VoxelVolume cond(v.dims());
    const auto p = plan_tiling(v.dims(), {64, 64, 32}, {10, 10, 5}, {8, 8, 4});
    const auto out = process_volume(v, cond, Identity{}, p);
    float err = 0;
    for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(out[i] - v[i]));
    CHECK(err < 1e-6f);

    const auto k = process_volume(v, cond, Constant{0.37f}, p);
    for (float x : k) REQUIRE(x == 0.37f);
}

TEST_CASE("reassembly is a convex combination of covering patches") {
    const VoxelVolume v({100, 90, 50});
    const auto p = plan_tiling(v.dims(), {48, 48, 24}, {6, 6, 3}, {5, 5, 2});
    const auto out = process_volume(v, v, PatchIndex{}, p);
    const auto& d = v.dims();
    for (std::size_t z = 0; z < d.nz; z += 3)
        for (std::size_t y = 0; y < d.ny; y += 3)
            for (std::size_t x = 0; x < d.nx; x += 3) {
                double lo = 1e9, hi = -1e9;
                for (std::size_t k = 0; k < p.origins.size(); ++k) {
                    const auto& o = p.origins[k];
                    const auto rx = p.retained(0, o.x), ry = p.retained(1, o.y), rz = p.retained(2, o.z);
                    if (x >= rx[0] && x < rx[1] && y >= ry[0] && y < ry[1] && z >= rz[0] && z < rz[1]) {
                        lo = std::min(lo, double(k));
                        hi = std::max(hi, double(k));
                    }
                }
                REQUIRE(out(x, y, z) >= lo - 1e-4);
                REQUIRE(out(x, y, z) <= hi + 1e-4);
            }
}

TEST_CASE("wrong generator output names the patch origin") {
    const VoxelVolume v({40, 40, 40});
    const auto p = plan_tiling(v.dims(), {20, 20, 20}, {2, 2, 2}, {2, 2, 2});
    try {
        (void)process_volume(v, v, Shrink{}, p);
        FAIL("expected GenerationError");
    } catch (const GenerationError& e) {
        CHECK(std::string(e.what()).find("(0, 0, 0)") != std::string::npos);
    }
    CHECK_THROWS_AS((void)process_volume(VoxelVolume({39, 40, 40}), v, Identity{}, p), ParameterError);
}

TEST_CASE("tiled rendering matches a whole-volume render away from volume borders") {
    // blur support (ceil(3 sigma)) is smaller than the crop, and noise is keyed
    // to global coordinates, so every retained voxel sees identical inputs.
    const auto m = random_volume({120, 100, 60}, 9);
    const VoxelVolume cond(m.dims());
    RenderParams rp;
    rp.psf_sigma = {1.5, 1.5, 1.0};
    const ClassicalRenderer r(rp);
    const auto p = plan_tiling(m.dims(), {64, 64, 32}, {10, 10, 5}, {8, 8, 4});
    const auto tiled = process_volume(m, cond, r, p);
    const auto whole = render_patch(m, cond, rp);
    float err = 0;
    for (std::size_t i = 0; i < m.size(); ++i) err = std::max(err, std::abs(tiled[i] - whole[i]));
    CHECK(err < 1e-5f);
}
