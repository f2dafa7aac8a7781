#include <doctest.h>

#include <algorithm>
#include <random>

#include "cellsynth/augment.hpp"

using namespace cellsynth;

namespace {

VoxelVolume ramp_volume(Dims d) {
    VoxelVolume v(d);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1f + 0.8f * float(i % 97) / 97.0f;
    return v;
}

bool inside(const AugmentRecord& r, std::size_t x, std::size_t y, std::size_t z) {
    return x >= std::size_t(r.origin.x) && x < r.origin.x + r.region.nx && y >= std::size_t(r.origin.y) &&
           y < r.origin.y + r.region.ny && z >= std::size_t(r.origin.z) && z < r.origin.z + r.region.nz;
}

}  // namespace

TEST_CASE("p_aug = 0 is the identity") {
    std::mt19937_64 rng(1);
    const auto v = ramp_volume({30, 30, 30});
    const auto ops = default_augmentations();
    const auto r = apply_augmentations(v, ops, 0.0, rng);
    CHECK(r.image == v);
    for (const auto& rec : r.log) CHECK_FALSE(rec.applied);
}

TEST_CASE("intensity scale stays in [0.6, 1.2]") {
    const auto v = ramp_volume({10, 10, 10});
    const std::vector<AugmentKind> ops{AugmentKind::intensity_scale};
    for (int s = 0; s < 200; ++s) {
        std::mt19937_64 rng(s);
        const auto r = apply_augmentations(v, ops, 1.0, rng);
        const double k = r.log[0].value;
        REQUIRE(k >= 0.6);
        REQUIRE(k <= 1.2);
        for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(r.image[i] == static_cast<float>(k * v[i]));
    }
}

TEST_CASE("gaussian noise has sd 0.1") {
    std::mt19937_64 rng(2);
    const VoxelVolume v({40, 40, 40}, {}, 0.5f);
    const std::vector<AugmentKind> ops{AugmentKind::gaussian_noise};
    const auto r = apply_augmentations(v, ops, 1.0, rng);
    double m = 0, s = 0;
    for (float x : r.image) m += x;
    m /= double(v.size());
    for (float x : r.image) s += (x - m) * (x - m);
    CHECK(m == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::sqrt(s / double(v.size())) == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("voxel shuffle preserves the region multiset and nothing else changes") {
    const auto v = ramp_volume({40, 36, 32});
    const std::vector<AugmentKind> ops{AugmentKind::voxel_shuffle};
    for (int s = 0; s < 10; ++s) {
        std::mt19937_64 rng(100 + s);
        const auto r = apply_augmentations(v, ops, 1.0, rng);
        const auto& rec = r.log[0];
        CHECK(rec.region == Dims{25, 25, 25});
        CHECK_FALSE(rec.clamped);
        std::vector<float> before, after;
        const auto& d = v.dims();
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x) {
                    if (inside(rec, x, y, z)) {
                        before.push_back(v(x, y, z));
                        after.push_back(r.image(x, y, z));
                    } else {
                        REQUIRE(r.image(x, y, z) == v(x, y, z));
                    }
                }
        CHECK(before.size() == 25u * 25u * 25u);
        std::sort(before.begin(), before.end());
        std::sort(after.begin(), after.end());
        CHECK(before == after);
    }
}

TEST_CASE("inpaint fills a 15^3 region with the patch mean") {
    std::mt19937_64 rng(3);
    const auto v = ramp_volume({30, 30, 30});
    const std::vector<AugmentKind> ops{AugmentKind::inpaint};
    const auto r = apply_augmentations(v, ops, 1.0, rng);
    const auto& rec = r.log[0];
    CHECK(rec.region == Dims{15, 15, 15});
    double mean = 0;
    for (float x : v) mean += x;
    mean /= double(v.size());
    const auto& d = v.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                REQUIRE(r.image(x, y, z) == (inside(rec, x, y, z) ? static_cast<float>(mean) : v(x, y, z)));
}

TEST_CASE("regions larger than the patch are clamped and flagged") {
    std::mt19937_64 rng(4);
    const auto v = ramp_volume({20, 30, 10});
    const std::vector<AugmentKind> ops{AugmentKind::voxel_shuffle, AugmentKind::inpaint};
    const auto r = apply_augmentations(v, ops, 1.0, rng);
    CHECK(r.log[0].clamped);
    CHECK(r.log[0].region == Dims{20, 25, 10});
    CHECK(r.log[1].clamped);
    CHECK(r.log[1].region == Dims{15, 15, 10});
}

TEST_CASE("linear ramp factor decreases monotonically to the sampled minimum") {
    const VoxelVolume v({12, 14, 16}, {}, 1.0f);
    const std::vector<AugmentKind> ops{AugmentKind::linear_ramp};
    for (int s = 0; s < 30; ++s) {
        std::mt19937_64 rng(s);
        const auto r = apply_augmentations(v, ops, 1.0, rng);
        const auto& rec = r.log[0];
        REQUIRE(rec.value >= 0.3);
        REQUIRE(rec.value <= 0.9);
        const std::size_t n = v.dims()[rec.axis];
        float prev = 2.0f;
        for (std::size_t i = 0; i < n; ++i) {
            const float f = rec.axis == 0 ? r.image(i, 3, 3) : rec.axis == 1 ? r.image(3, i, 3) : r.image(3, 3, i);
            REQUIRE(f <= prev);
            prev = f;
        }
        const float first = rec.axis == 0 ? r.image(0, 5, 5) : rec.axis == 1 ? r.image(5, 0, 5) : r.image(5, 5, 0);
        CHECK(first == 1.0f);
        CHECK(prev == doctest::Approx(rec.value));
    }
}

TEST_CASE("gating follows p_aug") {
    std::mt19937_64 rng(5);
    const auto v = ramp_volume({4, 4, 4});
    const std::vector<AugmentKind> ops{AugmentKind::intensity_scale};
    int applied = 0;
    for (int k = 0; k < 4000; ++k) applied += apply_augmentations(v, ops, 0.3, rng).log[0].applied;
    CHECK(applied / 4000.0 == doctest::Approx(0.3).epsilon(0.1));
    CHECK_THROWS_AS((void)apply_augmentations(v, ops, 1.5, rng), ParameterError);
}

TEST_CASE("r_ada estimate") {
    const std::vector<double> pos{1, 2, 0.1};
    const std::vector<double> half{1, -1, 2, -2};
    const std::vector<double> mixed{2, 1, -3, 0.5};
    const std::vector<double> zero{0, 1};
    CHECK(estimate_r_ada(pos) == 1.0);
    CHECK(estimate_r_ada(half) == 0.0);
    CHECK(estimate_r_ada(mixed) == 0.5);
    CHECK(estimate_r_ada(zero) == 0.5);
    CHECK_THROWS_AS((void)estimate_r_ada(std::vector<double>{}), ParameterError);
}

TEST_CASE("controller steps") {
    AdaController c(AdaConfig{0.6, 0.05, 1, 0.5});
    c.step(1.0, 0);
    CHECK(c.p() == doctest::Approx(0.55));
    c.step(0.6, 1);
    CHECK(c.p() == doctest::Approx(0.55));
    AdaController z;
    z.step(0.2, 0);
    CHECK(z.p() == 0.0);
    AdaController top(AdaConfig{0.6, 0.05, 1, 1.0});
    top.step(0.9, 0);
    CHECK(top.p() == 1.0);
    CHECK_THROWS_AS(top.step(0.9, -1), ParameterError);
}

TEST_CASE("controller only updates on period boundaries and resets the running mean") {
    AdaController c(AdaConfig{0.6, 0.05, 3, 0.2});
    const std::vector<double> pos{1, 1, 1};
    for (int e = 1; e <= 6; ++e) {
        c.observe(pos);
        const bool u = c.end_epoch(e);
        CHECK(u == (e % 3 == 0));
    }
    CHECK(c.p() == doctest::Approx(0.3));
    CHECK(std::isnan(c.running_estimate()));
    CHECK_FALSE(c.end_epoch(9));  // nothing observed
    CHECK(c.p() == doctest::Approx(0.3));
}

TEST_CASE("closed loop settles near the target") {
    std::mt19937_64 rng(7);
    AdaController c;
    std::vector<double> r_hist;
    for (int e = 0; e < 500; ++e) {
        const double r_true = 0.9 * (1.0 - c.p());
        std::bernoulli_distribution correct((1.0 + r_true) / 2.0);
        std::vector<double> d(4000);
        for (auto& x : d) x = correct(rng) ? 1.0 : -1.0;
        c.observe(d);
        r_hist.push_back(c.running_estimate());
        c.end_epoch(e);
    }
    std::size_t first = r_hist.size();
    for (std::size_t i = 0; i < r_hist.size(); ++i)
        if (r_hist[i] >= 0.5 && r_hist[i] <= 0.7) {
            first = i;
            break;
        }
    CHECK(first < 200);
    for (std::size_t i = first; i < std::min(first + 300, r_hist.size()); ++i) REQUIRE((r_hist[i] >= 0.5 && r_hist[i] <= 0.7));
}
