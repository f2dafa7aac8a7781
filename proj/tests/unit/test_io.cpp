#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cellsynth/io.hpp"

using namespace cellsynth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "cellsynth_io_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("tiff16 round trip") {
    std::mt19937_64 rng(1);
    Stack16 s{{13, 7, 5}, {}};
    s.data.resize(s.dims.count());
    for (auto& v : s.data) v = static_cast<std::uint16_t>(rng());
    const auto p = scratch("stack.tif");
    write_tiff16(p, s);
    const auto r = read_tiff16(p);
    CHECK(r.dims == s.dims);
    CHECK(r.data == s.data);
}

TEST_CASE("image export quantizes [0,1] to 16 bits") {
    VoxelVolume v({9, 8, 3}, {0.5, 0.5, 2.0});
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(-0.2f, 1.2f);
    for (auto& x : v) x = u(rng);
    const auto p = scratch("image.tif");
    save_image(p, v);
    write_sidecar(p, v.dims(), v.spacing(), "image");
    const auto r = load_image(p);
    CHECK(r.spacing() == v.spacing());
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(std::abs(r[i] - std::clamp(v[i], 0.0f, 1.0f)) <= 0.5f / 65535.0f + 1e-7f);
    }
}

TEST_CASE("labels and masks") {
    LabelVolume l({4, 4, 4});
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<std::uint32_t>(i * 997 % 65536);
    const auto p = scratch("labels.tif");
    save_labels(p, l);
    CHECK(load_labels(p) == l);
    l[3] = 70000;
    CHECK_THROWS_AS(save_labels(p, l), ParameterError);

    MaskVolume m({5, 3, 2});
    m[4] = 1;
    m[17] = 1;
    const auto q = scratch("mask.tif");
    save_mask(q, m);
    CHECK(load_mask(q) == m);
}

TEST_CASE("raw float container round trip") {
    VoxelVolume v({6, 5, 4}, {1.0, 2.0, 3.5});
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(float(i)) * 3.0f;
    const auto p = scratch("cond.vol");
    save_raw(p, v);
    CHECK(load_raw(p) == v);
}

TEST_CASE("big-endian 8-bit pages with two strips are readable") {
    // 3x2 image, one page, rows split over two strips.
    std::string b = "MM";
    auto p16 = [&](std::uint16_t x) { b.push_back(char(x >> 8)); b.push_back(char(x & 0xff)); };
    auto p32 = [&](std::uint32_t x) { p16(std::uint16_t(x >> 16)); p16(std::uint16_t(x & 0xffff)); };
    p16(42);
    p32(8);
    const std::uint16_t n = 8;
    const std::uint32_t ifd_end = 8 + 2 + 12 * n + 4;
    const std::uint32_t arrays = ifd_end;        // strip offsets (2 x u32), counts (2 x u32)
    const std::uint32_t pixels = arrays + 16;
    p16(n);
    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
        p16(tag); p16(type); p32(count);
        if (type == 3 && count == 1) { p16(std::uint16_t(value)); p16(0); } else p32(value);
    };
    entry(256, 3, 1, 3);
    entry(257, 3, 1, 2);
    entry(258, 3, 1, 8);
    entry(259, 3, 1, 1);
    entry(262, 3, 1, 1);
    entry(273, 4, 2, arrays);
    entry(278, 3, 1, 1);
    entry(279, 4, 2, arrays + 8);
    p32(0);
    p32(pixels); p32(pixels + 3);
    p32(3); p32(3);
    for (char c : {1, 2, 3, 4, 5, 6}) b.push_back(c);
    const auto path = scratch("be.tif");
    std::ofstream(path, std::ios::binary) << b;
    const auto s = read_tiff16(path);
    CHECK(s.dims == Dims{3, 2, 1});
    CHECK(s.data == std::vector<std::uint16_t>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("corrupt files raise IoError") {
    const auto p = scratch("bad.tif");
    std::ofstream(p, std::ios::binary) << "IIxx0000";
    CHECK_THROWS_AS((void)read_tiff16(p), IoError);
    CHECK_THROWS_AS((void)read_tiff16(scratch("missing.tif")), IoError);
    CHECK_THROWS_AS((void)load_raw(p), IoError);
}

TEST_CASE("checksums differ on a single changed byte") {
    const auto a = scratch("a.bin"), b = scratch("b.bin");
    std::ofstream(a, std::ios::binary) << "hello world";
    std::ofstream(b, std::ios::binary) << "hello worle";
    CHECK(file_checksum(a) != file_checksum(b));
    CHECK(file_checksum(a) == file_checksum(a));
    CHECK(file_checksum(a).size() == 16);
}
