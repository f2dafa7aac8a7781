#include "cellsynth/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace cellsynth {
namespace {

namespace fs = std::filesystem;

constexpr char kRawMagic[8] = {'C', 'S', 'V', 'O', 'L', '1', '\0', '\0'};

std::vector<char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void put_entry(std::string& out, std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
    put16(out, tag);
    put16(out, type);
    put32(out, count);
    if (type == 3 && count == 1) {
        put16(out, static_cast<std::uint16_t>(value));
        put16(out, 0);
    } else {
        put32(out, value);
    }
}

// Bounds-checked reads with the file's byte order.
class TiffBuffer {
public:
    explicit TiffBuffer(std::vector<char> bytes, const fs::path& path) : b_(std::move(bytes)), path_(path) {
        if (b_.size() < 8) {
            fail("file too short");
        }
        if (b_[0] == 'I' && b_[1] == 'I') {
            big_ = false;
        } else if (b_[0] == 'M' && b_[1] == 'M') {
            big_ = true;
        } else {
            fail("missing byte-order mark");
        }
        if (u16(2) != 42) {
            fail("not a classic TIFF (magic != 42)");
        }
    }

    [[nodiscard]] std::uint16_t u16(std::size_t off) const {
        need(off, 2);
        const auto a = static_cast<unsigned char>(b_[off]);
        const auto c = static_cast<unsigned char>(b_[off + 1]);
        return big_ ? static_cast<std::uint16_t>((a << 8) | c) : static_cast<std::uint16_t>((c << 8) | a);
    }
    [[nodiscard]] std::uint32_t u32(std::size_t off) const {
        const std::uint32_t lo = u16(off);
        const std::uint32_t hi = u16(off + 2);
        return big_ ? (lo << 16) | hi : (hi << 16) | lo;
    }
    [[nodiscard]] std::uint8_t u8(std::size_t off) const {
        need(off, 1);
        return static_cast<std::uint8_t>(b_[off]);
    }
    [[nodiscard]] std::size_t size() const noexcept { return b_.size(); }

    [[noreturn]] void fail(const std::string& what) const {
        throw IoError(path_.string() + ": " + what);
    }

private:
    void need(std::size_t off, std::size_t n) const {
        if (off + n > b_.size()) {
            fail("truncated at offset " + std::to_string(off));
        }
    }

    std::vector<char> b_;
    fs::path path_;
    bool big_ = false;
};

struct Page {
    std::uint32_t width = 0, height = 0, bits = 0, compression = 1, samples = 1, rows_per_strip = 0;
    std::vector<std::uint32_t> offsets, counts;
};

std::vector<std::uint32_t> read_values(const TiffBuffer& t, std::uint16_t type, std::uint32_t count,
                                       std::size_t value_field) {
    const std::size_t width = type == 3 ? 2 : 4;
    const std::size_t base = count * width <= 4 ? value_field : t.u32(value_field);
    std::vector<std::uint32_t> out(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        out[i] = type == 3 ? t.u16(base + i * 2) : t.u32(base + i * 4);
    }
    return out;
}

Page read_page(const TiffBuffer& t, std::size_t ifd) {
    Page p;
    const auto n = t.u16(ifd);
    for (std::uint16_t e = 0; e < n; ++e) {
        const std::size_t at = ifd + 2 + 12u * e;
        const auto tag = t.u16(at);
        const auto type = t.u16(at + 2);
        const auto count = t.u32(at + 4);
        if (type != 3 && type != 4) {
            continue;
        }
        auto first = [&] { return read_values(t, type, 1, at + 8).front(); };
        switch (tag) {
            case 256: p.width = first(); break;
            case 257: p.height = first(); break;
            case 258: p.bits = first(); break;
            case 259: p.compression = first(); break;
            case 277: p.samples = first(); break;
            case 278: p.rows_per_strip = first(); break;
            case 273: p.offsets = read_values(t, type, count, at + 8); break;
            case 279: p.counts = read_values(t, type, count, at + 8); break;
            default: break;
        }
    }
    return p;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

}  // namespace

void write_tiff16(const fs::path& path, const Stack16& stack) {
    const auto& d = stack.dims;
    if (stack.data.size() != d.count() || d.count() == 0) {
        throw ParameterError("stack data does not match dims");
    }
    const std::size_t page_bytes = d.nx * d.ny * 2;
    constexpr std::uint16_t kEntries = 10;
    const std::size_t ifd_bytes = 2 + 12 * kEntries + 4;
    if (8 + d.nz * (page_bytes + ifd_bytes) > 0xffffffffULL) {
        throw IoError("volume too large for a classic TIFF: " + path.string());
    }

    std::string out;
    out.reserve(8 + d.nz * (page_bytes + ifd_bytes));
    out += "II";
    put16(out, 42);
    put32(out, 8);

    for (std::size_t z = 0; z < d.nz; ++z) {
        const auto ifd_at = static_cast<std::uint32_t>(out.size());
        const auto data_at = static_cast<std::uint32_t>(ifd_at + ifd_bytes);
        const auto next = z + 1 < d.nz ? static_cast<std::uint32_t>(data_at + page_bytes) : 0u;
        put16(out, kEntries);
        put_entry(out, 254, 4, 1, d.nz > 1 ? 2u : 0u);  // page of a multi-page file
        put_entry(out, 256, 4, 1, static_cast<std::uint32_t>(d.nx));
        put_entry(out, 257, 4, 1, static_cast<std::uint32_t>(d.ny));
        put_entry(out, 258, 3, 1, 16);
        put_entry(out, 259, 3, 1, 1);
        put_entry(out, 262, 3, 1, 1);  // min-is-black
        put_entry(out, 273, 4, 1, data_at);
        put_entry(out, 277, 3, 1, 1);
        put_entry(out, 278, 4, 1, static_cast<std::uint32_t>(d.ny));
        put_entry(out, 279, 4, 1, static_cast<std::uint32_t>(page_bytes));
        put32(out, next);
        const auto* page = stack.data.data() + z * d.nx * d.ny;
        for (std::size_t i = 0; i < d.nx * d.ny; ++i) {
            put16(out, page[i]);
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw IoError("write failed: " + path.string());
    }
}

Stack16 read_tiff16(const fs::path& path) {
    const TiffBuffer t(slurp(path), path);
    std::vector<Page> pages;
    std::size_t ifd = t.u32(4);
    while (ifd != 0) {
        if (pages.size() > 1'000'000) {
            t.fail("IFD chain does not terminate");
        }
        pages.push_back(read_page(t, ifd));
        ifd = t.u32(ifd + 2 + 12u * t.u16(ifd));
    }
    if (pages.empty()) {
        t.fail("no pages");
    }

    Stack16 s;
    s.dims = {pages[0].width, pages[0].height, pages.size()};
    s.data.resize(s.dims.count());
    for (std::size_t z = 0; z < pages.size(); ++z) {
        const auto& p = pages[z];
        if (p.width != s.dims.nx || p.height != s.dims.ny) {
            t.fail("page " + std::to_string(z) + " has a different size");
        }
        if (p.compression != 1 || p.samples != 1 || (p.bits != 8 && p.bits != 16)) {
            t.fail("only uncompressed single-channel 8/16-bit pages are supported");
        }
        if (p.offsets.empty() || p.offsets.size() != p.counts.size()) {
            t.fail("page " + std::to_string(z) + " has inconsistent strips");
        }
        const std::size_t bytes_per = p.bits / 8;
        const std::size_t total = s.dims.nx * s.dims.ny;
        std::size_t k = 0;
        auto* dst = s.data.data() + z * total;
        for (std::size_t strip = 0; strip < p.offsets.size() && k < total; ++strip) {
            const std::size_t n = std::min<std::size_t>(p.counts[strip] / bytes_per, total - k);
            for (std::size_t i = 0; i < n; ++i, ++k) {
                dst[k] = bytes_per == 2 ? t.u16(p.offsets[strip] + 2 * i) : t.u8(p.offsets[strip] + i);
            }
        }
        if (k != total) {
            t.fail("page " + std::to_string(z) + " holds too few samples");
        }
    }
    return s;
}

void save_image(const fs::path& path, const VoxelVolume& image) {
    Stack16 s{image.dims(), std::vector<std::uint16_t>(image.size())};
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = std::clamp(static_cast<double>(image[i]), 0.0, 1.0);
        s.data[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
    write_tiff16(path, s);
}

VoxelVolume load_image(const fs::path& path) {
    auto s = read_tiff16(path);
    VoxelVolume v(s.dims, read_sidecar_spacing(path));
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        v[i] = static_cast<float>(s.data[i] / 65535.0);
    }
    return v;
}

void save_labels(const fs::path& path, const LabelVolume& labels) {
    Stack16 s{labels.dims(), std::vector<std::uint16_t>(labels.size())};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 0xffff) {
            throw ParameterError("label " + std::to_string(labels[i]) + " does not fit 16 bits");
        }
        s.data[i] = static_cast<std::uint16_t>(labels[i]);
    }
    write_tiff16(path, s);
}

LabelVolume load_labels(const fs::path& path) {
    auto s = read_tiff16(path);
    LabelVolume v(s.dims, read_sidecar_spacing(path));
    std::copy(s.data.begin(), s.data.end(), v.begin());
    return v;
}

void save_mask(const fs::path& path, const MaskVolume& mask) {
    Stack16 s{mask.dims(), std::vector<std::uint16_t>(mask.size())};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        s.data[i] = mask[i] ? 1 : 0;
    }
    write_tiff16(path, s);
}

MaskVolume load_mask(const fs::path& path) {
    auto s = read_tiff16(path);
    MaskVolume v(s.dims, read_sidecar_spacing(path));
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        v[i] = s.data[i] ? 1 : 0;
    }
    return v;
}

void save_raw(const fs::path& path, const VoxelVolume& volume) {
    static_assert(std::endian::native == std::endian::little, "raw format writer assumes a little-endian host");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
    f.write(kRawMagic, sizeof kRawMagic);
    const auto& d = volume.dims();
    const std::array<std::uint32_t, 3> n{static_cast<std::uint32_t>(d.nx), static_cast<std::uint32_t>(d.ny),
                                         static_cast<std::uint32_t>(d.nz)};
    const auto& sp = volume.spacing();
    const std::array<double, 3> s{sp.sx, sp.sy, sp.sz};
    f.write(reinterpret_cast<const char*>(n.data()), sizeof n);
    f.write(reinterpret_cast<const char*>(s.data()), sizeof s);
    f.write(reinterpret_cast<const char*>(volume.data().data()),
            static_cast<std::streamsize>(volume.size() * sizeof(float)));
    if (!f) {
        throw IoError("write failed: " + path.string());
    }
}

VoxelVolume load_raw(const fs::path& path) {
    const auto b = slurp(path);
    constexpr std::size_t header = 8 + 12 + 24;
    if (b.size() < header || std::memcmp(b.data(), kRawMagic, 8) != 0) {
        throw IoError(path.string() + ": not a raw volume");
    }
    std::array<std::uint32_t, 3> n{};
    std::array<double, 3> s{};
    std::memcpy(n.data(), b.data() + 8, sizeof n);
    std::memcpy(s.data(), b.data() + 20, sizeof s);
    const Dims dims{n[0], n[1], n[2]};
    if (b.size() != header + dims.count() * sizeof(float)) {
        throw IoError(path.string() + ": payload length does not match header");
    }
    VoxelVolume v(dims, Spacing{s[0], s[1], s[2]});
    std::memcpy(v.data().data(), b.data() + header, dims.count() * sizeof(float));
    return v;
}

fs::path sidecar_path(const fs::path& volume_path) {
    return fs::path(volume_path.string() + ".json");
}

void write_sidecar(const fs::path& volume_path, const Dims& dims, const Spacing& spacing, const std::string& kind,
                   const std::string& provenance_json) {
    nlohmann::ordered_json j;
    j["kind"] = kind;
    j["dims"] = {dims.nx, dims.ny, dims.nz};
    j["spacing"] = {spacing.sx, spacing.sy, spacing.sz};
    j["provenance"] = nlohmann::ordered_json::parse(provenance_json);
    std::ofstream f(sidecar_path(volume_path), std::ios::trunc);
    if (!f) {
        throw IoError("cannot write sidecar for " + volume_path.string());
    }
    f << j.dump(2) << '\n';
}

Spacing read_sidecar_spacing(const fs::path& volume_path) {
    const auto p = sidecar_path(volume_path);
    if (!fs::exists(p)) {
        return {};
    }
    std::ifstream f(p);
    try {
        const auto j = nlohmann::json::parse(f);
        const auto& s = j.at("spacing");
        return {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw IoError(p.string() + ": " + e.what());
    }
}

std::string file_checksum(const fs::path& path) {
    const auto b = slurp(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : b) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return hex64(h);
}

}  // namespace cellsynth
