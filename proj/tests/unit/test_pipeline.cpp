#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cellsynth/io.hpp"
#include "cellsynth/pipeline.hpp"

using namespace cellsynth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("cellsynth_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

PipelineConfig tiny(const fs::path& out) {
    PipelineConfig c;
    c.dims = {48, 44, 40};
    c.output_dir = out;
    c.master_seed = 11;
    return c;
}

const ManifestFile* find_role(const SampleRecord& r, const std::string& role) {
    for (const auto& f : r.files) {
        if (f.role == role) return &f;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("config round-trips through JSON") {
    PipelineConfig c;
    c.dims = {100, 90, 80};
    c.spacing = {0.5, 0.5, 2.0};
    c.alpha = 37.25;
    c.sweep_alphas = {10, 100, 500};
    c.render.psf_sigma = {1.1, 1.2, 0.1 + 0.2};
    c.render.rng_seed = 0xffffffffffffffffULL;
    c.scene.nuclei.reset();
    c.structure = StructureKind::membranes;
    c.organism.kind = OrganismKind::mask_file;
    c.organism.mask_path = "masks/org.tif";
    c.master_seed = 123456789012345ULL;
    const auto text = to_json(c);
    const auto back = config_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.render.psf_sigma[2] == c.render.psf_sigma[2]);
    CHECK_FALSE(back.scene.nuclei.has_value());
    CHECK(back.render.rng_seed == c.render.rng_seed);

    const auto d = config_from_json("{}");
    CHECK(to_json(d) == to_json(PipelineConfig{}));
    CHECK(d.patch == Dims{128, 128, 64});
    CHECK(d.overlap == Dims{30, 30, 15});
    CHECK(d.crop == Dims{30, 30, 15});
    CHECK(d.alpha == 100.0);
    CHECK(d.beta == 100.0);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS((void)config_from_json("{\"alhpa\": 3}"), ParameterError);
    CHECK_THROWS_AS((void)config_from_json("{\"alpha\": \"x\"}"), ParameterError);
    CHECK_THROWS_AS((void)config_from_json("{\"dims\": [1, 2]}"), ParameterError);
    CHECK_THROWS_AS((void)config_from_json("not json"), ParameterError);
    PipelineConfig c;
    c.beta = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.scene.nuclei.reset();
    c.structure = StructureKind::nuclei;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.patch = {40, 40, 40};  // 2 * 30 + 30 >= 40
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("per-sample seeds are distinct and stable") {
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < 1000; ++i) seen.insert(sample_seed(5, i));
    CHECK(seen.size() == 1000);
    CHECK(sample_seed(5, 3) == sample_seed(5, 3));
    CHECK(sample_seed(5, 3) != sample_seed(6, 3));
}

TEST_CASE("tiling plan shrinks to small volumes") {
    PipelineConfig c;
    c.dims = {64, 200, 64};
    const auto plan = plan_for(c);
    CHECK(plan.patch == Dims{64, 128, 64});
    CHECK(plan.overlap == Dims{0, 30, 0});
    CHECK(plan.origins.size() == 3);  // y origins 0, 38, 72
}

TEST_CASE("output root environment variable") {
    ::setenv("CELLSYNTH_OUTPUT_ROOT", "/data/root", 1);
    CHECK(resolve_output_dir("run1") == fs::path("/data/root/run1"));
    CHECK(resolve_output_dir("/abs/run") == fs::path("/abs/run"));
    ::unsetenv("CELLSYNTH_OUTPUT_ROOT");
    CHECK(resolve_output_dir("run1") == fs::path("run1"));
}

TEST_CASE("smoke dataset: every file loads with matching dims and aligned annotations") {
    TempDir tmp("smoke");
    const auto cfg = tiny(tmp.path / "ds");
    const auto m = generate_dataset(cfg);
    REQUIRE(m.samples.size() == 1);
    const auto& s = m.samples[0];
    REQUIRE(s.ok);
    CHECK(m.failed().empty());
    CHECK(s.files.size() == 6);
    const fs::path root = cfg.output_dir;
    for (const auto& f : s.files) {
        const auto p = root / f.path;
        REQUIRE(fs::exists(p));
        CHECK(fs::exists(sidecar_path(p)));
        CHECK(file_checksum(p) == f.checksum);
    }
    const auto labels = load_labels(root / find_role(s, "labels")->path);
    const auto fg = load_mask(root / find_role(s, "foreground")->path);
    const auto mem = load_mask(root / find_role(s, "membranes")->path);
    const auto nuc = load_mask(root / find_role(s, "nuclei")->path);
    const auto img = load_image(root / find_role(s, "image")->path);
    const auto cond = load_raw(root / find_role(s, "conditioning")->path);
    for (const auto* d : {&labels.dims(), &fg.dims(), &mem.dims(), &nuc.dims(), &img.dims(), &cond.dims()}) {
        CHECK(*d == cfg.dims);
    }
    CHECK(foreground_of(labels) == fg);
    for (std::size_t i = 0; i < fg.size(); ++i) {
        if (mem[i] || nuc[i]) REQUIRE(fg[i]);
        REQUIRE((cond[i] > 0.0f) == (fg[i] != 0));
    }

    const auto back = load_manifest(root / "manifest.json");
    CHECK(to_json(back) == to_json(m));
    CHECK(config_from_json(back.config_json).master_seed == 11);
}

TEST_CASE("same master seed gives byte-identical datasets") {
    TempDir a("det_a"), b("det_b");
    auto ca = tiny(a.path / "ds");
    ca.samples = 2;
    auto cb = ca;
    cb.output_dir = b.path / "ds";
    cb.threads = 2;
    const auto ma = generate_dataset(ca);
    const auto mb = generate_dataset(cb);
    REQUIRE(ma.samples.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(ma.samples[i].files.size() == mb.samples[i].files.size());
        for (std::size_t k = 0; k < ma.samples[i].files.size(); ++k) {
            const auto& fa = ma.samples[i].files[k];
            CHECK(fa.checksum == mb.samples[i].files[k].checksum);
            CHECK(file_checksum(sidecar_path(ca.output_dir / fa.path)) ==
                  file_checksum(sidecar_path(cb.output_dir / fa.path)));
        }
    }
    CHECK(ma.samples[0].files[0].checksum != ma.samples[1].files[0].checksum);
    auto cc = ca;
    cc.master_seed = 12;
    cc.samples = 1;
    cc.output_dir = a.path / "other";
    CHECK(generate_dataset(cc).samples[0].files[0].checksum != ma.samples[0].files[0].checksum);
}

TEST_CASE("sweep writes one image per alpha with shared annotations") {
    TempDir tmp("sweep");
    auto cfg = tiny(tmp.path / "ds");
    cfg.sweep_alphas = {10, 100, 500};
    const auto m = generate_dataset(cfg);
    const auto& s = m.samples.at(0);
    REQUIRE(s.ok);
    std::vector<std::string> images;
    std::size_t labels = 0;
    for (const auto& f : s.files) {
        if (f.role == "image") images.push_back(f.checksum);
        labels += f.role == "labels";
    }
    CHECK(images.size() == 3);
    CHECK(labels == 1);
    CHECK(images[0] != images[1]);
    CHECK(images[1] != images[2]);

    // the plain run with alpha = 100 renders the same annotation files
    auto plain = tiny(tmp.path / "plain");
    const auto mp = generate_dataset(plain);
    CHECK(find_role(mp.samples[0], "labels")->checksum == find_role(s, "labels")->checksum);
    CHECK(find_role(mp.samples[0], "image")->checksum == images[1]);
}

TEST_CASE("failed samples are listed without aborting the batch") {
    TempDir tmp("fail");
    auto cfg = tiny(tmp.path / "ds");
    cfg.organism.kind = OrganismKind::mask_file;
    cfg.organism.mask_path = tmp.path / "missing.tif";
    cfg.samples = 2;
    const auto m = generate_dataset(cfg);
    CHECK(m.failed() == std::vector<std::string>{"sample_0000", "sample_0001"});
    CHECK_FALSE(m.samples[0].error.empty());
    CHECK(fs::exists(tmp.path / "ds" / "manifest.json"));
}

TEST_CASE("evaluate: self pair, mask pair, missing file, summary round trip") {
    TempDir tmp("eval");
    const auto cfg = tiny(tmp.path / "ds");
    const auto m = generate_dataset(cfg);
    const fs::path root = cfg.output_dir;
    const auto image = root / find_role(m.samples[0], "image")->path;
    const auto mem = root / find_role(m.samples[0], "membranes")->path;
    const std::vector<EvalPair> pairs{
        {"self", image, image}, {"mask", image, mem}, {"missing", image, tmp.path / "nope.tif"}};
    const auto out = tmp.path / "report";
    const auto s = evaluate(pairs, out);
    REQUIRE(s.pairs.size() == 3);
    CHECK(*s.pairs[0].nrmse == 0.0);
    CHECK(*s.pairs[0].ssim == doctest::Approx(1.0));
    CHECK(*s.pairs[0].zncc == doctest::Approx(1.0));
    CHECK(s.pairs[1].ok);
    CHECK(std::isfinite(*s.pairs[1].ssim));
    CHECK_FALSE(s.pairs[2].ok);
    CHECK_FALSE(s.pairs[2].errors.empty());
    CHECK(s.completed == 2);
    CHECK(s.failed == 1);
    CHECK(fs::exists(out / s.pairs[0].profile_file));
    const auto spec = load_raw(out / s.pairs[0].spectrum_file);
    CHECK(spec.dims() == Dims{cfg.dims.nx, cfg.dims.nz, 2});

    std::ifstream in(out / "summary.json");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto back = summary_from_json(ss.str());
    CHECK(to_json(back) == to_json(s));

    const auto mp = pairs_from_manifest(root / "manifest.json", tmp.path / "cands");
    REQUIRE(mp.size() == 1);
    CHECK(mp[0].id == "sample_0000");
    CHECK(mp[0].candidate == tmp.path / "cands" / "sample_0000.tif");
}

TEST_CASE("scheduler stream") {
    const auto run = [](const std::string& input, AdaStreamOptions o, std::string* err_out = nullptr) {
        std::istringstream in(input);
        std::ostringstream out, err;
        const auto st = run_ada_stream(in, out, err, o);
        if (err_out) *err_out = err.str();
        return std::make_pair(out.str(), st);
    };
    CHECK(run("1\n2\n0.5\n", {}).first == "0.05\n0.1\n0.15\n");
    AdaStreamOptions r;
    r.input = AdaInput::estimates;
    r.controller.initial_p = 0.5;
    CHECK(run("1\n-1\n1\n-1\n", r).first == "0.55\n0.5\n0.55\n0.5\n");
    CHECK(run("", {}).first.empty());
    CHECK(run("\n  \n", {}).second.updates == 0);

    std::string err;
    const auto bad = run("x\n1\n1e400\n-3 4\n", {}, &err);
    CHECK(bad.first == "0.05\n");
    CHECK(bad.second.malformed == 3);
    CHECK(err.find("line 1") != std::string::npos);
    CHECK(run("2\n", r, &err).second.malformed == 1);

    AdaStreamOptions batched;
    batched.batch = 3;
    CHECK(run("1\n1\n1\n-1\n-1\n1\n", batched).first == "0.05\n0\n");
    AdaStreamOptions periodic;
    periodic.controller.period = 2;
    CHECK(run("1\n1\n1\n1\n", periodic).first == "0.05\n0.1\n");
}
