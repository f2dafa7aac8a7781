#include "cellsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cellsynth/conditioning.hpp"
#include "cellsynth/io.hpp"
#include "cellsynth/tiling.hpp"

namespace cellsynth {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// --- JSON helpers -------------------------------------------------------------

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ParameterError(where + " must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ParameterError("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (const auto it = j.find(key); it != j.end()) {
        out = it->get<T>();
    }
}

Json dims_json(const Dims& d) { return Json::array({d.nx, d.ny, d.nz}); }

Dims dims_from(const Json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw ParameterError("dims must be an array of three sizes");
    }
    return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

void read_dims(const Json& j, const char* key, Dims& out) {
    if (const auto it = j.find(key); it != j.end()) {
        out = dims_from(*it);
    }
}

Json prior_json(const RadiusPrior& p) { return Json{{"mean", p.mean}, {"sd", p.sd}}; }

void read_prior(const Json& j, const char* key, RadiusPrior& p) {
    if (const auto it = j.find(key); it != j.end()) {
        check_keys(*it, {"mean", "sd"}, key);
        read(*it, "mean", p.mean);
        read(*it, "sd", p.sd);
    }
}

const char* organism_name(OrganismKind k) { return k == OrganismKind::random_sh ? "random_sh" : "mask_file"; }
const char* structure_name(StructureKind k) { return k == StructureKind::membranes ? "membranes" : "nuclei"; }

Json render_json(const RenderParams& r) {
    return Json{{"psf_sigma", Json::array({r.psf_sigma[0], r.psf_sigma[1], r.psf_sigma[2]})},
                {"signal_fg", r.signal_fg},
                {"baseline", r.baseline},
                {"noise_gaussian_sd", r.noise_gaussian_sd},
                {"noise_poisson_scale", r.noise_poisson_scale},
                {"attenuation", r.attenuation},
                {"rng_seed", r.rng_seed}};
}

void read_render(const Json& j, RenderParams& r) {
    check_keys(j,
               {"psf_sigma", "signal_fg", "baseline", "noise_gaussian_sd", "noise_poisson_scale", "attenuation",
                "rng_seed"},
               "render");
    if (const auto it = j.find("psf_sigma"); it != j.end()) {
        if (!it->is_array() || it->size() != 3) {
            throw ParameterError("render.psf_sigma must have three entries");
        }
        for (int a = 0; a < 3; ++a) r.psf_sigma[a] = (*it)[a].get<double>();
    }
    read(j, "signal_fg", r.signal_fg);
    read(j, "baseline", r.baseline);
    read(j, "noise_gaussian_sd", r.noise_gaussian_sd);
    read(j, "noise_poisson_scale", r.noise_poisson_scale);
    read(j, "attenuation", r.attenuation);
    read(j, "rng_seed", r.rng_seed);
}

Json config_json(const PipelineConfig& c) {
    Json organism{{"kind", organism_name(c.organism.kind)},
                  {"radius", c.organism.radius},
                  {"gamma", c.organism.gamma},
                  {"max_order", c.organism.max_order},
                  {"mask_path", c.organism.mask_path.generic_string()}};
    Json nuclei = nullptr;
    if (c.scene.nuclei) {
        nuclei = Json{{"radius", prior_json(c.scene.nuclei->radius)},
                      {"gamma", c.scene.nuclei->gamma},
                      {"max_order", c.scene.nuclei->max_order}};
    }
    const auto& pl = c.scene.placement;
    Json scene{{"cell_radius", prior_json(c.scene.cell_radius)},
               {"shell_factor", pl.shell_factor},
               {"spacing_factor", pl.spacing_factor},
               {"weight_min", pl.weight_min},
               {"weight_max", pl.weight_max},
               {"membrane_thickness", c.scene.membrane_thickness},
               {"nuclei", nuclei}};
    return Json{{"dims", dims_json(c.dims)},
                {"spacing", Json::array({c.spacing.sx, c.spacing.sy, c.spacing.sz})},
                {"organism", organism},
                {"scene", scene},
                {"structure", structure_name(c.structure)},
                {"alpha", c.alpha},
                {"beta", c.beta},
                {"sweep_alphas", c.sweep_alphas},
                {"render", render_json(c.render)},
                {"tiling",
                 Json{{"patch", dims_json(c.patch)},
                      {"overlap", dims_json(c.overlap)},
                      {"crop", dims_json(c.crop)},
                      {"weight_floor", c.weight_floor}}},
                {"samples", c.samples},
                {"output_dir", c.output_dir.generic_string()},
                {"master_seed", c.master_seed},
                {"threads", c.threads}};
}

PipelineConfig config_from(const Json& j) {
    PipelineConfig c;
    check_keys(j,
               {"dims", "spacing", "organism", "scene", "structure", "alpha", "beta", "sweep_alphas", "render",
                "tiling", "samples", "output_dir", "master_seed", "threads"},
               "config");
    read_dims(j, "dims", c.dims);
    if (const auto it = j.find("spacing"); it != j.end()) {
        if (!it->is_array() || it->size() != 3) {
            throw ParameterError("spacing must have three entries");
        }
        c.spacing = {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
    }
    if (const auto it = j.find("organism"); it != j.end()) {
        check_keys(*it, {"kind", "radius", "gamma", "max_order", "mask_path"}, "organism");
        std::string kind = organism_name(c.organism.kind);
        read(*it, "kind", kind);
        if (kind == "random_sh") {
            c.organism.kind = OrganismKind::random_sh;
        } else if (kind == "mask_file") {
            c.organism.kind = OrganismKind::mask_file;
        } else {
            throw ParameterError("organism.kind must be random_sh or mask_file");
        }
        read(*it, "radius", c.organism.radius);
        read(*it, "gamma", c.organism.gamma);
        read(*it, "max_order", c.organism.max_order);
        std::string mask;
        read(*it, "mask_path", mask);
        c.organism.mask_path = mask;
    }
    if (const auto it = j.find("scene"); it != j.end()) {
        const auto& s = *it;
        check_keys(s,
                   {"cell_radius", "shell_factor", "spacing_factor", "weight_min", "weight_max",
                    "membrane_thickness", "nuclei"},
                   "scene");
        read_prior(s, "cell_radius", c.scene.cell_radius);
        read(s, "shell_factor", c.scene.placement.shell_factor);
        read(s, "spacing_factor", c.scene.placement.spacing_factor);
        read(s, "weight_min", c.scene.placement.weight_min);
        read(s, "weight_max", c.scene.placement.weight_max);
        read(s, "membrane_thickness", c.scene.membrane_thickness);
        if (const auto n = s.find("nuclei"); n != s.end()) {
            if (n->is_null()) {
                c.scene.nuclei.reset();
            } else {
                check_keys(*n, {"radius", "gamma", "max_order"}, "scene.nuclei");
                NucleiOptions nu;
                read_prior(*n, "radius", nu.radius);
                read(*n, "gamma", nu.gamma);
                read(*n, "max_order", nu.max_order);
                c.scene.nuclei = nu;
            }
        }
    }
    if (const auto it = j.find("structure"); it != j.end()) {
        const auto s = it->get<std::string>();
        if (s == "membranes") {
            c.structure = StructureKind::membranes;
        } else if (s == "nuclei") {
            c.structure = StructureKind::nuclei;
        } else {
            throw ParameterError("structure must be membranes or nuclei");
        }
    }
    read(j, "alpha", c.alpha);
    read(j, "beta", c.beta);
    read(j, "sweep_alphas", c.sweep_alphas);
    if (const auto it = j.find("render"); it != j.end()) {
        read_render(*it, c.render);
    }
    if (const auto it = j.find("tiling"); it != j.end()) {
        check_keys(*it, {"patch", "overlap", "crop", "weight_floor"}, "tiling");
        read_dims(*it, "patch", c.patch);
        read_dims(*it, "overlap", c.overlap);
        read_dims(*it, "crop", c.crop);
        read(*it, "weight_floor", c.weight_floor);
    }
    read(j, "samples", c.samples);
    std::string out = c.output_dir.generic_string();
    read(j, "output_dir", out);
    c.output_dir = out;
    read(j, "master_seed", c.master_seed);
    read(j, "threads", c.threads);
    return c;
}

template <class F>
auto parsing(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw ParameterError(what + ": " + e.what());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out.flush()) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<double> alphas_of(const PipelineConfig& c) {
    return c.sweep_alphas.empty() ? std::vector<double>{c.alpha} : c.sweep_alphas;
}

std::string suffix_for(const PipelineConfig& c, double alpha) {
    return c.sweep_alphas.empty() ? std::string() : "_a" + format_number(alpha);
}

// --- per-sample work ----------------------------------------------------------

SampleRecord write_sample(const PipelineConfig& config, const fs::path& root, std::size_t index) {
    SampleRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "sample_%04zu", index);
    rec.id = id;
    rec.index = index;
    rec.seed = sample_seed(config.master_seed, index);
    try {
        const auto s = synthesize_sample(config, rec.seed);
        rec.cells = s.scene.seeds.size();
        rec.layers = s.scene.layers;
        rec.empty_cells = s.scene.empty_cells;

        const fs::path dir = root / rec.id;
        fs::create_directories(dir);
        Json prov{{"sample", rec.id}, {"seed", rec.seed}};
        const auto add = [&](const std::string& role, const std::string& name, double alpha,
                             const auto& writer, const Dims& dims, const std::string& kind, Json extra) {
            const fs::path p = dir / name;
            writer(p);
            Json pj = prov;
            for (auto& [k, v] : extra.items()) pj[k] = v;
            write_sidecar(p, dims, config.spacing, kind, pj.dump());
            rec.files.push_back({role, (fs::path(rec.id) / name).generic_string(), file_checksum(p), alpha});
        };
        const auto& sc = s.scene;
        add("labels", "labels.tif", 0.0, [&](const fs::path& p) { save_labels(p, sc.instances); }, config.dims,
            "labels", Json::object());
        add("membranes", "membranes.tif", 0.0, [&](const fs::path& p) { save_mask(p, sc.membranes); }, config.dims,
            "mask", Json::object());
        if (sc.nuclei) {
            add("nuclei", "nuclei.tif", 0.0, [&](const fs::path& p) { save_mask(p, *sc.nuclei); }, config.dims,
                "mask", Json::object());
        }
        add("foreground", "foreground.tif", 0.0, [&](const fs::path& p) { save_mask(p, sc.foreground); },
            config.dims, "mask", Json::object());
        for (std::size_t k = 0; k < s.images.size(); ++k) {
            const double a = s.conditioning[k].alpha;
            const auto sfx = suffix_for(config, a);
            const Json cond{{"alpha", a}, {"beta", config.beta}};
            add("conditioning", "conditioning" + sfx + ".vol", a,
                [&](const fs::path& p) { save_raw(p, s.conditioning[k].map); }, config.dims, "conditioning", cond);
            Json img = cond;
            img["render"] = render_json(config.render);
            img["structure"] = structure_name(config.structure);
            add("image", "image" + sfx + ".tif", a, [&](const fs::path& p) { save_image(p, s.images[k]); },
                config.dims, "image", img);
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.files.clear();
    }
    return rec;
}

Json sample_json(const SampleRecord& r) {
    Json files = Json::array();
    for (const auto& f : r.files) {
        Json fj{{"role", f.role}, {"path", f.path}, {"checksum", f.checksum}};
        if (f.role == "image" || f.role == "conditioning") fj["alpha"] = f.alpha;
        files.push_back(fj);
    }
    return Json{{"id", r.id},
                {"index", r.index},
                {"seed", r.seed},
                {"status", r.ok ? "ok" : "failed"},
                {"error", r.error},
                {"cells", r.cells},
                {"layers", r.layers},
                {"empty_cells", r.empty_cells},
                {"warning", r.warning},
                {"files", files}};
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_from(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

VoxelVolume load_any(const fs::path& p) {
    if (p.extension() == ".vol") return load_raw(p);
    return load_image(p);
}

std::string safe_name(std::string s) {
    for (auto& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
    }
    return s;
}

}  // namespace

// --- configuration --------------------------------------------------------------

void PipelineConfig::validate() const {
    const auto fail = [](const std::string& m) { throw ParameterError(m); };
    if (dims.count() == 0) fail("dims must be positive");
    if (!spacing.valid()) fail("spacing must be positive");
    if (organism.kind == OrganismKind::random_sh) {
        if (!(organism.radius >= 0.0)) fail("organism.radius must be >= 0");
        if (!(organism.gamma >= 0.0)) fail("organism.gamma must be >= 0");
        if (organism.max_order < 0 || organism.max_order > 20) fail("organism.max_order must lie in [0, 20]");
    } else if (organism.mask_path.empty()) {
        fail("organism.mask_path is required for mask_file organisms");
    }
    if (!(scene.cell_radius.mean > 0.0) || !(scene.cell_radius.sd >= 0.0)) fail("scene.cell_radius is invalid");
    const auto& pl = scene.placement;
    if (!(pl.shell_factor > 0.0) || !(pl.spacing_factor > 0.0)) fail("scene shell/spacing factors must be > 0");
    if (!(pl.weight_min > 0.0) || !(pl.weight_max >= pl.weight_min)) fail("scene weight range is invalid");
    if (scene.membrane_thickness < 1) fail("scene.membrane_thickness must be >= 1");
    if (scene.nuclei) {
        const auto& n = *scene.nuclei;
        if (!(n.radius.mean > 0.0) || !(n.radius.sd >= 0.0)) fail("scene.nuclei.radius is invalid");
        if (!(n.gamma >= 0.0)) fail("scene.nuclei.gamma must be >= 0");
        if (n.max_order < 0 || n.max_order > 20) fail("scene.nuclei.max_order must lie in [0, 20]");
    } else if (structure == StructureKind::nuclei) {
        fail("structure 'nuclei' needs scene.nuclei");
    }
    if (!(alpha > 0.0) || !(beta > 0.0)) fail("alpha and beta must be > 0");
    for (const double a : sweep_alphas) {
        if (!(a > 0.0)) fail("sweep alphas must be > 0");
    }
    render.validate();
    if (!(weight_floor > 0.0 && weight_floor <= 1.0)) fail("tiling.weight_floor must lie in (0, 1]");
    if (samples < 1) fail("samples must be >= 1");
    (void)plan_for(*this);
}

std::string to_json(const PipelineConfig& config) { return config_json(config).dump(2); }

PipelineConfig config_from_json(const std::string& text) {
    return parsing("config", [&] { return config_from(Json::parse(text)); });
}

PipelineConfig load_config(const fs::path& path) { return config_from_json(read_text(path)); }

void save_config(const fs::path& path, const PipelineConfig& config) { write_text(path, to_json(config) + "\n"); }

fs::path resolve_output_dir(const fs::path& dir) {
    if (dir.is_absolute()) return dir;
    if (const char* root = std::getenv("CELLSYNTH_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
        return fs::path(root) / dir;
    }
    return dir;
}

std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t index) noexcept {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(0x5eedULL + index));
}

TilingPlan plan_for(const PipelineConfig& config) {
    Dims patch = config.patch, overlap = config.overlap, crop = config.crop;
    for (int a = 0; a < 3; ++a) {
        if (patch[a] >= config.dims[a]) {
            patch[a] = config.dims[a];
            overlap[a] = 0;
            crop[a] = 0;
        }
    }
    return plan_tiling(config.dims, patch, overlap, crop);
}

// --- generation -------------------------------------------------------------------

SampleVolumes synthesize_sample(const PipelineConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto& d = config.dims;
    const auto& sp = config.spacing;

    MaskVolume fg;
    if (config.organism.kind == OrganismKind::random_sh) {
        double r = config.organism.radius;
        if (r == 0.0) {
            r = 0.4 * std::min({static_cast<double>(d.nx) * sp.sx, static_cast<double>(d.ny) * sp.sy,
                                static_cast<double>(d.nz) * sp.sz});
        }
        const Point3 center{(static_cast<double>(d.nx) - 1.0) / 2.0, (static_cast<double>(d.ny) - 1.0) / 2.0,
                            (static_cast<double>(d.nz) - 1.0) / 2.0};
        const auto shape = random_sh_coefficients(r, config.organism.gamma, config.organism.max_order, rng, center);
        fg = generate_organism_shape(shape, d, sp, rng);
    } else {
        fg = generate_organism_shape(config.organism.mask_path, d, sp, rng);
    }

    SampleVolumes out;
    out.scene = build_scene(std::move(fg), config.scene, rng);
    const auto& sc = out.scene;
    const VoxelVolume structure =
        to_float(config.structure == StructureKind::membranes ? sc.membranes : *sc.nuclei);

    const auto alphas = alphas_of(config);
    out.conditioning = quality_sweep(sc.foreground, alphas, config.beta);

    RenderParams rp = config.render;
    rp.rng_seed = splitmix64(seed ^ splitmix64(config.render.rng_seed));
    const ClassicalRenderer renderer(rp);
    const auto plan = plan_for(config);
    for (const auto& c : out.conditioning) {
        out.images.push_back(process_volume(structure, c.map, renderer, plan, config.weight_floor));
    }
    return out;
}

std::vector<std::string> DatasetManifest::failed() const {
    std::vector<std::string> ids;
    for (const auto& s : samples) {
        if (!s.ok) ids.push_back(s.id);
    }
    return ids;
}

std::string to_json(const DatasetManifest& manifest) {
    Json samples = Json::array();
    for (const auto& s : manifest.samples) samples.push_back(sample_json(s));
    Json cfg = manifest.config_json.empty() ? Json::object() : Json::parse(manifest.config_json);
    return Json{{"format", "cellsynth-manifest"},
                {"version", 1},
                {"config", cfg},
                {"samples", samples},
                {"failed", manifest.failed()}}
        .dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
    return parsing("manifest", [&] {
        const auto j = Json::parse(text);
        if (j.value("format", "") != "cellsynth-manifest") {
            throw ParameterError("not a cellsynth manifest");
        }
        DatasetManifest m;
        m.config_json = j.at("config").dump(2);
        for (const auto& s : j.at("samples")) {
            SampleRecord r;
            r.id = s.at("id").get<std::string>();
            r.index = s.at("index").get<std::size_t>();
            r.seed = s.at("seed").get<std::uint64_t>();
            r.ok = s.at("status").get<std::string>() == "ok";
            r.error = s.value("error", "");
            r.cells = s.value("cells", std::size_t{0});
            r.layers = s.value("layers", 0);
            r.empty_cells = s.value("empty_cells", std::vector<std::uint32_t>{});
            r.warning = s.value("warning", "");
            for (const auto& f : s.at("files")) {
                r.files.push_back({f.at("role").get<std::string>(), f.at("path").get<std::string>(),
                                   f.at("checksum").get<std::string>(), f.value("alpha", 0.0)});
            }
            m.samples.push_back(std::move(r));
        }
        return m;
    });
}

DatasetManifest load_manifest(const fs::path& path) { return manifest_from_json(read_text(path)); }

DatasetManifest generate_dataset(const PipelineConfig& config) {
    config.validate();
    const fs::path root = resolve_output_dir(config.output_dir);
    fs::create_directories(root);

    DatasetManifest manifest;
    manifest.config_json = to_json(config);
    manifest.samples.resize(config.samples);

    unsigned workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.samples));
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < config.samples; i = next++) {
            manifest.samples[i] = write_sample(config, root, i);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    write_text(root / "manifest.json", to_json(manifest) + "\n");
    return manifest;
}

// --- evaluation -----------------------------------------------------------------------

std::string to_json(const EvalSummary& summary) {
    Json pairs = Json::array();
    for (const auto& p : summary.pairs) {
        pairs.push_back(Json{{"id", p.id},
                             {"reference", p.reference},
                             {"candidate", p.candidate},
                             {"status", p.ok ? "ok" : "failed"},
                             {"nrmse", opt_json(p.nrmse)},
                             {"ssim", opt_json(p.ssim)},
                             {"zncc", opt_json(p.zncc)},
                             {"errors", p.errors},
                             {"profile", p.profile_file},
                             {"spectrum", p.spectrum_file}});
    }
    return Json{{"format", "cellsynth-evaluation"},
                {"version", 1},
                {"pairs", pairs},
                {"aggregate",
                 Json{{"completed", summary.completed},
                      {"failed", summary.failed},
                      {"mean_nrmse", opt_json(summary.mean_nrmse)},
                      {"mean_ssim", opt_json(summary.mean_ssim)},
                      {"mean_zncc", opt_json(summary.mean_zncc)}}}}
        .dump(2);
}

EvalSummary summary_from_json(const std::string& text) {
    return parsing("evaluation summary", [&] {
        const auto j = Json::parse(text);
        if (j.value("format", "") != "cellsynth-evaluation") {
            throw ParameterError("not a cellsynth evaluation summary");
        }
        EvalSummary s;
        for (const auto& p : j.at("pairs")) {
            PairReport r;
            r.id = p.at("id").get<std::string>();
            r.reference = p.at("reference").get<std::string>();
            r.candidate = p.at("candidate").get<std::string>();
            r.ok = p.at("status").get<std::string>() == "ok";
            r.nrmse = opt_from(p, "nrmse");
            r.ssim = opt_from(p, "ssim");
            r.zncc = opt_from(p, "zncc");
            r.errors = p.at("errors").get<std::vector<std::string>>();
            r.profile_file = p.at("profile").get<std::string>();
            r.spectrum_file = p.at("spectrum").get<std::string>();
            s.pairs.push_back(std::move(r));
        }
        const auto& a = j.at("aggregate");
        s.completed = a.at("completed").get<std::size_t>();
        s.failed = a.at("failed").get<std::size_t>();
        s.mean_nrmse = opt_from(a, "mean_nrmse");
        s.mean_ssim = opt_from(a, "mean_ssim");
        s.mean_zncc = opt_from(a, "mean_zncc");
        return s;
    });
}

std::vector<EvalPair> pairs_from_manifest(const fs::path& manifest_path, const fs::path& candidate_dir) {
    const auto m = load_manifest(manifest_path);
    const auto base = manifest_path.parent_path();
    std::vector<EvalPair> pairs;
    for (const auto& s : m.samples) {
        if (!s.ok) continue;
        const auto n_images = std::count_if(s.files.begin(), s.files.end(),
                                            [](const ManifestFile& f) { return f.role == "image"; });
        for (const auto& f : s.files) {
            if (f.role != "image") continue;
            const std::string id = n_images > 1 ? s.id + "_a" + format_number(f.alpha) : s.id;
            pairs.push_back({id, base / f.path, candidate_dir / (id + ".tif")});
        }
    }
    return pairs;
}

EvalSummary evaluate(const std::vector<EvalPair>& pairs, const fs::path& output_dir) {
    fs::create_directories(output_dir);
    EvalSummary summary;
    double sums[3] = {0, 0, 0};
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& pair : pairs) {
        PairReport r;
        r.id = pair.id;
        r.reference = pair.reference.generic_string();
        r.candidate = pair.candidate.generic_string();
        try {
            const auto ref = load_any(pair.reference);
            const auto cand = load_any(pair.candidate);
            if (!(ref.dims() == cand.dims())) {
                throw ParameterError("reference and candidate dims differ");
            }
            const auto metric = [&](const char* name, auto&& f, std::optional<double>& slot) {
                try {
                    slot = f();
                } catch (const ParameterError& e) {
                    r.errors.push_back(std::string(name) + ": " + e.what());
                }
            };
            metric("nrmse", [&] { return nrmse(ref, cand); }, r.nrmse);
            metric("ssim", [&] { return ssim(ref, cand); }, r.ssim);
            metric("zncc", [&] { return zncc(ref, cand); }, r.zncc);

            const auto name = safe_name(pair.id);
            const auto pr = intensity_profile(ref);
            const auto pc = intensity_profile(cand);
            std::ostringstream csv;
            csv.precision(10);
            csv << "x,reference,candidate\n";
            for (std::size_t x = 0; x < pr.size(); ++x) csv << x << ',' << pr[x] << ',' << pc[x] << '\n';
            r.profile_file = name + "_profile.csv";
            write_text(output_dir / r.profile_file, csv.str());

            const auto sr = intensity_spectrum(ref);
            const auto sc = intensity_spectrum(cand);
            VoxelVolume spec({sr.nx, sr.nz, 2});
            for (std::size_t i = 0; i < sr.log_magnitude.size(); ++i) {
                spec[i] = static_cast<float>(sr.log_magnitude[i]);
                spec[i + sr.log_magnitude.size()] = static_cast<float>(sc.log_magnitude[i]);
            }
            r.spectrum_file = name + "_spectrum.vol";
            save_raw(output_dir / r.spectrum_file, spec);
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.errors.push_back(e.what());
        }
        const std::optional<double>* vals[3] = {&r.nrmse, &r.ssim, &r.zncc};
        for (int k = 0; k < 3; ++k) {
            if (*vals[k]) {
                sums[k] += **vals[k];
                ++counts[k];
            }
        }
        (r.ok ? summary.completed : summary.failed) += 1;
        summary.pairs.push_back(std::move(r));
    }
    std::optional<double>* means[3] = {&summary.mean_nrmse, &summary.mean_ssim, &summary.mean_zncc};
    for (int k = 0; k < 3; ++k) {
        if (counts[k] > 0) *means[k] = sums[k] / static_cast<double>(counts[k]);
    }
    write_text(output_dir / "summary.json", to_json(summary) + "\n");
    return summary;
}

SegScores evaluate_segmentation_files(const SegPaths& p, const SegEvalConfig& config) {
    return evaluate_segmentation(load_any(p.p_background), load_mask(p.t_background), load_any(p.p_membrane),
                                 load_mask(p.t_membrane), load_any(p.p_centroid), load_mask(p.t_centroid), config);
}

// --- scheduler stream -------------------------------------------------------------

AdaStreamStats run_ada_stream(std::istream& in, std::ostream& out, std::ostream& err,
                              const AdaStreamOptions& options) {
    if (options.batch < 1) {
        throw ParameterError("batch must be >= 1");
    }
    AdaController ctl(options.controller);
    AdaStreamStats stats;
    int epoch = 0;
    std::size_t in_batch = 0;
    double est_sum = 0.0;
    std::size_t est_count = 0;
    const auto emit = [&] {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g\n", ctl.p());
        out << buf << std::flush;
        ++stats.updates;
    };

    std::string line;
    while (std::getline(in, line)) {
        ++stats.lines;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const char* first = line.data() + b;
        const char* last = line.data() + e + 1;
        if (*first == '+') ++first;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        const bool bad_range = options.input == AdaInput::estimates && !(v >= -1.0 && v <= 1.0);
        if (ec != std::errc() || ptr != last || !std::isfinite(v) || bad_range) {
            ++stats.malformed;
            err << "line " << stats.lines << ": not a " << (options.input == AdaInput::estimates ? "value in [-1, 1]" : "number")
                << ", skipped: " << line << '\n';
            continue;
        }
        if (options.input == AdaInput::outputs) {
            ctl.observe(std::span<const double>(&v, 1));
            if (++in_batch < options.batch) continue;
            in_batch = 0;
            if (ctl.end_epoch(++epoch)) emit();
        } else {
            est_sum += v;
            ++est_count;
            if (ctl.step(est_sum / static_cast<double>(est_count), ++epoch)) {
                est_sum = 0.0;
                est_count = 0;
                emit();
            }
        }
    }
    return stats;
}

}  // namespace cellsynth
