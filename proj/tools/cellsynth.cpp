// cellsynth command line: generate, sweep, evaluate, ada-sched, inspect.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cellsynth/io.hpp"
#include "cellsynth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cellsynth;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

// Flag values land here; only flags that were given override the config file.
struct Overrides {
    std::vector<std::size_t> dims, patch, overlap, crop;
    std::vector<double> spacing, psf_sigma, alphas;
    double alpha = 0, beta = 0, cell_radius = 0, cell_radius_sd = 0, organism_radius = 0, organism_gamma = 0;
    double signal = 0, baseline = 0, noise_sd = 0, poisson = 0, attenuation = 0;
    double nuclei_radius = 0, nuclei_radius_sd = 0, nuclei_gamma = 0;
    int membrane_thickness = 0, nuclei_max_order = 0, organism_max_order = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string output, structure, organism_mask;
    bool no_nuclei = false;
};

void add_config_flags(CLI::App* cmd, Overrides& o, std::string& config_file, std::string& write_config) {
    cmd->add_option("-c,--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--write-config", write_config, "write the effective configuration and exit");
    cmd->add_option("-o,--output", o.output, "output directory (relative paths use $CELLSYNTH_OUTPUT_ROOT)");
    cmd->add_option("-n,--samples", o.samples, "number of samples");
    cmd->add_option("-s,--seed", o.seed, "master seed");
    cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores");
    cmd->add_option("--dims", o.dims, "volume size nx ny nz")->expected(3);
    cmd->add_option("--spacing", o.spacing, "voxel spacing sx sy sz")->expected(3);
    cmd->add_option("--organism-radius", o.organism_radius, "organism radius (0 = 0.4 * smallest extent)");
    cmd->add_option("--organism-gamma", o.organism_gamma, "organism SH decay");
    cmd->add_option("--organism-max-order", o.organism_max_order, "organism SH order");
    cmd->add_option("--organism-mask", o.organism_mask, "use a mask file as organism")->check(CLI::ExistingFile);
    cmd->add_option("--cell-radius", o.cell_radius, "mean cell radius");
    cmd->add_option("--cell-radius-sd", o.cell_radius_sd, "cell radius standard deviation");
    cmd->add_option("--membrane-thickness", o.membrane_thickness, "membrane thickness in voxels");
    cmd->add_option("--nuclei-radius", o.nuclei_radius, "mean nucleus radius");
    cmd->add_option("--nuclei-radius-sd", o.nuclei_radius_sd, "nucleus radius standard deviation");
    cmd->add_option("--nuclei-gamma", o.nuclei_gamma, "nucleus SH decay");
    cmd->add_option("--nuclei-max-order", o.nuclei_max_order, "nucleus SH order");
    cmd->add_flag("--no-nuclei", o.no_nuclei, "skip nuclei masks");
    cmd->add_option("--structure", o.structure, "rendered structure")
        ->check(CLI::IsMember({"membranes", "nuclei"}));
    cmd->add_option("--alpha", o.alpha, "foreground conditioning scale");
    cmd->add_option("--beta", o.beta, "background conditioning scale");
    cmd->add_option("--psf-sigma", o.psf_sigma, "PSF sigma x y z in voxels")->expected(3);
    cmd->add_option("--signal", o.signal, "foreground signal");
    cmd->add_option("--baseline", o.baseline, "background level");
    cmd->add_option("--noise-sd", o.noise_sd, "Gaussian noise sd");
    cmd->add_option("--poisson", o.poisson, "photons per unit intensity, 0 disables");
    cmd->add_option("--attenuation", o.attenuation, "depth attenuation kappa");
    cmd->add_option("--patch", o.patch, "patch size")->expected(3);
    cmd->add_option("--overlap", o.overlap, "patch overlap")->expected(3);
    cmd->add_option("--crop", o.crop, "patch crop margin")->expected(3);
}

Dims to_dims(const std::vector<std::size_t>& v) { return {v[0], v[1], v[2]}; }

PipelineConfig build_config(const CLI::App* cmd, const Overrides& o, const std::string& config_file) {
    PipelineConfig c = config_file.empty() ? PipelineConfig{} : load_config(config_file);
    const auto given = [&](const char* name) { return cmd->count(name) > 0; };
    if (given("--output")) c.output_dir = o.output;
    if (given("--samples")) c.samples = o.samples;
    if (given("--seed")) c.master_seed = o.seed;
    if (given("--threads")) c.threads = o.threads;
    if (given("--dims")) c.dims = to_dims(o.dims);
    if (given("--spacing")) c.spacing = {o.spacing[0], o.spacing[1], o.spacing[2]};
    if (given("--organism-radius")) c.organism.radius = o.organism_radius;
    if (given("--organism-gamma")) c.organism.gamma = o.organism_gamma;
    if (given("--organism-max-order")) c.organism.max_order = o.organism_max_order;
    if (given("--organism-mask")) {
        c.organism.kind = OrganismKind::mask_file;
        c.organism.mask_path = o.organism_mask;
    }
    if (given("--cell-radius")) c.scene.cell_radius.mean = o.cell_radius;
    if (given("--cell-radius-sd")) c.scene.cell_radius.sd = o.cell_radius_sd;
    if (given("--membrane-thickness")) c.scene.membrane_thickness = o.membrane_thickness;
    if (o.no_nuclei) c.scene.nuclei.reset();
    if (c.scene.nuclei) {
        auto& n = *c.scene.nuclei;
        if (given("--nuclei-radius")) n.radius.mean = o.nuclei_radius;
        if (given("--nuclei-radius-sd")) n.radius.sd = o.nuclei_radius_sd;
        if (given("--nuclei-gamma")) n.gamma = o.nuclei_gamma;
        if (given("--nuclei-max-order")) n.max_order = o.nuclei_max_order;
    }
    if (given("--structure")) c.structure = o.structure == "nuclei" ? StructureKind::nuclei : StructureKind::membranes;
    if (given("--alpha")) c.alpha = o.alpha;
    if (given("--beta")) c.beta = o.beta;
    if (given("--psf-sigma")) c.render.psf_sigma = {o.psf_sigma[0], o.psf_sigma[1], o.psf_sigma[2]};
    if (given("--signal")) c.render.signal_fg = o.signal;
    if (given("--baseline")) c.render.baseline = o.baseline;
    if (given("--noise-sd")) c.render.noise_gaussian_sd = o.noise_sd;
    if (given("--poisson")) c.render.noise_poisson_scale = o.poisson;
    if (given("--attenuation")) c.render.attenuation = o.attenuation;
    if (given("--patch")) c.patch = to_dims(o.patch);
    if (given("--overlap")) c.overlap = to_dims(o.overlap);
    if (given("--crop")) c.crop = to_dims(o.crop);
    if (cmd->get_option_no_throw("--alphas") != nullptr && (given("--alphas") || c.sweep_alphas.empty())) {
        c.sweep_alphas = o.alphas;
    }
    return c;
}

int run_generate(const CLI::App* cmd, const Overrides& o, const std::string& config_file,
                 const std::string& write_config) {
    auto config = build_config(cmd, o, config_file);
    config.validate();
    if (!write_config.empty()) {
        save_config(write_config, config);
        return kOk;
    }
    const auto manifest = generate_dataset(config);
    const auto failed = manifest.failed();
    const auto root = resolve_output_dir(config.output_dir);
    std::printf("%zu samples written to %s\n", manifest.samples.size() - failed.size(), root.string().c_str());
    for (const auto& s : manifest.samples) {
        if (!s.ok) std::fprintf(stderr, "%s failed: %s\n", s.id.c_str(), s.error.c_str());
    }
    return failed.empty() ? kOk : kPartial;
}

void print_volume_header(const fs::path& p) {
    const auto ext = p.extension().string();
    Dims d;
    std::string kind = "tiff";
    if (ext == ".vol") {
        d = load_raw(p).dims();
        kind = "raw float32";
    } else {
        d = read_tiff16(p).dims;
    }
    const auto sp = read_sidecar_spacing(p);
    std::printf("%s\n  format  %s\n  dims    %zu x %zu x %zu\n  spacing %g %g %g\n  fnv1a   %s\n",
                p.string().c_str(), kind.c_str(), d.nx, d.ny, d.nz, sp.sx, sp.sy, sp.sz,
                file_checksum(p).c_str());
    if (fs::exists(sidecar_path(p))) {
        std::ifstream in(sidecar_path(p));
        std::printf("  sidecar %s\n", nlohmann::json::parse(in).dump().c_str());
    }
}

int run_inspect(const std::string& path) {
    const fs::path p = path;
    if (p.extension() == ".json") {
        std::ifstream in(p);
        const auto j = nlohmann::json::parse(in);
        if (j.value("format", "") == "cellsynth-manifest") {
            const auto m = load_manifest(p);
            std::printf("manifest %s\n  samples %zu, failed %zu\n", p.string().c_str(), m.samples.size(),
                        m.failed().size());
            for (const auto& s : m.samples) {
                std::printf("  %s seed %llu %s cells %zu layers %d files %zu%s%s\n", s.id.c_str(),
                            static_cast<unsigned long long>(s.seed), s.ok ? "ok" : "FAILED", s.cells, s.layers,
                            s.files.size(), s.error.empty() ? "" : " error: ", s.error.c_str());
            }
            return m.failed().empty() ? kOk : kPartial;
        }
        std::printf("%s\n", j.dump(2).c_str());
        return kOk;
    }
    print_volume_header(p);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic annotated 3D fluorescence microscopy volumes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cellsynth 1.0.0");

    Overrides gen_o, sweep_o;
    std::string gen_cfg, gen_write, sweep_cfg, sweep_write;
    auto* gen = app.add_subcommand("generate", "generate an annotated dataset");
    add_config_flags(gen, gen_o, gen_cfg, gen_write);

    auto* sweep = app.add_subcommand("sweep", "one image per alpha with shared annotations");
    add_config_flags(sweep, sweep_o, sweep_cfg, sweep_write);
    sweep_o.alphas = {10, 100, 500};
    sweep->add_option("--alphas", sweep_o.alphas, "alpha values")->capture_default_str();

    std::string manifest, candidates, pairs_file, reference, candidate, eval_out = "evaluation";
    std::vector<std::string> seg;
    SegEvalConfig seg_cfg;
    auto* eval = app.add_subcommand("evaluate", "quality scores, profiles and spectra");
    eval->add_option("--manifest", manifest, "dataset manifest (references)")->check(CLI::ExistingFile);
    eval->add_option("--candidates", candidates, "directory with <sample id>.tif candidates");
    eval->add_option("--pairs", pairs_file, "JSON list of {id, reference, candidate}")->check(CLI::ExistingFile);
    eval->add_option("--reference", reference, "single reference volume");
    eval->add_option("--candidate", candidate, "single candidate volume");
    eval->add_option("--segmentation", seg,
                     "six volumes: p_bg t_bg p_membrane t_membrane p_centroid t_centroid")
        ->expected(6);
    eval->add_option("--t-background", seg_cfg.t_background)->capture_default_str();
    eval->add_option("--t-membrane", seg_cfg.t_membrane)->capture_default_str();
    eval->add_option("--t-centroid", seg_cfg.t_centroid)->capture_default_str();
    eval->add_option("--tol-background", seg_cfg.tol_background)->capture_default_str();
    eval->add_option("--tol-membrane", seg_cfg.tol_membrane)->capture_default_str();
    eval->add_option("--tol-centroid", seg_cfg.tol_centroid)->capture_default_str();
    eval->add_option("-o,--output", eval_out, "report directory")->capture_default_str();

    AdaStreamOptions ada;
    std::string ada_mode = "outputs";
    auto* sched = app.add_subcommand("ada-sched", "augmentation probability from a scalar stream on stdin");
    sched->add_option("--mode", ada_mode, "outputs: discriminator outputs; r: precomputed estimates")
        ->check(CLI::IsMember({"outputs", "r"}))
        ->capture_default_str();
    sched->add_option("--batch", ada.batch, "outputs per epoch")->capture_default_str();
    sched->add_option("--target", ada.controller.target)->capture_default_str();
    sched->add_option("--step", ada.controller.step)->capture_default_str();
    sched->add_option("--period", ada.controller.period, "epochs between updates")->capture_default_str();
    sched->add_option("--initial", ada.controller.initial_p, "starting p")->capture_default_str();

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "print manifest or volume headers");
    inspect->add_option("path", inspect_path)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*gen) return run_generate(gen, gen_o, gen_cfg, gen_write);
        if (*sweep) return run_generate(sweep, sweep_o, sweep_cfg, sweep_write);
        if (*sched) {
            ada.input = ada_mode == "r" ? AdaInput::estimates : AdaInput::outputs;
            run_ada_stream(std::cin, std::cout, std::cerr, ada);
            return kOk;
        }
        if (*inspect) return run_inspect(inspect_path);
        if (*eval) {
            const fs::path out = resolve_output_dir(eval_out);
            if (!seg.empty()) {
                const auto s = evaluate_segmentation_files({seg[0], seg[1], seg[2], seg[3], seg[4], seg[5]}, seg_cfg);
                fs::create_directories(out);
                const nlohmann::ordered_json j{{"background", s.background},
                                               {"membrane", s.membrane},
                                               {"centroid", s.centroid}};
                std::ofstream(out / "segmentation.json") << j.dump(2) << '\n';
                std::printf("%s\n", j.dump(2).c_str());
            }
            std::vector<EvalPair> pairs;
            if (!manifest.empty()) {
                if (candidates.empty()) throw ParameterError("--manifest needs --candidates");
                pairs = pairs_from_manifest(manifest, candidates);
            }
            if (!pairs_file.empty()) {
                std::ifstream in(pairs_file);
                for (const auto& p : nlohmann::json::parse(in)) {
                    pairs.push_back({p.at("id").get<std::string>(), p.at("reference").get<std::string>(),
                                     p.at("candidate").get<std::string>()});
                }
            }
            if (!reference.empty() || !candidate.empty()) {
                if (reference.empty() || candidate.empty()) throw ParameterError("--reference and --candidate go together");
                pairs.push_back({"pair", reference, candidate});
            }
            if (pairs.empty() && seg.empty()) throw ParameterError("nothing to evaluate");
            if (pairs.empty()) return kOk;
            const auto summary = evaluate(pairs, out);
            for (const auto& p : summary.pairs) {
                const auto show = [](const std::optional<double>& v) {
                    char b[32];
                    if (v) std::snprintf(b, sizeof b, "%.6f", *v);
                    else std::snprintf(b, sizeof b, "n/a");
                    return std::string(b);
                };
                std::printf("%-24s nrmse %s  ssim %s  zncc %s%s\n", p.id.c_str(), show(p.nrmse).c_str(),
                            show(p.ssim).c_str(), show(p.zncc).c_str(), p.ok ? "" : "  FAILED");
            }
            std::printf("summary: %s\n", (out / "summary.json").string().c_str());
            return summary.failed == 0 ? kOk : kPartial;
        }
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kPartial;
    }
    return kOk;
}
