// Dataset generation, quality sweeps, evaluation runs and the augmentation
// scheduler stream, driven by one JSON-serializable configuration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cellsynth/augment.hpp"
#include "cellsynth/conditioning.hpp"
#include "cellsynth/metrics.hpp"
#include "cellsynth/render.hpp"
#include "cellsynth/scaffold.hpp"
#include "cellsynth/tiling.hpp"

namespace cellsynth {

enum class OrganismKind { random_sh, mask_file };

struct OrganismConfig {
    OrganismKind kind = OrganismKind::random_sh;
    double radius = 0.0;  // physical units; 0 means 0.4 * smallest physical extent
    double gamma = 1.5;
    int max_order = 4;
    std::filesystem::path mask_path;  // kind == mask_file
};

enum class StructureKind { membranes, nuclei };

struct PipelineConfig {
    Dims dims{128, 128, 128};
    Spacing spacing{};
    OrganismConfig organism{};
    SceneOptions scene{};
    StructureKind structure = StructureKind::membranes;
    double alpha = 100.0;
    double beta = 100.0;
    std::vector<double> sweep_alphas;  // non-empty: one image per alpha, shared annotations
    RenderParams render{};
    Dims patch{128, 128, 64};
    Dims overlap{30, 30, 15};
    Dims crop{30, 30, 15};
    double weight_floor = 0.01;
    std::size_t samples = 1;
    std::filesystem::path output_dir = "cellsynth-output";
    std::uint64_t master_seed = 0;
    unsigned threads = 1;  // 0 = hardware concurrency

    /// Throws ParameterError naming the first invalid field.
    void validate() const;
};

[[nodiscard]] std::string to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys and bad types throw ParameterError.
[[nodiscard]] PipelineConfig config_from_json(const std::string& text);
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& config);

/// Relative paths resolve against $CELLSYNTH_OUTPUT_ROOT when it is set.
[[nodiscard]] std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

/// Independent per-sample seed from the master seed and the sample index.
[[nodiscard]] std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t index) noexcept;

/// Patch, overlap and crop adjusted to the volume: an axis shorter than the
/// patch gets a single full-length patch without margins.
[[nodiscard]] TilingPlan plan_for(const PipelineConfig& config);

struct ManifestFile {
    std::string role;  // image, labels, membranes, nuclei, foreground, conditioning
    std::string path;  // relative to the dataset directory
    std::string checksum;
    double alpha = 0.0;  // images and conditioning maps only
};

struct SampleRecord {
    std::string id;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<ManifestFile> files;
    std::size_t cells = 0;
    int layers = 0;
    std::vector<std::uint32_t> empty_cells;
    std::string warning;
};

struct DatasetManifest {
    std::string config_json;
    std::vector<SampleRecord> samples;

    [[nodiscard]] std::vector<std::string> failed() const;
};

[[nodiscard]] std::string to_json(const DatasetManifest& manifest);
[[nodiscard]] DatasetManifest manifest_from_json(const std::string& text);
[[nodiscard]] DatasetManifest load_manifest(const std::filesystem::path& path);

/// All in-memory products of one sample.
struct SampleVolumes {
    Scene scene;
    std::vector<ConditioningMap> conditioning;  // one per alpha
    std::vector<VoxelVolume> images;
};

/// Builds one sample without touching the disk.
[[nodiscard]] SampleVolumes synthesize_sample(const PipelineConfig& config, std::uint64_t seed);

/// Writes <output>/<id>/... for every sample plus <output>/manifest.json.
/// Per-sample failures are recorded, not thrown.
DatasetManifest generate_dataset(const PipelineConfig& config);

// --- evaluation -------------------------------------------------------------

struct EvalPair {
    std::string id;
    std::filesystem::path reference;
    std::filesystem::path candidate;
};

struct PairReport {
    std::string id;
    std::string reference;
    std::string candidate;
    bool ok = false;
    std::optional<double> nrmse, ssim, zncc;  // empty when undefined for the pair
    std::vector<std::string> errors;
    std::string profile_file;
    std::string spectrum_file;
};

struct EvalSummary {
    std::vector<PairReport> pairs;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::optional<double> mean_nrmse, mean_ssim, mean_zncc;
};

[[nodiscard]] std::string to_json(const EvalSummary& summary);
[[nodiscard]] EvalSummary summary_from_json(const std::string& text);

/// Image pairs: each sample image of a manifest against
/// <candidate_dir>/<sample id>.tif.
[[nodiscard]] std::vector<EvalPair> pairs_from_manifest(const std::filesystem::path& manifest_path,
                                                        const std::filesystem::path& candidate_dir);

/// Quality scores per pair, candidate profile (CSV) and log spectrum (raw
/// container) exports, and <output>/summary.json.
EvalSummary evaluate(const std::vector<EvalPair>& pairs, const std::filesystem::path& output_dir);

struct SegPaths {
    std::filesystem::path p_background, t_background;
    std::filesystem::path p_membrane, t_membrane;
    std::filesystem::path p_centroid, t_centroid;
};

[[nodiscard]] SegScores evaluate_segmentation_files(const SegPaths& paths, const SegEvalConfig& config);

// --- augmentation scheduler stream -----------------------------------------

enum class AdaInput { outputs, estimates };

struct AdaStreamOptions {
    AdaConfig controller{};
    AdaInput input = AdaInput::outputs;
    std::size_t batch = 1;  // outputs per epoch in `outputs` mode
};

struct AdaStreamStats {
    std::size_t lines = 0;
    std::size_t malformed = 0;
    std::size_t updates = 0;
};

/// Reads one scalar per line, closes an epoch every `batch` outputs (or on
/// every estimate) and prints p after each update. Malformed lines are
/// reported on `err` and skipped. Blank lines are ignored.
AdaStreamStats run_ada_stream(std::istream& in, std::ostream& out, std::ostream& err,
                              const AdaStreamOptions& options);

}  // namespace cellsynth
