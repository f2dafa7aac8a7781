// Image quality scores, tolerance-aware segmentation overlap, and the
// center-slice intensity profile and spectrum.

#pragma once

#include <vector>

#include "cellsynth/volume.hpp"

namespace cellsynth {

/// RMSE divided by the value range of the reference `a`.
[[nodiscard]] double nrmse(const VoxelVolume& a, const VoxelVolume& b);

/// Mean local SSIM over every position of a cubic `window`, uniform weights,
/// sample (co)variances, L = range of the reference `a`.
[[nodiscard]] double ssim(const VoxelVolume& a, const VoxelVolume& b, std::size_t window = 7, double k1 = 0.01,
                          double k2 = 0.03);

/// Pearson correlation of the voxel values.
[[nodiscard]] double zncc(const VoxelVolume& a, const VoxelVolume& b);

struct QualityReport {
    double nrmse = 0.0;
    double ssim = 0.0;
    double zncc = 0.0;
};

[[nodiscard]] QualityReport quality_report(const VoxelVolume& reference, const VoxelVolume& other);

/// P = prediction > threshold, T = truth. Returns
/// (|P and dilate(T, tol)| + |T and dilate(P, tol)|) / (|P| + |T|);
/// 1 if both are empty.
[[nodiscard]] double tolerant_iou(const VoxelVolume& prediction, const MaskVolume& truth, double threshold,
                                  int tolerance_voxels);

/// Greedy one-to-one matching by IoU (ties: larger truth instance first);
/// mean IoU over truth instances, unmatched ones count 0.
[[nodiscard]] double instance_iou(const LabelVolume& prediction, const LabelVolume& truth);

struct SegEvalConfig {
    double t_background = 0.1;
    double t_membrane = 0.4;
    double t_centroid = 0.2;
    int tol_background = 1;
    int tol_membrane = 1;
    int tol_centroid = 5;

    void validate() const;
};

struct SegScores {
    double background = 0.0;
    double membrane = 0.0;
    double centroid = 0.0;
};

/// Per-class tolerant IoU of probability maps against binary truth masks.
[[nodiscard]] SegScores evaluate_segmentation(const VoxelVolume& p_background, const MaskVolume& t_background,
                                              const VoxelVolume& p_membrane, const MaskVolume& t_membrane,
                                              const VoxelVolume& p_centroid, const MaskVolume& t_centroid,
                                              const SegEvalConfig& config = {});

/// Center xz slice (y = ny / 2) summed over z; one value per x.
[[nodiscard]] std::vector<double> intensity_profile(const VoxelVolume& v);

struct Spectrum {
    std::size_t nx = 0;  // columns (x)
    std::size_t nz = 0;  // rows (z)
    std::vector<double> magnitude;      // |DFT|, zero frequency at (nx / 2, nz / 2)
    std::vector<double> log_magnitude;  // log(1 + |DFT|)
};

/// 2D DFT magnitude of the center xz slice.
[[nodiscard]] Spectrum intensity_spectrum(const VoxelVolume& v);

/// Center xz slice as a row-major nz x nx array.
[[nodiscard]] std::vector<double> center_xz_slice(const VoxelVolume& v);

}  // namespace cellsynth
