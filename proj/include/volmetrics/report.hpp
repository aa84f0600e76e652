#pragma once

#include "volmetrics/preprocess.hpp"
#include "volmetrics/seg_metrics.hpp"
#include "volmetrics/surface_distance.hpp"
#include "volmetrics/uncertainty.hpp"
#include "volmetrics/volume.hpp"

#include <optional>
#include <string>
#include <vector>

namespace volmetrics {

struct MetricOptions {
    int connectivity = 26;
    double tau = 0.5;
    bool use_iou = false;
    double threshold = 0.5;
    LogBase entropy_base = LogBase::Two;
    bool hd95_max_of_directed = false;
    std::int64_t min_region_voxels = 0;
};

struct CaseSpec {
    std::string id;
    std::string image_path; // optional for metric-only runs
    std::string gt_path;    // required for ID cohorts
    std::string prob_path;
};

enum class CohortRole { ID, OOD };

struct CohortConfig {
    std::string name;
    CohortRole role = CohortRole::ID;
    std::vector<CaseSpec> cases;
    MetricOptions options;
    std::string output_dir;
    int workers = 0; // 0 = VOLMETRICS_WORKERS env or 1

    // optional preprocessing, applied per case before thresholding
    bool apply_window = false;
    WindowSpec window{-400.0, 400.0};
    bool resample = false;
    Spacing target_spacing{1.0, 1.0, 1.0};

    bool slice_profile = false; // emit per-slice entropy CSV per case
};

CohortConfig load_cohort_config(const std::string& path);

struct ImageMetrics {
    std::string case_id;
    bool ok = false;
    std::string error;

    std::optional<double> dsc;
    std::optional<double> hd95_mm;
    std::optional<double> hd95_directed_mm; // max-of-directed variant
    DetectionCounts counts;
    double mean_entropy = 0.0;
    bool no_detection = false; // empty prediction; entropy/msp flagged
    double msp = 1.0;          // flagged images score maximal confidence
    double predicted_volume_cc = 0.0;
    std::vector<std::optional<double>> slice_entropy;
};

// Per-case pipeline shared by both cohort runners and the tests:
// (preprocess ->) threshold -> components -> match -> DSC/HD95 -> entropy/MSP.
ImageMetrics evaluate_case(const ProbabilityMap& prob, const BinaryMask* gt,
                           const MetricOptions& opt);

struct CohortResult {
    std::vector<ImageMetrics> per_image;
    int failed_cases = 0;
    std::string csv_path;
    std::string summary_path;
};

// Writes <output_dir>/per_image.csv and <output_dir>/summary.json.
// Per-case failures are recorded and skipped; throws only when configuration
// itself is unusable. Returns the number of successful cases.
CohortResult run_eval_id(const CohortConfig& cfg);

// OOD run scored against the msp column of a prior ID per_image.csv.
CohortResult run_eval_ood(const CohortConfig& cfg, const std::string& id_scores_csv);

std::vector<double> read_msp_column(const std::string& per_image_csv);

// Entropy-overlay slice renders in the style of the report figures:
// windowed grayscale slice, entropy heatmap, mask contour, per-slice mean
// entropy printed top-right. Default slices: lowest / z-centroid / highest
// tumor-bearing axial slices. Returns written file paths.
std::vector<std::string> render_overlay(const ImageVolume& image, const Volume& entropy,
                                        const BinaryMask& mask, std::vector<int> slices,
                                        const std::string& out_dir,
                                        const std::string& prefix, int zoom = 2);

// Default slice choice; empty mask selects the volume's middle slice only.
std::vector<int> default_overlay_slices(const BinaryMask& mask);

} // namespace volmetrics
