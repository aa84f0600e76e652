#pragma once

#include "volmetrics/regions.hpp"

#include <optional>
#include <span>
#include <vector>

namespace volmetrics {

struct GtMatch {
    int id = 0;
    double covered_fraction = 0.0; // |G ∩ PredMask| / |G| (or best IoU in IoU mode)
    bool detected = false;
};

struct PredMatch {
    int id = 0;
    double gt_overlap_fraction = 0.0; // |P ∩ GtMask| / |P| (or best IoU in IoU mode)
    bool false_positive = false;
    bool matched = false; // overlap >= tau and intersects a detected GT region
};

struct DetectionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

struct RegionPairOverlap {
    int gt_id = 0;
    int pred_id = 0;
    std::int64_t intersection = 0;
};

// GT↔prediction region correspondences under the >= tau overlap rule.
// A GT region counts as detected when the prediction covers at least tau of
// it; a predicted region is a false positive when less than tau of it lies
// on GT foreground. With use_iou, both tests use the pairwise
// intersection-over-union against the best-matching region instead.
struct MatchTable {
    std::vector<GtMatch> gt;
    std::vector<PredMatch> pred;
    std::vector<RegionPairOverlap> pairs; // nonzero intersections only
    DetectionCounts counts;
    double tau = 0.5;
    bool use_iou = false;
};

MatchTable match_regions(const LabeledRegions& gt, const LabeledRegions& pred,
                         double tau = 0.5, bool use_iou = false);

// Volumetric Dice over the matched clusters: A = union of detected GT
// regions, B = union of matched predicted regions. Empty when no GT region
// was detected.
std::optional<double> clustered_dice(const LabeledRegions& gt, const LabeledRegions& pred,
                                     const MatchTable& m);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Pools TP/FP/FN over the cohort, then P = TP/(TP+FP), R = TP/(TP+FN).
F1Result cohort_f1(std::span<const DetectionCounts> counts);

// Total predicted foreground volume in cc (misdetection burden on OOD images).
double volume_occupancy(const LabeledRegions& pred, const Spacing& spacing);

} // namespace volmetrics
