#pragma once

#include "volmetrics/volume.hpp"

#include <optional>
#include <span>
#include <vector>

namespace volmetrics {

enum class LogBase { Two, Natural };

// Per-voxel binary entropy -(p log p + (1-p) log(1-p)) with 0 log 0 = 0.
// Base-2 normalizes to [0,1]; natural log tops out at ln 2.
Volume entropy_map(const ProbabilityMap& p, LogBase base = LogBase::Two);

double binary_entropy(double p, LogBase base = LogBase::Two);

// Mean entropy over mask==1 voxels; empty when no voxel is predicted tumor.
std::optional<double> mean_entropy_over_tumor(const Volume& entropy, const BinaryMask& mask);

// Per-axial-slice mean entropy over tumor voxels; slices without tumor are empty.
std::vector<std::optional<double>> slice_entropy_profile(const Volume& entropy,
                                                         const BinaryMask& mask);

// Mean of max(p, 1-p) over mask==1 voxels; empty when the mask is empty
// (such images score msp = 1.0 downstream and are flagged).
std::optional<double> msp_score(const ProbabilityMap& p, const BinaryMask& mask);

// Both take OOD-ness scores (higher = more OOD, e.g. 1 - msp).
// auroc: fraction of (ood, id) pairs with s_ood > s_id, ties 0.5 (Mann-Whitney).
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

// FPR over ID at the highest threshold that still flags strictly more than
// 95% of the OOD scores (inclusive s >= t on both sides).
double fpr_at_95tpr(std::span<const double> id_scores, std::span<const double> ood_scores);

struct SummaryStats {
    double mean = 0.0;
    double stddev = 0.0; // sample std, n-1 denominator, 0 for n == 1
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

SummaryStats cohort_stats(std::span<const double> values);

} // namespace volmetrics
