#pragma once

#include "volmetrics/seg_metrics.hpp"
#include "volmetrics/volume.hpp"

#include <optional>
#include <vector>

namespace volmetrics {

// Foreground voxels with at least one background 6-neighbor
// (out-of-bounds counts as background).
struct SurfaceSet {
    std::array<int, 3> dims{0, 0, 0};
    Spacing spacing{};
    std::vector<std::array<int, 3>> voxels;

    bool empty() const { return voxels.empty(); }
};

SurfaceSet extract_surface(const BinaryMask& mask);

// For every surface voxel of a, the exact Euclidean distance in mm to the
// nearest surface voxel of b. Uses a spacing-aware separable exact EDT;
// falls back to brute-force pairwise minima for small surfaces.
std::vector<double> directed_distances(const SurfaceSet& a, const SurfaceSet& b);

// Percentile of a value list, linear interpolation at rank (n-1)*q.
double percentile(std::vector<double> values, double q);

struct Hd95Options {
    double pct = 95.0;
    bool max_of_directed = false; // max of one-sided percentiles instead of combined
};

struct Hd95Result {
    double combined = 0.0;       // percentile of both directed lists concatenated
    double max_of_directed = 0.0;
    double value(const Hd95Options& opt) const {
        return opt.max_of_directed ? max_of_directed : combined;
    }
};

// HD95 over the matched clusters of a MatchTable (same restriction as
// clustered_dice). Empty when no GT region is detected.
std::optional<Hd95Result> hd95(const LabeledRegions& gt, const LabeledRegions& pred,
                               const MatchTable& m, const Hd95Options& opt = {});

} // namespace volmetrics
