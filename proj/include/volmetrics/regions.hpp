#pragma once

#include "volmetrics/volume.hpp"

#include <cstdint>
#include <vector>

namespace volmetrics {

struct Region {
    int id = 0; // 1..K
    std::int64_t voxel_count = 0;
    std::array<int, 3> bbox_lo{0, 0, 0}; // inclusive
    std::array<int, 3> bbox_hi{0, 0, 0}; // inclusive
    std::array<double, 3> centroid{0, 0, 0}; // index space
};

// Connected-component labeling of a binary mask. Label 0 is background;
// region ids are 1..K in first-encountered scan order (x-fastest).
struct LabeledRegions {
    std::array<int, 3> dims{0, 0, 0};
    Spacing spacing{};
    std::vector<std::int32_t> labels;
    std::vector<Region> regions;

    std::int32_t label_at(int x, int y, int z) const {
        return labels[static_cast<std::size_t>(z) * dims[1] * dims[0] +
                      static_cast<std::size_t>(y) * dims[0] + x];
    }
    std::int64_t foreground() const {
        std::int64_t n = 0;
        for (const auto& r : regions) n += r.voxel_count;
        return n;
    }
};

// connectivity must be 6, 18 or 26.
LabeledRegions connected_components(const BinaryMask& mask, int connectivity = 26);

// Drops regions below min_voxels and relabels the rest contiguously,
// preserving order. min_voxels <= 1 is a no-op.
LabeledRegions filter_min_size(const LabeledRegions& lr, std::int64_t min_voxels);

struct RegionStat {
    int id = 0;
    double volume_cc = 0.0;
    std::array<double, 3> centroid_mm{0, 0, 0};
};

std::vector<RegionStat> region_stats(const LabeledRegions& lr, const Spacing& spacing);

// Reconstructs the binary mask covered by the labeled foreground.
BinaryMask regions_to_mask(const LabeledRegions& lr);

} // namespace volmetrics
