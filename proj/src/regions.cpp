#include "volmetrics/regions.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace volmetrics {

namespace {

std::vector<std::array<int, 3>> neighbor_offsets(int connectivity) {
    std::vector<std::array<int, 3>> offs;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (connectivity == 6 && manhattan > 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                offs.push_back({dx, dy, dz});
            }
    return offs;
}

} // namespace

LabeledRegions connected_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw std::invalid_argument("connectivity must be 6, 18 or 26");

    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    LabeledRegions lr;
    lr.dims = mask.dims;
    lr.spacing = mask.spacing;
    lr.labels.assign(mask.size(), 0);

    const auto offs = neighbor_offsets(connectivity);
    std::vector<std::size_t> stack;

    // Flood fill in scan order: labels come out in first-encounter order.
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                std::size_t seed = mask.index(x, y, z);
                if (mask.data[seed] == 0.0f || lr.labels[seed] != 0)
                    continue;

                const std::int32_t id = static_cast<std::int32_t>(lr.regions.size()) + 1;
                Region r;
                r.id = id;
                r.bbox_lo = {x, y, z};
                r.bbox_hi = {x, y, z};

                lr.labels[seed] = id;
                stack.clear();
                stack.push_back(seed);
                while (!stack.empty()) {
                    std::size_t cur = stack.back();
                    stack.pop_back();
                    int cz = static_cast<int>(cur / (static_cast<std::size_t>(nx) * ny));
                    int rem = static_cast<int>(cur % (static_cast<std::size_t>(nx) * ny));
                    int cy = rem / nx;
                    int cx = rem % nx;

                    ++r.voxel_count;
                    r.centroid[0] += cx;
                    r.centroid[1] += cy;
                    r.centroid[2] += cz;
                    r.bbox_lo = {std::min(r.bbox_lo[0], cx), std::min(r.bbox_lo[1], cy),
                                 std::min(r.bbox_lo[2], cz)};
                    r.bbox_hi = {std::max(r.bbox_hi[0], cx), std::max(r.bbox_hi[1], cy),
                                 std::max(r.bbox_hi[2], cz)};

                    for (const auto& d : offs) {
                        int qx = cx + d[0], qy = cy + d[1], qz = cz + d[2];
                        if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz)
                            continue;
                        std::size_t q = mask.index(qx, qy, qz);
                        if (mask.data[q] != 0.0f && lr.labels[q] == 0) {
                            lr.labels[q] = id;
                            stack.push_back(q);
                        }
                    }
                }

                r.centroid[0] /= r.voxel_count;
                r.centroid[1] /= r.voxel_count;
                r.centroid[2] /= r.voxel_count;
                lr.regions.push_back(r);
            }

    return lr;
}

LabeledRegions filter_min_size(const LabeledRegions& lr, std::int64_t min_voxels) {
    if (min_voxels <= 1)
        return lr;

    std::vector<std::int32_t> remap(lr.regions.size() + 1, 0);
    LabeledRegions out;
    out.dims = lr.dims;
    out.spacing = lr.spacing;
    for (const auto& r : lr.regions) {
        if (r.voxel_count >= min_voxels) {
            Region kept = r;
            kept.id = static_cast<int>(out.regions.size()) + 1;
            remap[r.id] = kept.id;
            out.regions.push_back(kept);
        }
    }
    out.labels.resize(lr.labels.size());
    for (std::size_t i = 0; i < lr.labels.size(); ++i)
        out.labels[i] = remap[lr.labels[i]];
    return out;
}

std::vector<RegionStat> region_stats(const LabeledRegions& lr, const Spacing& spacing) {
    std::vector<RegionStat> stats;
    stats.reserve(lr.regions.size());
    for (const auto& r : lr.regions) {
        RegionStat s;
        s.id = r.id;
        s.volume_cc = r.voxel_count * spacing.voxel_volume_mm3() / 1000.0;
        s.centroid_mm = {r.centroid[0] * spacing.sx, r.centroid[1] * spacing.sy,
                         r.centroid[2] * spacing.sz};
        stats.push_back(s);
    }
    return stats;
}

BinaryMask regions_to_mask(const LabeledRegions& lr) {
    BinaryMask mask = make_volume(lr.dims, lr.spacing, Unit::Label);
    for (std::size_t i = 0; i < lr.labels.size(); ++i)
        mask.data[i] = lr.labels[i] != 0 ? 1.0f : 0.0f;
    return mask;
}

} // namespace volmetrics
