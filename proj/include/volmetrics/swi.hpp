#pragma once

#include "volmetrics/volume.hpp"

#include <functional>
#include <string>
#include <vector>

namespace volmetrics {

struct WindowSpec3D {
    std::array<int, 3> patch{128, 128, 128};
    double overlap = 0.5;       // fraction of patch shared between neighbors
    double sigma_scale = 0.125; // Gaussian sigma as a fraction of patch size
};

// Patch scorer contract: given an input patch (and its origin on the padded
// grid) produce a patch-shaped probability block in [0,1].
using PatchScorer =
    std::function<std::vector<float>(const Volume& patch, std::array<int, 3> origin)>;

// Patch origins along each axis: 0, stride, 2*stride, ... with the last
// position clamped to dims - patch so the tail is always covered.
std::vector<std::array<int, 3>> tile_positions(std::array<int, 3> dims, const WindowSpec3D& w);

// Separable Gaussian importance weights, peak 1 at the patch center,
// floored at 1e-8.
std::vector<float> gaussian_weight(const WindowSpec3D& w);

// Gaussian-weighted sliding-window aggregation. Volumes smaller than the
// patch are zero-padded symmetrically and cropped back. Tiles are scored in
// batches of `workers` but accumulated in sorted-origin order, so the result
// is identical for any worker count.
ProbabilityMap aggregate(const Volume& vol, const PatchScorer& scorer, const WindowSpec3D& w,
                         int workers = 1);

// Directory protocol for precomputed patch predictions: each tile is a raw
// little-endian float32 block of patch shape named "<x>_<y>_<z>.raw" after
// its origin index.
PatchScorer make_directory_scorer(const std::string& dir);

// Writes every tile a scorer would be asked for, in the directory format above.
void export_patches(const Volume& vol, const PatchScorer& scorer, const WindowSpec3D& w,
                    const std::string& dir);

PatchScorer make_constant_scorer(float value);

} // namespace volmetrics
