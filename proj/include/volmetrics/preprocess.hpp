#pragma once

#include "volmetrics/volume.hpp"

namespace volmetrics {

// HU intensity window, e.g. the lung window [-400, 400].
struct WindowSpec {
    double lo = -400.0;
    double hi = 400.0;
};

// clamp((v - lo) / (hi - lo), 0, 1); result is unit-tagged Normalized.
ImageVolume hu_window_normalize(const ImageVolume& vol, const WindowSpec& w);

// Trilinear resampling to a target spacing, voxel-center convention:
// output voxel i samples the input at (i + 0.5) * target / spacing - 0.5
// (index space), borders clamped. Output dims round half away from zero,
// minimum 1 per axis. Origin preserved.
Volume resample_trilinear(const Volume& vol, const Spacing& target);

// Same grid rule, nearest input voxel center; labels stay in {0,1}.
BinaryMask resample_nearest(const BinaryMask& mask, const Spacing& target);

} // namespace volmetrics
