#pragma once

#include "volmetrics/volume.hpp"

#include <string>

namespace volmetrics {

// NIfTI-1 single-file reader/writer (.nii, .nii.gz). Only 3D (or 4D with
// trailing size-1 dims) volumes, datatypes uint8/int16/int32/float32/float64.
// scl_slope/scl_inter are applied on read when slope != 0; byte order is
// auto-detected via sizeof_hdr == 348.
Volume read_nifti(const std::string& path);

// Writes float32 payload (uint8 for Unit::Label), magic "n+1", vox_offset 352.
void write_nifti(const Volume& v, const std::string& path);

// Internal raw fixture format: little-endian float32 payload plus a JSON
// sidecar at <path>.json holding {dims, spacing, origin, unit}.
Volume read_raw(const std::string& path);
void write_raw(const Volume& v, const std::string& path);

} // namespace volmetrics
