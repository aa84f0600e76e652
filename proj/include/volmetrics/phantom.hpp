#pragma once

#include "volmetrics/volume.hpp"

#include <cstdint>
#include <vector>

namespace volmetrics {

struct SphereSpec {
    std::array<double, 3> center_mm{0, 0, 0};
    double radius_mm = 5.0;
    double plateau = 0.9; // foreground probability inside the sphere, (0.5, 1]
};

struct PhantomSpec {
    std::array<int, 3> dims{64, 64, 64};
    Spacing spacing{1.0, 1.0, 1.0};
    std::vector<SphereSpec> spheres;
    double background = 0.05; // [0, 0.5)
    double jitter = 0.0;      // uniform probability jitter amplitude
    std::uint64_t seed = 0;
};

struct PhantomCase {
    ImageVolume image;   // HU-like two-level field
    BinaryMask gt;       // voxel-center inclusion rasterization
    ProbabilityMap prob; // plateau inside, background outside (plus jitter)
};

// Deterministic: same spec + seed give bit-identical outputs. With jitter
// disabled, threshold_map(prob, 0.5) == gt.
PhantomCase gen_phantom(const PhantomSpec& spec);

struct MaskPair {
    BinaryMask gt;
    BinaryMask pred;
};

// Two axis-aligned cubes of side `side`, pred shifted by `shift` along x.
// The canonical Dice fixture: side 4, shift 2 gives clustered DSC 0.5.
MaskPair gen_shifted_pair(int side, int shift);

} // namespace volmetrics
