#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace volmetrics {

// Millimeters per voxel along each axis.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    double voxel_volume_mm3() const { return sx * sy * sz; }
    double operator[](int axis) const { return axis == 0 ? sx : axis == 1 ? sy : sz; }
    bool valid() const;
};

enum class Unit : std::uint8_t {
    HU,          // raw CT intensities
    Normalized,  // window-normalized [0,1]
    Probability, // per-voxel foreground probability [0,1]
    Label        // binary {0,1}
};

const char* unit_name(Unit u);
Unit unit_from_name(const std::string& name);

// Dense 3D scalar grid, x-fastest storage order. Canonical scalar is float;
// label volumes still store float but hold only {0,1}.
struct Volume {
    std::array<int, 3> dims{0, 0, 0};
    Spacing spacing{};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    Unit unit = Unit::HU;
    std::vector<float> data;

    std::size_t size() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(z) * dims[1] * dims[0] +
               static_cast<std::size_t>(y) * dims[0] + x;
    }
    float at(int x, int y, int z) const { return data[index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }

    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }
    bool same_grid(const Volume& other, double spacing_tol = 1e-6) const;
};

using ImageVolume = Volume;
using ProbabilityMap = Volume;
using BinaryMask = Volume;

Volume make_volume(std::array<int, 3> dims, Spacing spacing, Unit unit, float fill = 0.0f);

// Throws std::invalid_argument when the volume breaks its unit invariants
// (size mismatch, non-finite values, probabilities outside [0,1], non-binary labels).
void validate(const Volume& v);

// voxel = 1 iff p >= t. Requires 0 < t < 1.
BinaryMask threshold_map(const ProbabilityMap& p, double t = 0.5);

std::int64_t foreground_count(const BinaryMask& mask);

} // namespace volmetrics
