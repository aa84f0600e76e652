#include "volmetrics/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace volmetrics {

namespace {

int round_half_away(double x) {
    return static_cast<int>(x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

std::array<int, 3> output_dims(const std::array<int, 3>& dims, const Spacing& src,
                               const Spacing& dst) {
    std::array<int, 3> out{};
    for (int a = 0; a < 3; ++a) {
        out[a] = std::max(1, round_half_away(dims[a] * src[a] / dst[a]));
    }
    return out;
}

// Continuous input index sampled by output voxel i (voxel-center aligned).
inline double sample_coord(int i, double target, double src) {
    return ((i + 0.5) * target - 0.5 * src) / src;
}

} // namespace

ImageVolume hu_window_normalize(const ImageVolume& vol, const WindowSpec& w) {
    if (!(w.lo < w.hi))
        throw std::invalid_argument("window lo must be < hi");
    ImageVolume out = vol;
    out.unit = Unit::Normalized;
    const float lo = static_cast<float>(w.lo);
    const float inv = static_cast<float>(1.0 / (w.hi - w.lo));
    for (float& x : out.data)
        x = std::clamp((x - lo) * inv, 0.0f, 1.0f);
    return out;
}

Volume resample_trilinear(const Volume& vol, const Spacing& target) {
    if (!target.valid())
        throw std::invalid_argument("target spacing must be positive");
    if (vol.unit == Unit::Label)
        throw std::invalid_argument("label volumes must use resample_nearest");

    const auto odims = output_dims(vol.dims, vol.spacing, target);
    if (target.sx == vol.spacing.sx && target.sy == vol.spacing.sy &&
        target.sz == vol.spacing.sz)
        return vol; // identity resampling is exact

    Volume out = make_volume(odims, target, vol.unit);
    out.origin = vol.origin;

    const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
    for (int z = 0; z < odims[2]; ++z) {
        double wz = std::clamp(sample_coord(z, target.sz, vol.spacing.sz), 0.0, double(nz - 1));
        int z0 = std::min(nz - 1, static_cast<int>(wz));
        int z1 = std::min(nz - 1, z0 + 1);
        double fz = wz - z0;
        for (int y = 0; y < odims[1]; ++y) {
            double wy = std::clamp(sample_coord(y, target.sy, vol.spacing.sy), 0.0, double(ny - 1));
            int y0 = std::min(ny - 1, static_cast<int>(wy));
            int y1 = std::min(ny - 1, y0 + 1);
            double fy = wy - y0;
            for (int x = 0; x < odims[0]; ++x) {
                double wx = std::clamp(sample_coord(x, target.sx, vol.spacing.sx), 0.0, double(nx - 1));
                int x0 = std::min(nx - 1, static_cast<int>(wx));
                int x1 = std::min(nx - 1, x0 + 1);
                double fx = wx - x0;

                double c00 = vol.at(x0, y0, z0) * (1 - fx) + vol.at(x1, y0, z0) * fx;
                double c10 = vol.at(x0, y1, z0) * (1 - fx) + vol.at(x1, y1, z0) * fx;
                double c01 = vol.at(x0, y0, z1) * (1 - fx) + vol.at(x1, y0, z1) * fx;
                double c11 = vol.at(x0, y1, z1) * (1 - fx) + vol.at(x1, y1, z1) * fx;
                double c0 = c00 * (1 - fy) + c10 * fy;
                double c1 = c01 * (1 - fy) + c11 * fy;
                out.at(x, y, z) = static_cast<float>(c0 * (1 - fz) + c1 * fz);
            }
        }
    }
    return out;
}

BinaryMask resample_nearest(const BinaryMask& mask, const Spacing& target) {
    if (!target.valid())
        throw std::invalid_argument("target spacing must be positive");

    if (target.sx == mask.spacing.sx && target.sy == mask.spacing.sy &&
        target.sz == mask.spacing.sz)
        return mask;

    const auto odims = output_dims(mask.dims, mask.spacing, target);
    BinaryMask out = make_volume(odims, target, Unit::Label);
    out.origin = mask.origin;

    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    for (int z = 0; z < odims[2]; ++z) {
        int zi = std::clamp(round_half_away(sample_coord(z, target.sz, mask.spacing.sz)), 0, nz - 1);
        for (int y = 0; y < odims[1]; ++y) {
            int yi = std::clamp(round_half_away(sample_coord(y, target.sy, mask.spacing.sy)), 0, ny - 1);
            for (int x = 0; x < odims[0]; ++x) {
                int xi = std::clamp(round_half_away(sample_coord(x, target.sx, mask.spacing.sx)), 0, nx - 1);
                out.at(x, y, z) = mask.at(xi, yi, zi);
            }
        }
    }
    return out;
}

} // namespace volmetrics
