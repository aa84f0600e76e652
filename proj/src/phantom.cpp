#include "volmetrics/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace volmetrics {

PhantomCase gen_phantom(const PhantomSpec& spec) {
    if (spec.spheres.empty())
        throw std::invalid_argument("phantom needs at least one sphere");
    if (!(spec.background >= 0.0 && spec.background < 0.5))
        throw std::invalid_argument("background probability must be in [0, 0.5)");
    for (const auto& s : spec.spheres) {
        if (!(s.plateau > 0.5 && s.plateau <= 1.0))
            throw std::invalid_argument("sphere plateau must be in (0.5, 1]");
        if (s.radius_mm <= 0.0)
            throw std::invalid_argument("sphere radius must be positive");
        for (int a = 0; a < 3; ++a) {
            const double extent = spec.dims[a] * spec.spacing[a];
            if (s.center_mm[a] - s.radius_mm < 0.0 || s.center_mm[a] + s.radius_mm > extent)
                throw std::invalid_argument("sphere extends outside the volume");
        }
    }

    PhantomCase out;
    out.image = make_volume(spec.dims, spec.spacing, Unit::HU);
    out.gt = make_volume(spec.dims, spec.spacing, Unit::Label);
    out.prob = make_volume(spec.dims, spec.spacing, Unit::Probability);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> noise(-spec.jitter, spec.jitter);

    const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                // voxel-center position in mm
                const double px = (x + 0.5) * spec.spacing.sx;
                const double py = (y + 0.5) * spec.spacing.sy;
                const double pz = (z + 0.5) * spec.spacing.sz;

                double p = spec.background;
                bool inside = false;
                for (const auto& s : spec.spheres) {
                    const double dx = px - s.center_mm[0];
                    const double dy = py - s.center_mm[1];
                    const double dz = pz - s.center_mm[2];
                    if (dx * dx + dy * dy + dz * dz <= s.radius_mm * s.radius_mm) {
                        inside = true;
                        p = std::max(p, s.plateau);
                    }
                }
                if (spec.jitter > 0.0)
                    p = std::clamp(p + noise(rng), 0.0, 1.0);

                const std::size_t i = out.gt.index(x, y, z);
                out.gt.data[i] = inside ? 1.0f : 0.0f;
                out.prob.data[i] = static_cast<float>(p);
                out.image.data[i] = inside ? 40.0f : -750.0f; // soft tissue vs lung
            }

    return out;
}

MaskPair gen_shifted_pair(int side, int shift) {
    if (side <= 0 || shift < 0 || shift > side)
        throw std::invalid_argument("gen_shifted_pair: need 0 <= shift <= side > 0");

    const int margin = 2;
    const std::array<int, 3> dims{side + shift + 2 * margin, side + 2 * margin,
                                  side + 2 * margin};
    MaskPair pair;
    pair.gt = make_volume(dims, Spacing{1, 1, 1}, Unit::Label);
    pair.pred = make_volume(dims, Spacing{1, 1, 1}, Unit::Label);
    for (int z = 0; z < side; ++z)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                pair.gt.at(margin + x, margin + y, margin + z) = 1.0f;
                pair.pred.at(margin + shift + x, margin + y, margin + z) = 1.0f;
            }
    return pair;
}

} // namespace volmetrics
