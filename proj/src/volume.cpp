#include "volmetrics/volume.hpp"

#include <cmath>
#include <stdexcept>

namespace volmetrics {

bool Spacing::valid() const {
    return std::isfinite(sx) && std::isfinite(sy) && std::isfinite(sz) &&
           sx > 0.0 && sy > 0.0 && sz > 0.0;
}

const char* unit_name(Unit u) {
    switch (u) {
    case Unit::HU: return "HU";
    case Unit::Normalized: return "normalized";
    case Unit::Probability: return "probability";
    case Unit::Label: return "label";
    }
    return "unknown";
}

Unit unit_from_name(const std::string& name) {
    if (name == "HU") return Unit::HU;
    if (name == "normalized") return Unit::Normalized;
    if (name == "probability") return Unit::Probability;
    if (name == "label") return Unit::Label;
    throw std::invalid_argument("unknown intensity unit: " + name);
}

bool Volume::same_grid(const Volume& other, double spacing_tol) const {
    return dims == other.dims &&
           std::abs(spacing.sx - other.spacing.sx) <= spacing_tol &&
           std::abs(spacing.sy - other.spacing.sy) <= spacing_tol &&
           std::abs(spacing.sz - other.spacing.sz) <= spacing_tol;
}

Volume make_volume(std::array<int, 3> dims, Spacing spacing, Unit unit, float fill) {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw std::invalid_argument("volume dims must be positive");
    if (!spacing.valid())
        throw std::invalid_argument("spacing must be finite and positive");
    Volume v;
    v.dims = dims;
    v.spacing = spacing;
    v.unit = unit;
    v.data.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], fill);
    return v;
}

void validate(const Volume& v) {
    if (v.dims[0] <= 0 || v.dims[1] <= 0 || v.dims[2] <= 0)
        throw std::invalid_argument("volume dims must be positive");
    if (!v.spacing.valid())
        throw std::invalid_argument("spacing must be finite and positive");
    if (v.data.size() != v.size())
        throw std::invalid_argument("data length does not match dims");
    for (float x : v.data) {
        if (!std::isfinite(x))
            throw std::invalid_argument("volume contains non-finite values");
        if (v.unit == Unit::Probability && (x < 0.0f || x > 1.0f))
            throw std::invalid_argument("probability value outside [0,1]");
        if (v.unit == Unit::Label && x != 0.0f && x != 1.0f)
            throw std::invalid_argument("label value not in {0,1}");
    }
}

BinaryMask threshold_map(const ProbabilityMap& p, double t) {
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("threshold must be in (0,1)");
    BinaryMask mask = make_volume(p.dims, p.spacing, Unit::Label);
    mask.origin = p.origin;
    const float tf = static_cast<float>(t);
    for (std::size_t i = 0; i < p.data.size(); ++i)
        mask.data[i] = p.data[i] >= tf ? 1.0f : 0.0f;
    return mask;
}

std::int64_t foreground_count(const BinaryMask& mask) {
    std::int64_t n = 0;
    for (float x : mask.data)
        if (x != 0.0f) ++n;
    return n;
}

} // namespace volmetrics
