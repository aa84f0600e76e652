#include "volmetrics/surface_distance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace volmetrics {

namespace {

constexpr double kInf = 1e20;

// 1D exact squared-distance transform (lower envelope of parabolas) with
// sample positions at i*step, so anisotropic spacing folds in directly.
void dt1d(const double* f, double* d, int* v, double* z, int n, double step) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        const double xq = q * step;
        double s;
        for (;;) {
            const double xv = v[k] * step;
            s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        const double xq = q * step;
        while (z[k + 1] < xq) ++k;
        const double dx = xq - v[k] * step;
        d[q] = dx * dx + f[v[k]];
    }
}

// Exact squared EDT of the seed set over the full grid, spacing-aware.
std::vector<double> squared_edt(const SurfaceSet& seeds) {
    const int nx = seeds.dims[0], ny = seeds.dims[1], nz = seeds.dims[2];
    const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
    std::vector<double> dist(n, kInf);
    for (const auto& p : seeds.voxels)
        dist[static_cast<std::size_t>(p[2]) * ny * nx +
             static_cast<std::size_t>(p[1]) * nx + p[0]] = 0.0;

    const int nmax = std::max({nx, ny, nz});
    std::vector<double> f(nmax), d(nmax), z(nmax + 1);
    std::vector<int> v(nmax);

    // x lines
    for (int zz = 0; zz < nz; ++zz)
        for (int yy = 0; yy < ny; ++yy) {
            double* line = &dist[static_cast<std::size_t>(zz) * ny * nx +
                                 static_cast<std::size_t>(yy) * nx];
            dt1d(line, d.data(), v.data(), z.data(), nx, seeds.spacing.sx);
            std::copy_n(d.data(), nx, line);
        }
    // y lines
    for (int zz = 0; zz < nz; ++zz)
        for (int xx = 0; xx < nx; ++xx) {
            for (int yy = 0; yy < ny; ++yy)
                f[yy] = dist[static_cast<std::size_t>(zz) * ny * nx +
                             static_cast<std::size_t>(yy) * nx + xx];
            dt1d(f.data(), d.data(), v.data(), z.data(), ny, seeds.spacing.sy);
            for (int yy = 0; yy < ny; ++yy)
                dist[static_cast<std::size_t>(zz) * ny * nx +
                     static_cast<std::size_t>(yy) * nx + xx] = d[yy];
        }
    // z lines
    for (int yy = 0; yy < ny; ++yy)
        for (int xx = 0; xx < nx; ++xx) {
            for (int zz = 0; zz < nz; ++zz)
                f[zz] = dist[static_cast<std::size_t>(zz) * ny * nx +
                             static_cast<std::size_t>(yy) * nx + xx];
            dt1d(f.data(), d.data(), v.data(), z.data(), nz, seeds.spacing.sz);
            for (int zz = 0; zz < nz; ++zz)
                dist[static_cast<std::size_t>(zz) * ny * nx +
                     static_cast<std::size_t>(yy) * nx + xx] = d[zz];
        }

    return dist;
}

} // namespace

SurfaceSet extract_surface(const BinaryMask& mask) {
    SurfaceSet s;
    s.dims = mask.dims;
    s.spacing = mask.spacing;
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                if (mask.at(x, y, z) == 0.0f)
                    continue;
                const bool boundary =
                    x == 0 || mask.at(x - 1, y, z) == 0.0f ||
                    x == nx - 1 || mask.at(x + 1, y, z) == 0.0f ||
                    y == 0 || mask.at(x, y - 1, z) == 0.0f ||
                    y == ny - 1 || mask.at(x, y + 1, z) == 0.0f ||
                    z == 0 || mask.at(x, y, z - 1) == 0.0f ||
                    z == nz - 1 || mask.at(x, y, z + 1) == 0.0f;
                if (boundary)
                    s.voxels.push_back({x, y, z});
            }
    return s;
}

std::vector<double> directed_distances(const SurfaceSet& a, const SurfaceSet& b) {
    if (b.empty())
        throw std::invalid_argument("directed_distances: target surface is empty");
    const Spacing& sp = a.spacing;

    std::vector<double> out;
    out.reserve(a.voxels.size());

    if (a.voxels.size() <= 4096 && b.voxels.size() <= 4096) {
        for (const auto& p : a.voxels) {
            double best = kInf;
            for (const auto& q : b.voxels) {
                const double dx = (p[0] - q[0]) * sp.sx;
                const double dy = (p[1] - q[1]) * sp.sy;
                const double dz = (p[2] - q[2]) * sp.sz;
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
            out.push_back(std::sqrt(best));
        }
        return out;
    }

    if (a.dims != b.dims)
        throw std::invalid_argument("directed_distances: grids differ");
    const auto dist2 = squared_edt(b);
    const int nx = a.dims[0], ny = a.dims[1];
    for (const auto& p : a.voxels)
        out.push_back(std::sqrt(dist2[static_cast<std::size_t>(p[2]) * ny * nx +
                                      static_cast<std::size_t>(p[1]) * nx + p[0]]));
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty())
        throw std::invalid_argument("percentile of empty list");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * q / 100.0;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size())
        return values.back();
    const double frac = h - lo;
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::optional<Hd95Result> hd95(const LabeledRegions& gt, const LabeledRegions& pred,
                               const MatchTable& m, const Hd95Options& opt) {
    if (gt.dims != pred.dims)
        throw std::invalid_argument("hd95: grids differ");
    if (m.counts.tp == 0)
        return std::nullopt;

    BinaryMask a_mask = make_volume(gt.dims, gt.spacing, Unit::Label);
    BinaryMask b_mask = make_volume(pred.dims, pred.spacing, Unit::Label);
    std::vector<char> gt_keep(gt.regions.size() + 1, 0);
    std::vector<char> pred_keep(pred.regions.size() + 1, 0);
    for (const auto& gm : m.gt)
        if (gm.detected) gt_keep[gm.id] = 1;
    for (const auto& pm : m.pred)
        if (pm.matched) pred_keep[pm.id] = 1;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        if (gt_keep[gt.labels[i]]) a_mask.data[i] = 1.0f;
        if (pred_keep[pred.labels[i]]) b_mask.data[i] = 1.0f;
    }

    SurfaceSet sa = extract_surface(a_mask);
    SurfaceSet sb = extract_surface(b_mask);
    if (sa.empty() || sb.empty())
        return std::nullopt;

    auto ab = directed_distances(sa, sb);
    auto ba = directed_distances(sb, sa);

    Hd95Result r;
    r.max_of_directed = std::max(percentile(ab, opt.pct), percentile(ba, opt.pct));
    ab.insert(ab.end(), ba.begin(), ba.end());
    r.combined = percentile(std::move(ab), opt.pct);
    return r;
}

} // namespace volmetrics
