#include "volmetrics/swi.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <stdexcept>

namespace volmetrics {

namespace {

void check_spec(const WindowSpec3D& w) {
    if (w.patch[0] <= 0 || w.patch[1] <= 0 || w.patch[2] <= 0)
        throw std::invalid_argument("patch dims must be positive");
    if (!(w.overlap >= 0.0 && w.overlap < 1.0))
        throw std::invalid_argument("overlap must be in [0,1)");
    if (!(w.sigma_scale > 0.0))
        throw std::invalid_argument("sigma_scale must be positive");
}

std::vector<int> axis_positions(int dim, int patch, double overlap) {
    const int stride = static_cast<int>(std::floor(patch * (1.0 - overlap) + 0.5));
    if (stride <= 0)
        throw std::invalid_argument("tile stride is non-positive");
    std::vector<int> pos;
    const int last = dim - patch;
    for (int p = 0;; p += stride) {
        if (p >= last) {
            pos.push_back(last);
            break;
        }
        pos.push_back(p);
    }
    return pos;
}

} // namespace

std::vector<std::array<int, 3>> tile_positions(std::array<int, 3> dims, const WindowSpec3D& w) {
    check_spec(w);
    for (int a = 0; a < 3; ++a)
        if (dims[a] < w.patch[a])
            throw std::invalid_argument("volume smaller than patch; pad before tiling");
    const auto xs = axis_positions(dims[0], w.patch[0], w.overlap);
    const auto ys = axis_positions(dims[1], w.patch[1], w.overlap);
    const auto zs = axis_positions(dims[2], w.patch[2], w.overlap);
    std::vector<std::array<int, 3>> tiles;
    tiles.reserve(xs.size() * ys.size() * zs.size());
    for (int z : zs)
        for (int y : ys)
            for (int x : xs)
                tiles.push_back({x, y, z});
    return tiles;
}

std::vector<float> gaussian_weight(const WindowSpec3D& w) {
    check_spec(w);
    std::array<std::vector<double>, 3> axis;
    for (int a = 0; a < 3; ++a) {
        const int n = w.patch[a];
        const double sigma = w.sigma_scale * n;
        const double c = (n - 1) / 2.0;
        axis[a].resize(n);
        for (int i = 0; i < n; ++i)
            axis[a][i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    }
    std::vector<float> weights(static_cast<std::size_t>(w.patch[0]) * w.patch[1] * w.patch[2]);
    std::size_t idx = 0;
    for (int z = 0; z < w.patch[2]; ++z)
        for (int y = 0; y < w.patch[1]; ++y)
            for (int x = 0; x < w.patch[0]; ++x)
                weights[idx++] = static_cast<float>(
                    std::max(axis[0][x] * axis[1][y] * axis[2][z], 1e-8));
    return weights;
}

ProbabilityMap aggregate(const Volume& vol, const PatchScorer& scorer, const WindowSpec3D& w,
                         int workers) {
    check_spec(w);
    if (!scorer)
        throw std::invalid_argument("aggregate: null scorer");
    workers = std::max(1, workers);

    // Symmetric zero padding up to patch size, cropped back at the end.
    std::array<int, 3> pdims = vol.dims;
    std::array<int, 3> lo_pad{0, 0, 0};
    bool padded = false;
    for (int a = 0; a < 3; ++a)
        if (pdims[a] < w.patch[a]) {
            const int missing = w.patch[a] - pdims[a];
            lo_pad[a] = missing / 2;
            pdims[a] = w.patch[a];
            padded = true;
        }

    Volume work;
    if (padded) {
        work = make_volume(pdims, vol.spacing, vol.unit);
        work.origin = vol.origin;
        for (int z = 0; z < vol.dims[2]; ++z)
            for (int y = 0; y < vol.dims[1]; ++y)
                for (int x = 0; x < vol.dims[0]; ++x)
                    work.at(x + lo_pad[0], y + lo_pad[1], z + lo_pad[2]) = vol.at(x, y, z);
    } else {
        work = vol;
    }

    const auto tiles = tile_positions(pdims, w);
    const auto weights = gaussian_weight(w);
    const std::size_t patch_n = weights.size();

    std::vector<double> acc(work.size(), 0.0);
    std::vector<double> wsum(work.size(), 0.0);

    auto extract = [&](std::array<int, 3> origin) {
        Volume patch = make_volume(w.patch, work.spacing, work.unit);
        for (int z = 0; z < w.patch[2]; ++z)
            for (int y = 0; y < w.patch[1]; ++y)
                for (int x = 0; x < w.patch[0]; ++x)
                    patch.at(x, y, z) = work.at(origin[0] + x, origin[1] + y, origin[2] + z);
        return patch;
    };

    auto score_tile = [&](std::array<int, 3> origin) {
        Volume patch = extract(origin);
        std::vector<float> pred = scorer(patch, origin);
        if (pred.size() != patch_n)
            throw std::runtime_error("scorer output shape does not match patch");
        for (float p : pred)
            if (!(p >= 0.0f && p <= 1.0f))
                throw std::runtime_error("scorer output outside [0,1]");
        return pred;
    };

    // Score in batches, accumulate strictly in tile order: identical results
    // for every worker count.
    for (std::size_t base = 0; base < tiles.size(); base += static_cast<std::size_t>(workers)) {
        const std::size_t batch = std::min<std::size_t>(workers, tiles.size() - base);
        std::vector<std::future<std::vector<float>>> futs;
        if (batch > 1) {
            futs.reserve(batch);
            for (std::size_t i = 0; i < batch; ++i)
                futs.push_back(std::async(std::launch::async, score_tile, tiles[base + i]));
        }
        for (std::size_t i = 0; i < batch; ++i) {
            const std::vector<float> pred = batch > 1 ? futs[i].get() : score_tile(tiles[base + i]);
            const auto& o = tiles[base + i];
            std::size_t pi = 0;
            for (int z = 0; z < w.patch[2]; ++z)
                for (int y = 0; y < w.patch[1]; ++y) {
                    std::size_t vi = work.index(o[0], o[1] + y, o[2] + z);
                    for (int x = 0; x < w.patch[0]; ++x, ++pi, ++vi) {
                        acc[vi] += double(weights[pi]) * double(pred[pi]);
                        wsum[vi] += double(weights[pi]);
                    }
                }
        }
    }

    ProbabilityMap out = make_volume(vol.dims, vol.spacing, Unit::Probability);
    out.origin = vol.origin;
    for (int z = 0; z < vol.dims[2]; ++z)
        for (int y = 0; y < vol.dims[1]; ++y)
            for (int x = 0; x < vol.dims[0]; ++x) {
                const std::size_t vi =
                    work.index(x + lo_pad[0], y + lo_pad[1], z + lo_pad[2]);
                const double v = acc[vi] / wsum[vi];
                out.at(x, y, z) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    return out;
}

PatchScorer make_directory_scorer(const std::string& dir) {
    return [dir](const Volume& patch, std::array<int, 3> origin) {
        const std::string name = std::to_string(origin[0]) + "_" + std::to_string(origin[1]) +
                                 "_" + std::to_string(origin[2]) + ".raw";
        const std::filesystem::path path = std::filesystem::path(dir) / name;
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("missing patch prediction: " + path.string());
        std::vector<float> pred(patch.size());
        in.read(reinterpret_cast<char*>(pred.data()),
                static_cast<std::streamsize>(pred.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(pred.size() * sizeof(float)))
            throw std::runtime_error("patch prediction too short: " + path.string());
        return pred;
    };
}

void export_patches(const Volume& vol, const PatchScorer& scorer, const WindowSpec3D& w,
                    const std::string& dir) {
    std::filesystem::create_directories(dir);
    // Reuse aggregate's tiling by wrapping the scorer with a writer.
    PatchScorer writer = [&](const Volume& patch, std::array<int, 3> origin) {
        std::vector<float> pred = scorer(patch, origin);
        const std::string name = std::to_string(origin[0]) + "_" + std::to_string(origin[1]) +
                                 "_" + std::to_string(origin[2]) + ".raw";
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        out.write(reinterpret_cast<const char*>(pred.data()),
                  static_cast<std::streamsize>(pred.size() * sizeof(float)));
        return pred;
    };
    aggregate(vol, writer, w, 1);
}

PatchScorer make_constant_scorer(float value) {
    return [value](const Volume& patch, std::array<int, 3>) {
        return std::vector<float>(patch.size(), value);
    };
}

} // namespace volmetrics
