#pragma once

#include "volmetrics/regions.hpp"
#include "volmetrics/seg_metrics.hpp"
#include "volmetrics/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testutil {

using namespace volmetrics;

inline BinaryMask mask_from(std::array<int, 3> dims, Spacing sp,
                            const std::function<bool(int, int, int)>& pred) {
    BinaryMask m = make_volume(dims, sp, Unit::Label);
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x)
                m.at(x, y, z) = pred(x, y, z) ? 1.0f : 0.0f;
    return m;
}

inline BinaryMask random_mask(std::mt19937& rng, std::array<int, 3> dims, double density,
                              Spacing sp = {1, 1, 1}) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return mask_from(dims, sp, [&](int, int, int) { return u(rng) < density; });
}

// Brute-force connected components by BFS, independent of scan-order details:
// returns the partition as a set of sorted voxel-index sets.
inline std::set<std::vector<std::size_t>> flood_fill_partition(const BinaryMask& mask,
                                                               int connectivity) {
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    std::vector<char> seen(mask.size(), 0);
    std::set<std::vector<std::size_t>> partition;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (mask.data[start] == 0.0f || seen[start])
            continue;
        std::vector<std::size_t> comp;
        std::queue<std::size_t> q;
        q.push(start);
        seen[start] = 1;
        while (!q.empty()) {
            std::size_t cur = q.front();
            q.pop();
            comp.push_back(cur);
            int cz = int(cur / (std::size_t(nx) * ny));
            int cy = int(cur % (std::size_t(nx) * ny)) / nx;
            int cx = int(cur % nx);
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int man = std::abs(dx) + std::abs(dy) + std::abs(dz);
                        if (man == 0) continue;
                        if (connectivity == 6 && man > 1) continue;
                        if (connectivity == 18 && man > 2) continue;
                        int qx = cx + dx, qy = cy + dy, qz = cz + dz;
                        if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz)
                            continue;
                        std::size_t qi = mask.index(qx, qy, qz);
                        if (mask.data[qi] != 0.0f && !seen[qi]) {
                            seen[qi] = 1;
                            q.push(qi);
                        }
                    }
        }
        std::sort(comp.begin(), comp.end());
        partition.insert(comp);
    }
    return partition;
}

inline std::set<std::vector<std::size_t>> labeled_partition(const LabeledRegions& lr) {
    std::map<std::int32_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < lr.labels.size(); ++i)
        if (lr.labels[i] != 0)
            by_label[lr.labels[i]].push_back(i);
    std::set<std::vector<std::size_t>> partition;
    for (auto& [label, voxels] : by_label) {
        std::sort(voxels.begin(), voxels.end());
        partition.insert(std::move(voxels));
    }
    return partition;
}

// Exhaustive region-pair detection oracle: every intersection counted
// directly from the label maps.
inline DetectionCounts match_oracle(const LabeledRegions& gt, const LabeledRegions& pred,
                                    double tau) {
    DetectionCounts c;
    for (const auto& g : gt.regions) {
        std::int64_t covered = 0;
        for (std::size_t i = 0; i < gt.labels.size(); ++i)
            if (gt.labels[i] == g.id && pred.labels[i] != 0)
                ++covered;
        (double(covered) / double(g.voxel_count) >= tau) ? ++c.tp : ++c.fn;
    }
    for (const auto& p : pred.regions) {
        std::int64_t on_gt = 0;
        for (std::size_t i = 0; i < pred.labels.size(); ++i)
            if (pred.labels[i] == p.id && gt.labels[i] != 0)
                ++on_gt;
        if (double(on_gt) / double(p.voxel_count) < tau)
            ++c.fp;
    }
    return c;
}

// O(n*m) pairwise AUROC oracle, ties 0.5.
inline double auroc_oracle(const std::vector<double>& id_s, const std::vector<double>& ood_s) {
    double wins = 0.0;
    for (double o : ood_s)
        for (double i : id_s)
            wins += o > i ? 1.0 : (o == i ? 0.5 : 0.0);
    return wins / (double(id_s.size()) * double(ood_s.size()));
}

// Sort-and-scan FPR@95 oracle: scan candidate thresholds from high to low,
// stop at the first flagging strictly more than 95% of the OOD scores.
inline double fpr95_oracle(const std::vector<double>& id_s, const std::vector<double>& ood_s) {
    std::vector<double> cand = ood_s;
    std::sort(cand.begin(), cand.end(), std::greater<>());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    double t = cand.back();
    for (double c : cand) {
        std::int64_t captured = 0;
        for (double o : ood_s)
            if (o >= c) ++captured;
        if (double(captured) > 0.95 * double(ood_s.size())) {
            t = c;
            break;
        }
    }
    std::int64_t fp = 0;
    for (double i : id_s)
        if (i >= t) ++fp;
    return double(fp) / double(id_s.size());
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("volmetrics_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& name = "") const {
        return name.empty() ? path.string() : (path / name).string();
    }
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace testutil
