#include "volmetrics/seg_metrics.hpp"

#include <map>
#include <stdexcept>

namespace volmetrics {

MatchTable match_regions(const LabeledRegions& gt, const LabeledRegions& pred,
                         double tau, bool use_iou) {
    if (gt.dims != pred.dims)
        throw std::invalid_argument("match_regions: grids differ");
    if (!(tau > 0.0 && tau <= 1.0))
        throw std::invalid_argument("match_regions: tau must be in (0,1]");

    MatchTable m;
    m.tau = tau;
    m.use_iou = use_iou;

    const std::size_t k_gt = gt.regions.size();
    const std::size_t k_pred = pred.regions.size();
    std::vector<std::int64_t> gt_on_pred(k_gt + 1, 0);   // |G ∩ PredMask|
    std::vector<std::int64_t> pred_on_gt(k_pred + 1, 0); // |P ∩ GtMask|
    std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> pair_counts;

    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        std::int32_t g = gt.labels[i];
        std::int32_t p = pred.labels[i];
        if (g != 0 && p != 0) {
            ++gt_on_pred[g];
            ++pred_on_gt[p];
            ++pair_counts[{g, p}];
        }
    }
    for (const auto& [key, count] : pair_counts)
        m.pairs.push_back({key.first, key.second, count});

    auto pair_iou = [&](const Region& rg, const Region& rp, std::int64_t inter) {
        return double(inter) / double(rg.voxel_count + rp.voxel_count - inter);
    };

    m.gt.resize(k_gt);
    for (std::size_t i = 0; i < k_gt; ++i) {
        const Region& r = gt.regions[i];
        GtMatch& gm = m.gt[i];
        gm.id = r.id;
        if (use_iou) {
            for (const auto& pr : m.pairs)
                if (pr.gt_id == r.id)
                    gm.covered_fraction = std::max(
                        gm.covered_fraction,
                        pair_iou(r, pred.regions[pr.pred_id - 1], pr.intersection));
        } else {
            gm.covered_fraction = double(gt_on_pred[r.id]) / double(r.voxel_count);
        }
        gm.detected = gm.covered_fraction >= tau;
        gm.detected ? ++m.counts.tp : ++m.counts.fn;
    }

    m.pred.resize(k_pred);
    for (std::size_t i = 0; i < k_pred; ++i) {
        const Region& r = pred.regions[i];
        PredMatch& pm = m.pred[i];
        pm.id = r.id;
        if (use_iou) {
            for (const auto& pr : m.pairs)
                if (pr.pred_id == r.id)
                    pm.gt_overlap_fraction = std::max(
                        pm.gt_overlap_fraction,
                        pair_iou(gt.regions[pr.gt_id - 1], r, pr.intersection));
        } else {
            pm.gt_overlap_fraction = double(pred_on_gt[r.id]) / double(r.voxel_count);
        }
        pm.false_positive = pm.gt_overlap_fraction < tau;
        if (pm.false_positive)
            ++m.counts.fp;
    }

    // A pred region is "matched" when it passes the overlap test and touches
    // a detected GT region; those regions form the B side of clustered Dice.
    for (const auto& pr : m.pairs) {
        if (m.gt[pr.gt_id - 1].detected && !m.pred[pr.pred_id - 1].false_positive)
            m.pred[pr.pred_id - 1].matched = true;
    }

    return m;
}

std::optional<double> clustered_dice(const LabeledRegions& gt, const LabeledRegions& pred,
                                     const MatchTable& m) {
    if (gt.dims != pred.dims)
        throw std::invalid_argument("clustered_dice: grids differ");
    if (m.gt.size() != gt.regions.size() || m.pred.size() != pred.regions.size())
        throw std::invalid_argument("clustered_dice: match table does not fit regions");

    if (m.counts.tp == 0)
        return std::nullopt;

    std::int64_t a = 0, b = 0, inter = 0;
    for (const auto& gm : m.gt)
        if (gm.detected) a += gt.regions[gm.id - 1].voxel_count;
    for (const auto& pm : m.pred)
        if (pm.matched) b += pred.regions[pm.id - 1].voxel_count;
    for (const auto& pr : m.pairs)
        if (m.gt[pr.gt_id - 1].detected && m.pred[pr.pred_id - 1].matched)
            inter += pr.intersection;

    if (a + b == 0)
        return 0.0;
    return 2.0 * double(inter) / double(a + b);
}

F1Result cohort_f1(std::span<const DetectionCounts> counts) {
    if (counts.empty())
        throw std::invalid_argument("cohort_f1: empty cohort");
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const auto& c : counts) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    F1Result r;
    r.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
    r.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

double volume_occupancy(const LabeledRegions& pred, const Spacing& spacing) {
    return double(pred.foreground()) * spacing.voxel_volume_mm3() / 1000.0;
}

} // namespace volmetrics
