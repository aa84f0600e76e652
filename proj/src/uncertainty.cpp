#include "volmetrics/uncertainty.hpp"

#include "volmetrics/surface_distance.hpp" // percentile

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace volmetrics {

double binary_entropy(double p, LogBase base) {
    if (p <= 0.0 || p >= 1.0)
        return 0.0;
    const double h = -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
    return base == LogBase::Two ? h / std::log(2.0) : h;
}

Volume entropy_map(const ProbabilityMap& p, LogBase base) {
    Volume e = make_volume(p.dims, p.spacing, Unit::Normalized);
    e.origin = p.origin;
    for (std::size_t i = 0; i < p.data.size(); ++i)
        e.data[i] = static_cast<float>(binary_entropy(p.data[i], base));
    return e;
}

std::optional<double> mean_entropy_over_tumor(const Volume& entropy, const BinaryMask& mask) {
    if (!entropy.same_grid(mask))
        throw std::invalid_argument("mean_entropy_over_tumor: grids differ");
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i] != 0.0f) {
            sum += entropy.data[i];
            ++n;
        }
    if (n == 0)
        return std::nullopt;
    return sum / n;
}

std::vector<std::optional<double>> slice_entropy_profile(const Volume& entropy,
                                                         const BinaryMask& mask) {
    if (!entropy.same_grid(mask))
        throw std::invalid_argument("slice_entropy_profile: grids differ");
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    std::vector<std::optional<double>> profile(nz);
    for (int z = 0; z < nz; ++z) {
        double sum = 0.0;
        std::int64_t n = 0;
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (mask.at(x, y, z) != 0.0f) {
                    sum += entropy.at(x, y, z);
                    ++n;
                }
        if (n > 0)
            profile[z] = sum / n;
    }
    return profile;
}

std::optional<double> msp_score(const ProbabilityMap& p, const BinaryMask& mask) {
    if (!p.same_grid(mask))
        throw std::invalid_argument("msp_score: grids differ");
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < p.data.size(); ++i)
        if (mask.data[i] != 0.0f) {
            sum += std::max(double(p.data[i]), 1.0 - double(p.data[i]));
            ++n;
        }
    if (n == 0)
        return std::nullopt;
    return sum / n;
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
    if (id_scores.empty() || ood_scores.empty())
        throw std::invalid_argument("auroc: empty score list");

    // Mann-Whitney U via midranks over the pooled sample.
    struct Tagged {
        double s;
        bool ood;
    };
    std::vector<Tagged> all;
    all.reserve(id_scores.size() + ood_scores.size());
    for (double s : id_scores) all.push_back({s, false});
    for (double s : ood_scores) all.push_back({s, true});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.s < b.s; });

    double rank_sum_ood = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].s == all[i].s) ++j;
        const double midrank = (double(i + 1) + double(j)) / 2.0; // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (all[k].ood) rank_sum_ood += midrank;
        i = j;
    }
    const double n_ood = double(ood_scores.size());
    const double n_id = double(id_scores.size());
    const double u = rank_sum_ood - n_ood * (n_ood + 1.0) / 2.0;
    return u / (n_ood * n_id);
}

double fpr_at_95tpr(std::span<const double> id_scores, std::span<const double> ood_scores) {
    if (id_scores.empty() || ood_scores.empty())
        throw std::invalid_argument("fpr_at_95tpr: empty score list");

    // Capture requirement is strict: flag floor(0.95 n) + 1 OOD scores, so a
    // threshold sitting exactly at the 95% boundary is not enough. The
    // threshold is then the k-th largest OOD score.
    std::vector<double> ood(ood_scores.begin(), ood_scores.end());
    std::sort(ood.begin(), ood.end(), std::greater<>());
    const std::size_t n = ood.size();
    std::size_t k = static_cast<std::size_t>(std::floor(0.95 * n)) + 1;
    k = std::min(k, n);
    const double t = ood[k - 1];

    std::int64_t fp = 0;
    for (double s : id_scores)
        if (s >= t) ++fp;
    return double(fp) / double(id_scores.size());
}

SummaryStats cohort_stats(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("cohort_stats: empty list");
    SummaryStats s;
    const std::size_t n = values.size();
    for (double v : values) {
        if (!std::isfinite(v))
            throw std::invalid_argument("cohort_stats: non-finite value");
        s.mean += v;
    }
    s.mean /= double(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / double(n - 1));
    }
    std::vector<double> sorted(values.begin(), values.end());
    s.median = percentile(sorted, 50.0);
    s.q1 = percentile(sorted, 25.0);
    s.q3 = percentile(std::move(sorted), 75.0);
    return s;
}

} // namespace volmetrics
