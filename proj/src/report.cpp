#include "volmetrics/report.hpp"

#include "volmetrics/nifti.hpp"
#include "volmetrics/png.hpp"
#include "volmetrics/regions.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace volmetrics {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string opt_fmt6(const std::optional<double>& v) {
    return v ? fmt6(*v) : std::string();
}

int resolve_workers(int requested) {
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("VOLMETRICS_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return 1;
}

// Run fn(i) for i in [0,n) on `workers` threads; any exception is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        threads.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : threads)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

MetricOptions options_from_json(const json& j) {
    MetricOptions opt;
    opt.connectivity = j.value("connectivity", 26);
    opt.tau = j.value("tau", 0.5);
    opt.use_iou = j.value("use_iou", false);
    opt.threshold = j.value("threshold", 0.5);
    opt.entropy_base = j.value("entropy_base", std::string("2")) == "e" ? LogBase::Natural
                                                                        : LogBase::Two;
    opt.hd95_max_of_directed = j.value("hd95_max_of_directed", false);
    opt.min_region_voxels = j.value("min_region_voxels", std::int64_t{0});
    return opt;
}

json options_to_json(const MetricOptions& opt) {
    return json{{"connectivity", opt.connectivity},
                {"tau", opt.tau},
                {"use_iou", opt.use_iou},
                {"threshold", opt.threshold},
                {"entropy_base", opt.entropy_base == LogBase::Two ? "2" : "e"},
                {"hd95_convention", opt.hd95_max_of_directed ? "max_of_directed" : "combined"},
                {"min_region_voxels", opt.min_region_voxels}};
}

struct LoadedCase {
    ProbabilityMap prob;
    std::optional<BinaryMask> gt;
};

LoadedCase load_case(const CaseSpec& spec, const CohortConfig& cfg) {
    LoadedCase lc;
    lc.prob = read_nifti(spec.prob_path);
    lc.prob.unit = Unit::Probability;
    validate(lc.prob);
    if (cfg.resample)
        lc.prob = resample_trilinear(lc.prob, cfg.target_spacing);

    if (!spec.gt_path.empty()) {
        BinaryMask gt = read_nifti(spec.gt_path);
        gt.unit = Unit::Label;
        validate(gt);
        if (cfg.resample)
            gt = resample_nearest(gt, cfg.target_spacing);
        if (!gt.same_grid(lc.prob))
            throw std::runtime_error("GT and probability map are on different grids");
        lc.gt = std::move(gt);
    }
    return lc;
}

json stats_json(const std::vector<double>& values) {
    if (values.empty())
        return json(nullptr);
    SummaryStats s = cohort_stats(values);
    return json{{"mean", s.mean}, {"std", s.stddev}, {"median", s.median},
                {"q1", s.q1},     {"q3", s.q3},      {"n", values.size()}};
}

void write_csv(const std::string& path, const std::vector<ImageMetrics>& rows,
               bool ood_scores) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << "case_id,status,error,dsc,hd95_mm,hd95_directed_mm,tp,fp,fn,"
           "mean_entropy,no_detection,msp,ood_score,predicted_volume_cc\n";
    for (const auto& r : rows) {
        out << r.case_id << ',' << (r.ok ? "ok" : "failed") << ',';
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << err << ',';
        if (r.ok) {
            out << opt_fmt6(r.dsc) << ',' << opt_fmt6(r.hd95_mm) << ','
                << opt_fmt6(r.hd95_directed_mm) << ',';
            if (ood_scores)
                out << ",,,"; // detection counts need ground truth
            else
                out << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ',';
            out << fmt6(r.mean_entropy) << ',' << (r.no_detection ? 1 : 0) << ','
                << fmt6(r.msp) << ',';
            out << (ood_scores ? fmt6(1.0 - r.msp) : std::string()) << ','
                << fmt6(r.predicted_volume_cc);
        } else {
            out << ",,,,,,,,,,"; // 11 empty metric fields
        }
        out << '\n';
    }
}

} // namespace

CohortConfig load_cohort_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(in);

    CohortConfig cfg;
    cfg.name = j.value("name", std::string("cohort"));
    const std::string role = j.value("role", std::string("ID"));
    if (role == "ID")
        cfg.role = CohortRole::ID;
    else if (role == "OOD")
        cfg.role = CohortRole::OOD;
    else
        throw std::runtime_error("config role must be \"ID\" or \"OOD\"");

    if (j.contains("options"))
        cfg.options = options_from_json(j.at("options"));
    cfg.output_dir = j.value("output_dir", std::string("."));
    cfg.workers = j.value("workers", 0);
    cfg.slice_profile = j.value("slice_profile", false);

    if (j.contains("window")) {
        cfg.apply_window = true;
        cfg.window.lo = j.at("window").at(0).get<double>();
        cfg.window.hi = j.at("window").at(1).get<double>();
    }
    if (j.contains("target_spacing")) {
        cfg.resample = true;
        auto t = j.at("target_spacing");
        cfg.target_spacing = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
    }

    // Relative case paths resolve against the config file's directory.
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string p) {
        if (p.empty() || fs::path(p).is_absolute())
            return p;
        return (base / p).string();
    };
    for (const auto& c : j.at("cases")) {
        CaseSpec spec;
        spec.id = c.at("id").get<std::string>();
        spec.image_path = resolve(c.value("image", std::string()));
        spec.gt_path = resolve(c.value("gt", std::string()));
        spec.prob_path = resolve(c.at("prob").get<std::string>());
        if (cfg.role == CohortRole::ID && spec.gt_path.empty())
            throw std::runtime_error("ID case '" + spec.id + "' is missing a gt path");
        cfg.cases.push_back(std::move(spec));
    }
    if (cfg.cases.empty())
        throw std::runtime_error("config contains no cases");
    return cfg;
}

ImageMetrics evaluate_case(const ProbabilityMap& prob, const BinaryMask* gt,
                           const MetricOptions& opt) {
    ImageMetrics m;
    if (gt && !gt->same_grid(prob))
        throw std::invalid_argument("evaluate_case: grids differ");

    const BinaryMask mask = threshold_map(prob, opt.threshold);
    LabeledRegions pred_lr = connected_components(mask, opt.connectivity);
    if (opt.min_region_voxels > 1)
        pred_lr = filter_min_size(pred_lr, opt.min_region_voxels);

    m.predicted_volume_cc = volume_occupancy(pred_lr, prob.spacing);
    m.no_detection = pred_lr.regions.empty();

    const Volume entropy = entropy_map(prob, opt.entropy_base);
    const BinaryMask pred_mask = opt.min_region_voxels > 1 ? regions_to_mask(pred_lr) : mask;
    if (auto e = mean_entropy_over_tumor(entropy, pred_mask))
        m.mean_entropy = *e;
    if (auto s = msp_score(prob, pred_mask))
        m.msp = *s;
    m.slice_entropy = slice_entropy_profile(entropy, pred_mask);

    if (gt) {
        const LabeledRegions gt_lr = connected_components(*gt, opt.connectivity);
        const MatchTable match = match_regions(gt_lr, pred_lr, opt.tau, opt.use_iou);
        m.counts = match.counts;
        m.dsc = clustered_dice(gt_lr, pred_lr, match);
        if (auto h = hd95(gt_lr, pred_lr, match)) {
            m.hd95_mm = h->combined;
            m.hd95_directed_mm = h->max_of_directed;
        }
    }

    m.ok = true;
    return m;
}

static CohortResult run_cohort(const CohortConfig& cfg, const std::vector<double>* id_msp) {
    const bool ood = cfg.role == CohortRole::OOD;
    const int workers = resolve_workers(cfg.workers);
    fs::create_directories(cfg.output_dir);

    CohortResult result;
    result.per_image.resize(cfg.cases.size());

    parallel_for(cfg.cases.size(), workers, [&](std::size_t i) {
        ImageMetrics& m = result.per_image[i];
        m.case_id = cfg.cases[i].id;
        try {
            LoadedCase lc = load_case(cfg.cases[i], cfg);
            if (!ood && !lc.gt)
                throw std::runtime_error("ID case without ground truth");
            m = evaluate_case(lc.prob, lc.gt ? &*lc.gt : nullptr, cfg.options);
            m.case_id = cfg.cases[i].id;
        } catch (const std::exception& e) {
            m.ok = false;
            m.error = e.what();
        }
    });

    for (const auto& m : result.per_image)
        if (!m.ok)
            ++result.failed_cases;

    result.csv_path = (fs::path(cfg.output_dir) / "per_image.csv").string();
    write_csv(result.csv_path, result.per_image, ood);

    if (cfg.slice_profile) {
        std::ofstream prof((fs::path(cfg.output_dir) / "slice_entropy.csv").string());
        prof << "case_id,z,mean_entropy\n";
        for (const auto& m : result.per_image)
            if (m.ok)
                for (std::size_t z = 0; z < m.slice_entropy.size(); ++z)
                    prof << m.case_id << ',' << z << ',' << opt_fmt6(m.slice_entropy[z]) << '\n';
    }

    // Cohort aggregation; flagged/undefined metrics are excluded or carried
    // per their contracts and counted explicitly.
    std::vector<double> dscs, hd95s, entropies, msps, occupancies;
    std::vector<DetectionCounts> counts;
    int no_detection = 0, undef_dsc = 0, undef_hd95 = 0, n_ok = 0;
    for (const auto& m : result.per_image) {
        if (!m.ok)
            continue;
        ++n_ok;
        if (m.no_detection)
            ++no_detection;
        entropies.push_back(m.mean_entropy);
        msps.push_back(m.msp);
        occupancies.push_back(m.predicted_volume_cc);
        if (!ood) {
            m.dsc ? dscs.push_back(*m.dsc) : void(++undef_dsc);
            m.hd95_mm ? hd95s.push_back(*m.hd95_mm) : void(++undef_hd95);
            counts.push_back(m.counts);
        }
    }

    json summary;
    summary["schema_version"] = 1;
    summary["cohort"] = cfg.name;
    summary["role"] = ood ? "OOD" : "ID";
    summary["n_cases"] = cfg.cases.size();
    summary["n_ok"] = n_ok;
    summary["n_failed"] = result.failed_cases;
    summary["options"] = options_to_json(cfg.options);
    summary["entropy"] = stats_json(entropies);
    summary["msp"] = stats_json(msps);
    summary["flags"] = json{{"no_detection", no_detection},
                            {"undefined_dsc", undef_dsc},
                            {"undefined_hd95", undef_hd95},
                            {"failed_cases", result.failed_cases}};

    if (!ood) {
        summary["dsc"] = stats_json(dscs);
        summary["hd95_mm"] = stats_json(hd95s);
        if (!counts.empty()) {
            const F1Result f1 = cohort_f1(counts);
            std::int64_t tp = 0, fp = 0, fn = 0;
            for (const auto& c : counts) {
                tp += c.tp;
                fp += c.fp;
                fn += c.fn;
            }
            summary["detection"] = json{{"tp", tp},           {"fp", fp},
                                        {"fn", fn},           {"precision", f1.precision},
                                        {"recall", f1.recall}, {"f1", f1.f1}};
        }
    } else {
        summary["volume_occupancy_cc"] = stats_json(occupancies);
        if (!occupancies.empty()) {
            const SummaryStats vo = cohort_stats(occupancies);
            // "median [Q1, Q3]" presentation
            summary["volume_occupancy_cc"]["display"] =
                fmt6(vo.median) + " [" + fmt6(vo.q1) + ", " + fmt6(vo.q3) + "]";
        }
        if (id_msp && !id_msp->empty() && !msps.empty()) {
            std::vector<double> id_s, ood_s;
            for (double m : *id_msp)
                id_s.push_back(1.0 - m);
            for (double m : msps)
                ood_s.push_back(1.0 - m);
            const double a = auroc(id_s, ood_s);
            const double f = fpr_at_95tpr(id_s, ood_s);
            summary["auroc"] = a;
            summary["auroc_pct"] = 100.0 * a;
            summary["fpr_at_95"] = f;
            summary["fpr_at_95_pct"] = 100.0 * f;
            summary["id_scores_n"] = id_msp->size();
        }
    }

    result.summary_path = (fs::path(cfg.output_dir) / "summary.json").string();
    std::ofstream out(result.summary_path);
    if (!out)
        throw std::runtime_error("cannot write " + result.summary_path);
    out << summary.dump(2) << "\n";
    return result;
}

CohortResult run_eval_id(const CohortConfig& cfg) {
    if (cfg.role != CohortRole::ID)
        throw std::invalid_argument("run_eval_id: config role is not ID");
    return run_cohort(cfg, nullptr);
}

CohortResult run_eval_ood(const CohortConfig& cfg, const std::string& id_scores_csv) {
    if (cfg.role != CohortRole::OOD)
        throw std::invalid_argument("run_eval_ood: config role is not OOD");
    const std::vector<double> id_msp = read_msp_column(id_scores_csv);
    if (id_msp.empty())
        throw std::runtime_error("no usable ID scores in " + id_scores_csv);
    return run_cohort(cfg, &id_msp);
}

std::vector<double> read_msp_column(const std::string& per_image_csv) {
    std::ifstream in(per_image_csv);
    if (!in)
        throw std::runtime_error("cannot open ID score file: " + per_image_csv);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty ID score file: " + per_image_csv);

    auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::stringstream ss(s);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        // trailing empty field
        if (!s.empty() && s.back() == ',')
            fields.push_back("");
        return fields;
    };

    const auto header = split(line);
    int msp_col = -1, status_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "msp") msp_col = static_cast<int>(i);
        if (header[i] == "status") status_col = static_cast<int>(i);
    }
    if (msp_col < 0)
        throw std::runtime_error("ID score file has no msp column: " + per_image_csv);

    std::vector<double> msp;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto fields = split(line);
        if (status_col >= 0 &&
            (static_cast<std::size_t>(status_col) >= fields.size() || fields[status_col] != "ok"))
            continue;
        if (static_cast<std::size_t>(msp_col) >= fields.size() || fields[msp_col].empty())
            continue;
        msp.push_back(std::stod(fields[msp_col]));
    }
    return msp;
}

std::vector<int> default_overlay_slices(const BinaryMask& mask) {
    int lo = -1, hi = -1;
    double zsum = 0.0;
    std::int64_t n = 0;
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                if (mask.at(x, y, z) != 0.0f) {
                    if (lo < 0) lo = z;
                    hi = z;
                    zsum += z;
                    ++n;
                }
    if (n == 0)
        return {nz / 2};
    const int central = static_cast<int>(std::floor(zsum / double(n) + 0.5));
    std::vector<int> slices{lo, central, hi};
    std::sort(slices.begin(), slices.end());
    slices.erase(std::unique(slices.begin(), slices.end()), slices.end());
    return slices;
}

std::vector<std::string> render_overlay(const ImageVolume& image, const Volume& entropy,
                                        const BinaryMask& mask, std::vector<int> slices,
                                        const std::string& out_dir,
                                        const std::string& prefix, int zoom) {
    if (!image.same_grid(entropy) || !image.same_grid(mask))
        throw std::invalid_argument("render_overlay: grids differ");
    zoom = std::max(1, zoom);
    fs::create_directories(out_dir);

    const int nx = image.dims[0], ny = image.dims[1], nz = image.dims[2];
    const bool empty_mask = foreground_count(mask) == 0;
    const auto profile = slice_entropy_profile(entropy, mask);

    // Grayscale windowing: HU volumes use the lung window, normalized data is direct.
    float lo = 0.0f, hi = 1.0f;
    if (image.unit == Unit::HU) {
        lo = -400.0f;
        hi = 400.0f;
    }

    std::vector<std::string> written;
    for (int z : slices) {
        if (z < 0 || z >= nz)
            throw std::invalid_argument("render_overlay: slice index out of range");

        RgbImage img(nx * zoom, ny * zoom);
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const float g = std::clamp((image.at(x, y, z) - lo) / (hi - lo), 0.0f, 1.0f);
                const float e = std::clamp(entropy.at(x, y, z), 0.0f, 1.0f);
                // "hot" heatmap, alpha proportional to entropy
                const float hr = std::clamp(3.0f * e, 0.0f, 1.0f);
                const float hg = std::clamp(3.0f * e - 1.0f, 0.0f, 1.0f);
                const float hb = std::clamp(3.0f * e - 2.0f, 0.0f, 1.0f);
                const float a = 0.7f * e;
                float r = g * (1 - a) + hr * a;
                float gg = g * (1 - a) + hg * a;
                float b = g * (1 - a) + hb * a;

                // mask contour (in-slice 4-neighborhood)
                if (mask.at(x, y, z) != 0.0f) {
                    const bool edge = x == 0 || mask.at(x - 1, y, z) == 0.0f ||
                                      x == nx - 1 || mask.at(x + 1, y, z) == 0.0f ||
                                      y == 0 || mask.at(x, y - 1, z) == 0.0f ||
                                      y == ny - 1 || mask.at(x, y + 1, z) == 0.0f;
                    if (edge) {
                        r = 0.1f;
                        gg = 1.0f;
                        b = 0.1f;
                    }
                }
                for (int sy = 0; sy < zoom; ++sy)
                    for (int sx = 0; sx < zoom; ++sx)
                        img.set(x * zoom + sx, y * zoom + sy, std::uint8_t(r * 255.0f + 0.5f),
                                std::uint8_t(gg * 255.0f + 0.5f), std::uint8_t(b * 255.0f + 0.5f));
            }

        // per-slice mean entropy top-right, '-' when the slice holds no tumor
        std::string label = "-";
        if (profile[static_cast<std::size_t>(z)]) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%.3f", *profile[static_cast<std::size_t>(z)]);
            label = buf;
        }
        draw_text(img, img.width - int(label.size()) * 6 * zoom - 2 * zoom, 2 * zoom, label,
                  255, 165, 0, zoom);
        if (empty_mask)
            draw_text(img, 2 * zoom, 2 * zoom, "NO DETECTION", 255, 64, 64, zoom);

        const std::string path =
            (fs::path(out_dir) / (prefix + "_z" + std::to_string(z) + ".png")).string();
        write_png(img, path);
        written.push_back(path);
    }
    return written;
}

} // namespace volmetrics
