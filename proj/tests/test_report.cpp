#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "volmetrics/nifti.hpp"
#include "volmetrics/phantom.hpp"
#include "volmetrics/report.hpp"
#include "volmetrics/uncertainty.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

using namespace volmetrics;
using namespace testutil;
using nlohmann::json;

namespace {

// Writes a small phantom cohort (prob + gt NIfTI per case) and a config file;
// returns the config path.
std::string write_mini_cohort(const TempDir& dir, int n_cases, const std::string& role,
                              double plateau = 0.9) {
    json cases = json::array();
    for (int i = 0; i < n_cases; ++i) {
        PhantomSpec spec;
        spec.dims = {24, 24, 24};
        spec.spheres.push_back({{12.0, 12.0, 12.0}, 6.0 + 0.5 * i, plateau});
        spec.seed = std::uint64_t(i);
        PhantomCase c = gen_phantom(spec);
        const std::string id = "case" + std::to_string(i);
        write_nifti(c.prob, dir.str(id + "_prob.nii.gz"));
        write_nifti(c.gt, dir.str(id + "_gt.nii.gz"));
        json jc{{"id", id}, {"prob", id + "_prob.nii.gz"}};
        if (role == "ID")
            jc["gt"] = id + "_gt.nii.gz";
        cases.push_back(jc);
    }
    json cfg{{"name", "mini"},
             {"role", role},
             {"cases", cases},
             {"output_dir", dir.str("out_" + role)}};
    const std::string path = dir.str("cohort_" + role + ".json");
    std::ofstream(path) << cfg.dump(2);
    return path;
}

} // namespace

TEST_CASE("config loading: roles, defaults, relative paths, validation") {
    TempDir dir("cfg");
    json cfg{{"role", "ID"},
             {"options", {{"tau", 0.3}, {"connectivity", 6}, {"entropy_base", "e"}}},
             {"window", {-1000.0, 200.0}},
             {"target_spacing", {2.0, 2.0, 2.0}},
             {"cases", json::array({json{{"id", "a"}, {"prob", "a_prob.nii"}, {"gt", "a_gt.nii"}}})}};
    const std::string path = dir.str("c.json");
    std::ofstream(path) << cfg.dump();

    CohortConfig c = load_cohort_config(path);
    CHECK(c.role == CohortRole::ID);
    CHECK(c.options.tau == doctest::Approx(0.3));
    CHECK(c.options.connectivity == 6);
    CHECK(c.options.entropy_base == LogBase::Natural);
    CHECK(c.options.threshold == doctest::Approx(0.5)); // default
    CHECK(c.apply_window);
    CHECK(c.window.lo == doctest::Approx(-1000.0));
    CHECK(c.resample);
    CHECK(c.target_spacing.sx == doctest::Approx(2.0));
    CHECK(c.cases.size() == 1);
    CHECK(c.cases[0].prob_path == dir.str("a_prob.nii"));
    CHECK(c.cases[0].gt_path == dir.str("a_gt.nii"));

    // ID case without gt is rejected
    json bad = cfg;
    bad["cases"][0].erase("gt");
    std::ofstream(dir.str("bad.json")) << bad.dump();
    CHECK_THROWS(load_cohort_config(dir.str("bad.json")));

    // but allowed for OOD
    bad["role"] = "OOD";
    std::ofstream(dir.str("ood.json")) << bad.dump();
    CHECK(load_cohort_config(dir.str("ood.json")).role == CohortRole::OOD);

    json empty = cfg;
    empty["cases"] = json::array();
    std::ofstream(dir.str("empty.json")) << empty.dump();
    CHECK_THROWS(load_cohort_config(dir.str("empty.json")));
    CHECK_THROWS(load_cohort_config(dir.str("missing.json")));
}

TEST_CASE("evaluate_case on the canonical shifted-cube fixture") {
    MaskPair pair = gen_shifted_pair(4, 2);
    ProbabilityMap prob = pair.pred;
    prob.unit = Unit::Probability;
    for (auto& v : prob.data)
        v = v != 0.0f ? 0.9f : 0.05f;

    ImageMetrics m = evaluate_case(prob, &pair.gt, MetricOptions{});
    CHECK(m.ok);
    REQUIRE(m.dsc.has_value());
    CHECK(*m.dsc == doctest::Approx(0.5));
    CHECK(m.counts.tp == 1);
    CHECK(m.counts.fp == 0);
    CHECK(m.counts.fn == 0);
    CHECK(!m.no_detection);
    CHECK(m.msp == doctest::Approx(0.9));
    CHECK(m.mean_entropy == doctest::Approx(0.4690).epsilon(1e-4));
    CHECK(m.predicted_volume_cc == doctest::Approx(64.0 / 1000.0));
    REQUIRE(m.hd95_mm.has_value());
}

TEST_CASE("evaluate_case: identical masks give dsc 1 and hd95 0") {
    MaskPair pair = gen_shifted_pair(4, 0);
    ProbabilityMap prob = pair.pred;
    prob.unit = Unit::Probability;
    ImageMetrics m = evaluate_case(prob, &pair.gt, MetricOptions{});
    CHECK(*m.dsc == doctest::Approx(1.0));
    CHECK(*m.hd95_mm == doctest::Approx(0.0));
    CHECK(*m.hd95_directed_mm == doctest::Approx(0.0));
}

TEST_CASE("evaluate_case: empty prediction is flagged, msp 1.0, metrics undefined") {
    ProbabilityMap prob = make_volume({8, 8, 8}, {1, 1, 1}, Unit::Probability, 0.1f);
    BinaryMask gt = mask_from({8, 8, 8}, {1, 1, 1},
                              [](int x, int y, int z) { return x < 2 && y < 2 && z < 2; });
    ImageMetrics m = evaluate_case(prob, &gt, MetricOptions{});
    CHECK(m.no_detection);
    CHECK(m.msp == doctest::Approx(1.0));
    CHECK(m.mean_entropy == doctest::Approx(0.0));
    CHECK(!m.dsc.has_value());
    CHECK(!m.hd95_mm.has_value());
    CHECK(m.counts.fn == 1);
    CHECK(m.predicted_volume_cc == doctest::Approx(0.0));
}

TEST_CASE("evaluate_case: min_region_voxels removes speckle before matching") {
    ProbabilityMap prob = make_volume({12, 6, 6}, {1, 1, 1}, Unit::Probability, 0.0f);
    BinaryMask gt = mask_from({12, 6, 6}, {1, 1, 1},
                              [](int x, int y, int z) { return x < 3 && y < 3 && z < 3; });
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                prob.at(x, y, z) = 0.9f;
    prob.at(10, 5, 5) = 0.9f; // 1-voxel speckle far from GT

    ImageMetrics plain = evaluate_case(prob, &gt, MetricOptions{});
    CHECK(plain.counts.fp == 1);

    MetricOptions opt;
    opt.min_region_voxels = 2;
    ImageMetrics filtered = evaluate_case(prob, &gt, opt);
    CHECK(filtered.counts.fp == 0);
    CHECK(filtered.counts.tp == 1);
    CHECK(filtered.predicted_volume_cc == doctest::Approx(27.0 / 1000.0));
}

TEST_CASE("ID cohort run: outputs, header, and summary schema") {
    TempDir dir("id_run");
    const std::string cfg_path = write_mini_cohort(dir, 3, "ID");
    CohortConfig cfg = load_cohort_config(cfg_path);
    CohortResult r = run_eval_id(cfg);

    CHECK(r.failed_cases == 0);
    REQUIRE(r.per_image.size() == 3);
    for (const auto& m : r.per_image) {
        CHECK(m.ok);
        CHECK(*m.dsc == doctest::Approx(1.0));
    }

    const std::string csv = slurp(r.csv_path);
    CHECK(csv.rfind("case_id,status,error,dsc,hd95_mm,hd95_directed_mm,tp,fp,fn,"
                     "mean_entropy,no_detection,msp,ood_score,predicted_volume_cc\n",
                     0) == 0);

    json summary = json::parse(slurp(r.summary_path));
    CHECK(summary.at("schema_version") == 1);
    CHECK(summary.at("role") == "ID");
    CHECK(summary.at("n_ok") == 3);
    CHECK(summary.at("dsc").at("mean").get<double>() == doctest::Approx(1.0));
    CHECK(summary.at("detection").at("f1").get<double>() == doctest::Approx(1.0));
    CHECK(summary.at("options").at("tau").get<double>() == doctest::Approx(0.5));
    CHECK(summary.at("flags").at("failed_cases") == 0);
}

TEST_CASE("a broken case is isolated; the rest of the cohort still runs") {
    TempDir dir("fail_iso");
    const std::string cfg_path = write_mini_cohort(dir, 2, "ID");
    json cfg = json::parse(slurp(cfg_path));
    cfg["cases"].push_back(json{{"id", "broken"},
                                {"prob", "does_not_exist.nii.gz"},
                                {"gt", "case0_gt.nii.gz"}});
    std::ofstream(cfg_path) << cfg.dump();

    CohortResult r = run_eval_id(load_cohort_config(cfg_path));
    CHECK(r.failed_cases == 1);
    CHECK(r.per_image.size() == 3);
    CHECK(!r.per_image[2].ok);
    CHECK(!r.per_image[2].error.empty());

    const std::string csv = slurp(r.csv_path);
    CHECK(csv.find("broken,failed,") != std::string::npos);
    json summary = json::parse(slurp(r.summary_path));
    CHECK(summary.at("n_ok") == 2);
    CHECK(summary.at("n_failed") == 1);
}

TEST_CASE("cohort outputs are byte-identical across runs and worker counts") {
    TempDir dir("determinism");
    const std::string cfg_path = write_mini_cohort(dir, 4, "ID");
    CohortConfig cfg = load_cohort_config(cfg_path);

    cfg.workers = 1;
    cfg.output_dir = dir.str("w1");
    CohortResult a = run_eval_id(cfg);
    cfg.output_dir = dir.str("w1b");
    CohortResult b = run_eval_id(cfg);
    cfg.workers = 4;
    cfg.output_dir = dir.str("w4");
    CohortResult c = run_eval_id(cfg);

    CHECK(slurp(a.csv_path) == slurp(b.csv_path));
    CHECK(slurp(a.csv_path) == slurp(c.csv_path));
    CHECK(slurp(a.summary_path) == slurp(b.summary_path));
    CHECK(slurp(a.summary_path) == slurp(c.summary_path));
}

TEST_CASE("read_msp_column takes only ok rows") {
    TempDir dir("msp");
    const std::string path = dir.str("per_image.csv");
    std::ofstream(path) << "case_id,status,error,msp\n"
                           "a,ok,,0.9\n"
                           "b,failed,io error,\n"
                           "c,ok,,0.75\n";
    auto msp = read_msp_column(path);
    REQUIRE(msp.size() == 2);
    CHECK(msp[0] == doctest::Approx(0.9));
    CHECK(msp[1] == doctest::Approx(0.75));

    std::ofstream(dir.str("no_msp.csv")) << "case_id,status\n";
    CHECK_THROWS(read_msp_column(dir.str("no_msp.csv")));
    CHECK_THROWS(read_msp_column(dir.str("missing.csv")));
}

TEST_CASE("OOD run scores against the ID msp column (constructed auroc 0.75)") {
    TempDir dir("ood_run");
    // ID msp column: 0.9 and 0.6 -> ood-side scores 0.1 and 0.4
    const std::string id_csv = dir.str("id_per_image.csv");
    std::ofstream(id_csv) << "case_id,status,error,msp\n"
                             "i0,ok,,0.9\n"
                             "i1,ok,,0.6\n";

    // Two OOD cases with uniform probabilities -> msp 0.7 and 0.5
    json cases = json::array();
    for (int i = 0; i < 2; ++i) {
        ProbabilityMap prob = make_volume({8, 8, 8}, {1, 1, 1}, Unit::Probability,
                                          i == 0 ? 0.7f : 0.5f);
        const std::string id = "o" + std::to_string(i);
        write_nifti(prob, dir.str(id + ".nii.gz"));
        cases.push_back(json{{"id", id}, {"prob", id + ".nii.gz"}});
    }
    json cfg{{"name", "oodmini"}, {"role", "OOD"}, {"cases", cases},
             {"output_dir", dir.str("out")}};
    std::ofstream(dir.str("ood.json")) << cfg.dump();

    CohortResult r = run_eval_ood(load_cohort_config(dir.str("ood.json")), id_csv);
    CHECK(r.failed_cases == 0);

    json summary = json::parse(slurp(r.summary_path));
    // id scores {0.1, 0.4}, ood scores {0.3, 0.5} -> AUROC 0.75
    CHECK(summary.at("auroc").get<double>() == doctest::Approx(0.75));
    CHECK(summary.at("auroc_pct").get<double>() == doctest::Approx(75.0));
    CHECK(summary.contains("fpr_at_95"));
    CHECK(summary.at("role") == "OOD");
    CHECK(summary.at("volume_occupancy_cc").contains("display"));
    CHECK(!summary.contains("dsc"));

    // OOD csv carries ood_score = 1 - msp and no detection counts
    const std::string csv = slurp(r.csv_path);
    CHECK(csv.find("o0,ok,") != std::string::npos);
    CHECK(csv.find("0.3,") != std::string::npos); // ood_score for msp 0.7

    CHECK_THROWS(run_eval_ood(load_cohort_config(dir.str("ood.json")), dir.str("nope.csv")));
}

TEST_CASE("volume occupancy display string is median [Q1, Q3]") {
    TempDir dir("vo");
    json cases = json::array();
    // occupancies 1, 2, 3 cc via 10x10x10..30 slabs of prob 0.9 at 1mm
    for (int i = 0; i < 3; ++i) {
        ProbabilityMap prob = make_volume({10, 10, 30}, {1, 1, 1}, Unit::Probability, 0.0f);
        for (int z = 0; z < 10 * (i + 1); ++z)
            for (int y = 0; y < 10; ++y)
                for (int x = 0; x < 10; ++x)
                    prob.at(x, y, z) = 0.9f;
        const std::string id = "v" + std::to_string(i);
        write_nifti(prob, dir.str(id + ".nii.gz"));
        cases.push_back(json{{"id", id}, {"prob", id + ".nii.gz"}});
    }
    json cfg{{"name", "vo"}, {"role", "OOD"}, {"cases", cases}, {"output_dir", dir.str("out")}};
    std::ofstream(dir.str("c.json")) << cfg.dump();
    const std::string id_csv = dir.str("id.csv");
    std::ofstream(id_csv) << "case_id,status,error,msp\nx,ok,,0.99\n";

    CohortResult r = run_eval_ood(load_cohort_config(dir.str("c.json")), id_csv);
    json summary = json::parse(slurp(r.summary_path));
    CHECK(summary.at("volume_occupancy_cc").at("display").get<std::string>() == "2 [1.5, 2.5]");
    CHECK(summary.at("volume_occupancy_cc").at("median").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("default overlay slices: extremes plus z-centroid; middle slice when empty") {
    BinaryMask m = make_volume({6, 6, 11}, {1, 1, 1}, Unit::Label, 0.0f);
    m.at(3, 3, 2) = 1.0f;
    m.at(3, 3, 8) = 1.0f;
    m.at(3, 3, 5) = 1.0f;
    CHECK(default_overlay_slices(m) == std::vector<int>{2, 5, 8});

    BinaryMask single = make_volume({6, 6, 11}, {1, 1, 1}, Unit::Label, 0.0f);
    single.at(0, 0, 4) = 1.0f;
    CHECK(default_overlay_slices(single) == std::vector<int>{4});

    BinaryMask empty = make_volume({6, 6, 11}, {1, 1, 1}, Unit::Label, 0.0f);
    CHECK(default_overlay_slices(empty) == std::vector<int>{5});
}

TEST_CASE("render_overlay writes one PNG per slice at zoomed dimensions") {
    TempDir dir("render");
    PhantomSpec spec;
    spec.dims = {24, 20, 16};
    spec.spheres.push_back({{12.0, 10.0, 8.0}, 5.0, 0.9});
    PhantomCase c = gen_phantom(spec);
    Volume entropy = entropy_map(c.prob);

    auto paths = render_overlay(c.image, entropy, c.gt, {3, 8}, dir.str(), "case0", 2);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].find("case0_z3.png") != std::string::npos);
    CHECK(paths[1].find("case0_z8.png") != std::string::npos);
    for (const auto& p : paths) {
        const std::string png = slurp(p);
        REQUIRE(png.size() > 24);
        CHECK(png.compare(1, 3, "PNG") == 0);
        // IHDR width/height big-endian at offsets 16 and 20
        auto be32 = [&](std::size_t off) {
            return (std::uint32_t(std::uint8_t(png[off])) << 24) |
                   (std::uint32_t(std::uint8_t(png[off + 1])) << 16) |
                   (std::uint32_t(std::uint8_t(png[off + 2])) << 8) |
                   std::uint32_t(std::uint8_t(png[off + 3]));
        };
        CHECK(be32(16) == 48); // 24 * zoom
        CHECK(be32(20) == 40); // 20 * zoom
    }

    // empty mask render still succeeds (NO DETECTION banner)
    BinaryMask empty = make_volume(c.gt.dims, c.gt.spacing, Unit::Label, 0.0f);
    auto nd = render_overlay(c.image, entropy, empty, default_overlay_slices(empty), dir.str(),
                             "nodet", 1);
    REQUIRE(nd.size() == 1);
    CHECK(slurp(nd[0]).size() > 0);

    CHECK_THROWS(render_overlay(c.image, entropy, c.gt, {99}, dir.str(), "bad", 1));
}
