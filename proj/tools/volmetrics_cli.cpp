#include "volmetrics/nifti.hpp"
#include "volmetrics/phantom.hpp"
#include "volmetrics/report.hpp"
#include "volmetrics/swi.hpp"
#include "volmetrics/uncertainty.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace volmetrics;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct EvalArgs {
    std::string config;
    std::string out_override;
    std::string id_scores; // eval-ood only
    int workers = -1;
    double tau = -1.0;
    double threshold = -1.0;
    int connectivity = -1;
};

void apply_overrides(CohortConfig& cfg, const EvalArgs& a) {
    if (!a.out_override.empty())
        cfg.output_dir = a.out_override;
    if (a.workers >= 0)
        cfg.workers = a.workers;
    if (a.tau > 0.0)
        cfg.options.tau = a.tau;
    if (a.threshold > 0.0)
        cfg.options.threshold = a.threshold;
    if (a.connectivity > 0)
        cfg.options.connectivity = a.connectivity;
}

int finish_cohort(const CohortResult& result) {
    const std::size_t ok = result.per_image.size() - result.failed_cases;
    for (const auto& m : result.per_image)
        if (!m.ok)
            std::cerr << "case " << m.case_id << " failed: " << m.error << "\n";
    std::cout << "wrote " << result.csv_path << " and " << result.summary_path << " ("
              << ok << "/" << result.per_image.size() << " cases ok)\n";
    return ok == 0 ? 1 : 0;
}

PhantomSpec phantom_spec_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open phantom spec: " + path);
    json j = json::parse(in);
    PhantomSpec spec;
    if (j.contains("dims")) {
        auto d = j.at("dims");
        spec.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }
    if (j.contains("spacing")) {
        auto s = j.at("spacing");
        spec.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
    }
    spec.background = j.value("background", spec.background);
    spec.jitter = j.value("jitter", spec.jitter);
    spec.seed = j.value("seed", spec.seed);
    for (const auto& s : j.value("spheres", json::array())) {
        SphereSpec sp;
        auto c = s.at("center_mm");
        sp.center_mm = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
        sp.radius_mm = s.at("radius_mm").get<double>();
        sp.plateau = s.value("plateau", sp.plateau);
        spec.spheres.push_back(sp);
    }
    if (spec.spheres.empty()) {
        SphereSpec sp;
        for (int a = 0; a < 3; ++a)
            sp.center_mm[a] = spec.dims[a] * spec.spacing[a] / 2.0;
        sp.radius_mm = 8.0;
        spec.spheres.push_back(sp);
    }
    return spec;
}

// Emits an N-case phantom cohort (image/gt/prob NIfTI per case) plus a ready
// cohort config; case k jitters the seed so cases differ deterministically.
void emit_phantom_cohort(const PhantomSpec& base, int cases, bool ood, const std::string& dir) {
    fs::create_directories(dir);
    json cfg;
    cfg["name"] = ood ? "phantom-ood" : "phantom-id";
    cfg["role"] = ood ? "OOD" : "ID";
    cfg["output_dir"] = (fs::path(dir) / "results").string();
    cfg["cases"] = json::array();

    for (int k = 0; k < cases; ++k) {
        PhantomSpec spec = base;
        spec.seed = base.seed + static_cast<std::uint64_t>(k);
        // shift sphere centers a little per case, staying in bounds
        for (std::size_t si = 0; si < spec.spheres.size(); ++si) {
            auto& s = spec.spheres[si];
            const double dz = (k % 5) * spec.spacing.sz;
            const double extent = spec.dims[2] * spec.spacing.sz;
            if (s.center_mm[2] + dz + s.radius_mm <= extent)
                s.center_mm[2] += dz;
        }
        PhantomCase pc = gen_phantom(spec);
        if (ood) {
            // OOD images carry no tumor; most predictions are empty, some leak
            // a small low-confidence blob.
            pc.gt.data.assign(pc.gt.data.size(), 0.0f);
            if (k % 3 != 0)
                pc.prob.data.assign(pc.prob.data.size(), static_cast<float>(base.background));
        }
        const std::string stem = "case_" + std::to_string(k);
        write_nifti(pc.image, (fs::path(dir) / (stem + "_image.nii.gz")).string());
        write_nifti(pc.gt, (fs::path(dir) / (stem + "_gt.nii.gz")).string());
        write_nifti(pc.prob, (fs::path(dir) / (stem + "_prob.nii.gz")).string());

        json c;
        c["id"] = stem;
        c["image"] = stem + "_image.nii.gz";
        if (!ood)
            c["gt"] = stem + "_gt.nii.gz";
        c["prob"] = stem + "_prob.nii.gz";
        cfg["cases"].push_back(c);
    }

    std::ofstream out((fs::path(dir) / "cohort.json").string());
    out << cfg.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volumetric segmentation evaluation and OOD robustness toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    EvalArgs eval_args;
    auto add_eval_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", eval_args.config, "cohort config JSON")->required();
        cmd->add_option("--out", eval_args.out_override, "override output directory");
        cmd->add_option("--workers", eval_args.workers, "worker count (0 = env/default)");
        cmd->add_option("--tau", eval_args.tau, "overlap fraction for detection");
        cmd->add_option("--threshold", eval_args.threshold, "probability threshold");
        cmd->add_option("--connectivity", eval_args.connectivity, "6, 18 or 26");
    };

    auto* cmd_id = app.add_subcommand("eval-id", "evaluate an in-distribution cohort (with GT)");
    add_eval_flags(cmd_id);
    auto* cmd_ood = app.add_subcommand("eval-ood", "evaluate an OOD cohort against ID scores");
    add_eval_flags(cmd_ood);
    cmd_ood->add_option("--id-scores", eval_args.id_scores, "per_image.csv from an eval-id run")
        ->required();

    std::string in_path, out_path, out_dir, gt_path, image_path, spec_path, patch_dir;
    std::string entropy_base = "2";
    double constant_prob = -1.0;
    int patch_n = 128, cases = 1, zoom = 2;
    double overlap = 0.5, sigma_scale = 0.125;
    bool ood_cohort = false;
    std::vector<int> slices;

    auto* cmd_ent = app.add_subcommand("entropy-map", "voxel entropy map of a probability map");
    cmd_ent->add_option("--prob", in_path, "probability NIfTI")->required();
    cmd_ent->add_option("--out", out_path, "output NIfTI")->required();
    cmd_ent->add_option("--base", entropy_base, "log base: 2 or e")
        ->check(CLI::IsMember({"2", "e"}));

    auto* cmd_swi = app.add_subcommand("swi-aggregate",
                                       "Gaussian sliding-window aggregation of patch predictions");
    cmd_swi->add_option("--image", in_path, "input NIfTI")->required();
    cmd_swi->add_option("--out", out_path, "output probability NIfTI")->required();
    cmd_swi->add_option("--patch-dir", patch_dir, "precomputed patch predictions directory");
    cmd_swi->add_option("--constant", constant_prob, "constant scorer (testing)");
    cmd_swi->add_option("--patch", patch_n, "cubic patch size")->check(CLI::PositiveNumber);
    cmd_swi->add_option("--overlap", overlap, "overlap fraction");
    cmd_swi->add_option("--sigma-scale", sigma_scale, "Gaussian sigma / patch size");
    cmd_swi->add_option("--workers", eval_args.workers, "concurrent patch scoring");

    auto* cmd_phantom = app.add_subcommand("phantom", "generate synthetic fixture cohorts");
    cmd_phantom->add_option("--spec", spec_path, "phantom spec JSON (optional)");
    cmd_phantom->add_option("--out", out_dir, "output directory")->required();
    cmd_phantom->add_option("--cases", cases, "number of cases")->check(CLI::PositiveNumber);
    cmd_phantom->add_flag("--ood", ood_cohort, "generate a tumor-free OOD cohort");

    auto* cmd_render = app.add_subcommand("render", "entropy-overlay slice renders");
    cmd_render->add_option("--image", image_path, "CT NIfTI")->required();
    cmd_render->add_option("--prob", in_path, "probability NIfTI")->required();
    cmd_render->add_option("--gt", gt_path, "mask NIfTI (default: thresholded prediction)");
    cmd_render->add_option("--out", out_dir, "output directory")->required();
    cmd_render->add_option("--slices", slices, "explicit axial slice indices");
    cmd_render->add_option("--zoom", zoom, "integer zoom factor")->check(CLI::PositiveNumber);
    cmd_render->add_option("--base", entropy_base, "log base: 2 or e")
        ->check(CLI::IsMember({"2", "e"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (cmd_id->parsed()) {
            CohortConfig cfg = load_cohort_config(eval_args.config);
            apply_overrides(cfg, eval_args);
            return finish_cohort(run_eval_id(cfg));
        }
        if (cmd_ood->parsed()) {
            CohortConfig cfg = load_cohort_config(eval_args.config);
            apply_overrides(cfg, eval_args);
            return finish_cohort(run_eval_ood(cfg, eval_args.id_scores));
        }
        if (cmd_ent->parsed()) {
            ProbabilityMap p = read_nifti(in_path);
            p.unit = Unit::Probability;
            validate(p);
            const LogBase base = entropy_base == "e" ? LogBase::Natural : LogBase::Two;
            write_nifti(entropy_map(p, base), out_path);
            std::cout << "wrote " << out_path << "\n";
            return 0;
        }
        if (cmd_swi->parsed()) {
            if (patch_dir.empty() == (constant_prob < 0.0))
                throw std::runtime_error("need exactly one of --patch-dir / --constant");
            const Volume vol = read_nifti(in_path);
            WindowSpec3D w;
            w.patch = {patch_n, patch_n, patch_n};
            w.overlap = overlap;
            w.sigma_scale = sigma_scale;
            const PatchScorer scorer = patch_dir.empty()
                                           ? make_constant_scorer(float(constant_prob))
                                           : make_directory_scorer(patch_dir);
            const ProbabilityMap out =
                aggregate(vol, scorer, w, std::max(1, eval_args.workers));
            write_nifti(out, out_path);
            std::cout << "wrote " << out_path << "\n";
            return 0;
        }
        if (cmd_phantom->parsed()) {
            PhantomSpec spec;
            if (spec_path.empty()) {
                SphereSpec sp;
                for (int a = 0; a < 3; ++a)
                    sp.center_mm[a] = spec.dims[a] * spec.spacing[a] / 2.0;
                sp.radius_mm = 8.0;
                spec.spheres.push_back(sp);
            } else {
                spec = phantom_spec_from_json(spec_path);
            }
            emit_phantom_cohort(spec, cases, ood_cohort, out_dir);
            std::cout << "wrote " << cases << " phantom case(s) to " << out_dir << "\n";
            return 0;
        }
        if (cmd_render->parsed()) {
            ImageVolume image = read_nifti(image_path);
            ProbabilityMap prob = read_nifti(in_path);
            prob.unit = Unit::Probability;
            validate(prob);
            const LogBase base = entropy_base == "e" ? LogBase::Natural : LogBase::Two;
            const Volume entropy = entropy_map(prob, base);
            BinaryMask mask;
            if (!gt_path.empty()) {
                mask = read_nifti(gt_path);
                mask.unit = Unit::Label;
                validate(mask);
            } else {
                mask = threshold_map(prob, 0.5);
            }
            if (slices.empty())
                slices = default_overlay_slices(mask);
            const auto files = render_overlay(image, entropy, mask, slices, out_dir,
                                              fs::path(image_path).stem().string(), zoom);
            for (const auto& f : files)
                std::cout << "wrote " << f << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
