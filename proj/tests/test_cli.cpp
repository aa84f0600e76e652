#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;
using testutil::TempDir;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("help and version exit 0") {
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
    CHECK(run("eval-id --help") == 0);
}

TEST_CASE("bad invocations exit 2, runtime failures exit 1") {
    CHECK(run("no-such-subcommand") == 2);
    CHECK(run("") == 2);                      // a subcommand is required
    CHECK(run("eval-id") == 2);               // missing --config
    CHECK(run("eval-id --config /nonexistent/cohort.json") == 1);
    CHECK(run("entropy-map --prob /nonexistent.nii --out /tmp/x.nii") == 1);
}

TEST_CASE("phantom -> eval-id -> eval-ood chain") {
    TempDir dir("cli_chain");

    REQUIRE(run("phantom --out " + dir.str("id") + " --cases 4") == 0);
    REQUIRE(fs::exists(dir.str("id") + "/cohort.json"));
    REQUIRE(fs::exists(dir.str("id") + "/case_0_prob.nii.gz"));
    REQUIRE(fs::exists(dir.str("id") + "/case_0_gt.nii.gz"));

    REQUIRE(run("eval-id --config " + dir.str("id") + "/cohort.json") == 0);
    const std::string id_csv = dir.str("id") + "/results/per_image.csv";
    REQUIRE(fs::exists(id_csv));
    REQUIRE(fs::exists(dir.str("id") + "/results/summary.json"));

    REQUIRE(run("phantom --out " + dir.str("ood") + " --cases 4 --ood") == 0);
    CHECK(run("eval-ood --config " + dir.str("ood") + "/cohort.json --id-scores " + id_csv) ==
          0);
    CHECK(fs::exists(dir.str("ood") + "/results/summary.json"));
    const std::string summary = testutil::slurp(dir.str("ood") + "/results/summary.json");
    CHECK(summary.find("\"auroc\"") != std::string::npos);
    CHECK(summary.find("\"fpr_at_95\"") != std::string::npos);
}

TEST_CASE("entropy-map and render on a phantom case") {
    TempDir dir("cli_entropy");
    REQUIRE(run("phantom --out " + dir.str("c") + " --cases 1") == 0);
    const std::string prob = dir.str("c") + "/case_0_prob.nii.gz";
    const std::string image = dir.str("c") + "/case_0_image.nii.gz";

    CHECK(run("entropy-map --prob " + prob + " --out " + dir.str("ent.nii.gz")) == 0);
    CHECK(fs::exists(dir.str("ent.nii.gz")));

    CHECK(run("render --image " + image + " --prob " + prob + " --out " + dir.str("png")) == 0);
    bool any_png = false;
    for (const auto& e : fs::directory_iterator(dir.str("png")))
        any_png |= e.path().extension() == ".png";
    CHECK(any_png);
}

TEST_CASE("swi-aggregate with a constant scorer") {
    TempDir dir("cli_swi");
    REQUIRE(run("phantom --out " + dir.str("c") + " --cases 1") == 0);
    const std::string image = dir.str("c") + "/case_0_image.nii.gz";
    CHECK(run("swi-aggregate --image " + image + " --out " + dir.str("agg.nii.gz") +
              " --constant 0.7 --patch 32") == 0);
    CHECK(fs::exists(dir.str("agg.nii.gz")));

    // exactly one of --patch-dir / --constant
    CHECK(run("swi-aggregate --image " + image + " --out " + dir.str("x.nii.gz")) == 1);
}
