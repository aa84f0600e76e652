#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "volmetrics/swi.hpp"

#include <cmath>
#include <random>

using namespace volmetrics;
using namespace testutil;

namespace {

// identity scorer: echoes the input patch, so aggregation of a field in [0,1]
// must reproduce the field
PatchScorer echo_scorer() {
    return [](const Volume& patch, std::array<int, 3>) { return patch.data; };
}

} // namespace

TEST_CASE("tile positions along one axis") {
    WindowSpec3D w;
    w.patch = {128, 128, 128};
    w.overlap = 0.5;

    auto cube = tile_positions({256, 128, 128}, w);
    REQUIRE(cube.size() == 3);
    CHECK(cube[0][0] == 0);
    CHECK(cube[1][0] == 64);
    CHECK(cube[2][0] == 128);

    auto exact = tile_positions({128, 128, 128}, w);
    REQUIRE(exact.size() == 1);
    CHECK(exact[0] == std::array<int, 3>{0, 0, 0});

    // tail clamp: 200 with stride 64 -> 0, 64, then clamped 72
    auto tail = tile_positions({200, 128, 128}, w);
    REQUIRE(tail.size() == 3);
    CHECK(tail[0][0] == 0);
    CHECK(tail[1][0] == 64);
    CHECK(tail[2][0] == 72);

    CHECK_THROWS(tile_positions({100, 128, 128}, w));
}

TEST_CASE("tile positions cover the full volume") {
    WindowSpec3D w;
    w.patch = {16, 16, 16};
    for (double overlap : {0.0, 0.25, 0.5}) {
        w.overlap = overlap;
        const std::array<int, 3> dims{50, 33, 16};
        auto tiles = tile_positions(dims, w);
        std::vector<char> covered(std::size_t(dims[0]) * dims[1] * dims[2], 0);
        for (const auto& t : tiles)
            for (int z = 0; z < 16; ++z)
                for (int y = 0; y < 16; ++y)
                    for (int x = 0; x < 16; ++x)
                        covered[std::size_t(t[2] + z) * dims[0] * dims[1] +
                                std::size_t(t[1] + y) * dims[0] + (t[0] + x)] = 1;
        for (char c : covered)
            CHECK(c == 1);
    }
}

TEST_CASE("gaussian weights: unit peak, symmetry, and the 1D profile") {
    WindowSpec3D w;
    w.patch = {9, 9, 9};
    w.sigma_scale = 0.125;
    auto weights = gaussian_weight(w);
    auto at = [&](int x, int y, int z) { return weights[std::size_t(z) * 81 + y * 9 + x]; };

    CHECK(at(4, 4, 4) == doctest::Approx(1.0));
    for (float v : weights)
        CHECK((v > 0.0f && v <= 1.0f));

    // reflection symmetry on every axis
    for (int z = 0; z < 9; ++z)
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 9; ++x) {
                CHECK(at(x, y, z) == at(8 - x, y, z));
                CHECK(at(x, y, z) == at(x, 8 - y, z));
                CHECK(at(x, y, z) == at(x, y, 8 - z));
            }

    // sigma = 0.125 * 9 = 1.125; one step off-center along x
    const double sigma = 0.125 * 9.0;
    CHECK(at(5, 4, 4) == doctest::Approx(std::exp(-1.0 / (2.0 * sigma * sigma))));

    // even patch: sigma = 1, centre at 3.5, w[3] = exp(-0.125)
    WindowSpec3D w1;
    w1.patch = {8, 1, 1};
    w1.sigma_scale = 0.125;
    auto line = gaussian_weight(w1);
    REQUIRE(line.size() == 8);
    CHECK(line[3] == doctest::Approx(std::exp(-0.125)));
    CHECK(line[3] == line[4]);
    CHECK(line[0] == line[7]);
}

TEST_CASE("gaussian weights are floored, never zero") {
    WindowSpec3D w;
    w.patch = {65, 1, 1};
    w.sigma_scale = 0.01; // sigma 0.65: edges underflow without the floor
    auto weights = gaussian_weight(w);
    CHECK(weights.front() == doctest::Approx(1e-8f));
    for (float v : weights)
        CHECK(v >= 1e-8f);
}

TEST_CASE("constant scorer aggregates to the constant everywhere") {
    WindowSpec3D w;
    w.patch = {32, 32, 32};
    Volume vol = make_volume({48, 40, 33}, {1, 1, 1}, Unit::Normalized, 0.2f);
    ProbabilityMap out = aggregate(vol, make_constant_scorer(0.7f), w, 2);
    CHECK(out.dims == vol.dims);
    CHECK(out.unit == Unit::Probability);
    for (float v : out.data)
        CHECK(v == doctest::Approx(0.7f).epsilon(1e-5));
}

TEST_CASE("echo scorer reproduces a smooth field despite overlapping tiles") {
    WindowSpec3D w;
    w.patch = {16, 16, 16};
    w.overlap = 0.5;
    Volume vol = make_volume({48, 32, 24}, {1, 1, 1}, Unit::Normalized);
    for (int z = 0; z < 24; ++z)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 48; ++x)
                vol.at(x, y, z) = float(x) / 47.0f * 0.8f + float(z) / 23.0f * 0.1f;
    ProbabilityMap out = aggregate(vol, echo_scorer(), w, 1);
    for (std::size_t i = 0; i < vol.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(vol.data[i]).epsilon(1e-4));
}

TEST_CASE("single-tile volume returns the scorer output exactly") {
    WindowSpec3D w;
    w.patch = {12, 10, 8};
    std::mt19937 rng(83);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Volume vol = make_volume({12, 10, 8}, {1, 1, 1}, Unit::Normalized);
    for (auto& v : vol.data)
        v = u(rng);
    ProbabilityMap out = aggregate(vol, echo_scorer(), w, 1);
    for (std::size_t i = 0; i < vol.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(vol.data[i]).epsilon(1e-6));
}

TEST_CASE("aggregation is bit-identical across worker counts") {
    WindowSpec3D w;
    w.patch = {16, 16, 16};
    w.overlap = 0.5;
    std::mt19937 rng(89);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Volume vol = make_volume({40, 36, 28}, {1, 1, 1}, Unit::Normalized);
    for (auto& v : vol.data)
        v = u(rng);
    PatchScorer scorer = [](const Volume& patch, std::array<int, 3> origin) {
        std::vector<float> out(patch.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = 0.5f * patch.data[i] + 0.01f * float((origin[0] + origin[1]) % 7);
        return out;
    };
    ProbabilityMap a = aggregate(vol, scorer, w, 1);
    ProbabilityMap b = aggregate(vol, scorer, w, 4);
    ProbabilityMap c = aggregate(vol, scorer, w, 7);
    CHECK(a.data == b.data);
    CHECK(a.data == c.data);
}

TEST_CASE("directory scorer round trip matches the in-memory scorer") {
    WindowSpec3D w;
    w.patch = {16, 16, 16};
    w.overlap = 0.5;
    Volume vol = make_volume({24, 20, 16}, {1, 1, 1}, Unit::Normalized);
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 24; ++x)
                vol.at(x, y, z) = float((x + y + z) % 10) / 10.0f;

    TempDir dir("swi");
    export_patches(vol, echo_scorer(), w, dir.str("patches"));
    ProbabilityMap from_dir = aggregate(vol, make_directory_scorer(dir.str("patches")), w, 2);
    ProbabilityMap in_mem = aggregate(vol, echo_scorer(), w, 1);
    CHECK(from_dir.data == in_mem.data);

    // missing tile file is an error
    CHECK_THROWS(aggregate(vol, make_directory_scorer(dir.str("nonexistent")), w, 1));
}

TEST_CASE("volumes smaller than the patch are padded and cropped back") {
    WindowSpec3D w;
    w.patch = {16, 16, 16};
    Volume vol = make_volume({10, 7, 16}, {1, 1, 1}, Unit::Normalized, 0.25f);
    ProbabilityMap out = aggregate(vol, make_constant_scorer(0.6f), w, 1);
    CHECK(out.dims == vol.dims);
    for (float v : out.data)
        CHECK(v == doctest::Approx(0.6f).epsilon(1e-5));

    // echo on the padded grid: interior voxels keep their values
    ProbabilityMap echo = aggregate(vol, echo_scorer(), w, 1);
    CHECK(echo.dims == vol.dims);
    for (float v : echo.data)
        CHECK(v == doctest::Approx(0.25f).epsilon(1e-4));
}

TEST_CASE("scorer contract violations are rejected") {
    WindowSpec3D w;
    w.patch = {8, 8, 8};
    Volume vol = make_volume({8, 8, 8}, {1, 1, 1}, Unit::Normalized, 0.5f);

    PatchScorer wrong_shape = [](const Volume&, std::array<int, 3>) {
        return std::vector<float>(10, 0.5f);
    };
    CHECK_THROWS(aggregate(vol, wrong_shape, w, 1));

    PatchScorer out_of_range = [](const Volume& patch, std::array<int, 3>) {
        return std::vector<float>(patch.size(), 1.5f);
    };
    CHECK_THROWS(aggregate(vol, out_of_range, w, 1));

    WindowSpec3D bad = w;
    bad.overlap = 1.0;
    CHECK_THROWS(aggregate(vol, make_constant_scorer(0.5f), bad, 1));
}
