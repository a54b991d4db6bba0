#include "vlm/tiling.hpp"

#include "vlm/tensor.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <stdexcept>

using namespace vlm;

TEST_CASE("candidate set cardinality") {
    CHECK(candidate_resolutions(384, 1).size() == 1);
    CHECK(candidate_resolutions(384, 9).size() == 23);
    CHECK(candidate_resolutions(384, 18).size() == 58);
}

TEST_CASE("select_resolution hand cases") {
    auto cands = candidate_resolutions();

    TilingPlan exact = select_resolution(384, 384, cands);
    CHECK(exact.candidate.rows == 1);
    CHECK(exact.candidate.cols == 1);
    CHECK(exact.padding_area == 0);

    TilingPlan wide = select_resolution(500, 1000, cands);
    CHECK(wide.candidate.rows == 1);
    CHECK(wide.candidate.cols == 2);
    CHECK(wide.scale == doctest::Approx(0.768).epsilon(1e-12));
    CHECK(wide.resized_h == 384);
    CHECK(wide.resized_w == 768);
    CHECK(wide.padding_area == 0);

    TilingPlan tall = select_resolution(1536, 384, cands);
    CHECK(tall.candidate.rows == 4);
    CHECK(tall.candidate.cols == 1);
    CHECK(tall.padding_area == 0);
}

TEST_CASE("select_resolution matches exhaustive search") {
    auto cands = candidate_resolutions();
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        int h = rng.uniform_int(64, 4096);
        int w = rng.uniform_int(64, 4096);
        TilingPlan got = select_resolution(h, w, cands);
        auto want = oracles::brute_force_plan(h, w, 384, 9);
        CHECK(got.candidate.rows == want.m);
        CHECK(got.candidate.cols == want.n);
        CHECK(got.resized_h == want.resized_h);
        CHECK(got.resized_w == want.resized_w);
        CHECK(got.padding_area == want.padding);
        CHECK(got.padding_area >= 0);
    }
}

TEST_CASE("zero padding when aspect matches a candidate") {
    auto cands = candidate_resolutions();
    for (const auto &c : cands) {
        TilingPlan plan = select_resolution(c.rows * 100, c.cols * 100, cands);
        CHECK(plan.padding_area == 0);
    }
}

TEST_CASE("slice_tiles geometry") {
    // degenerate 1x1 grid: thumbnail == local tile == canvas
    Image canvas(384, 384);
    for (std::size_t i = 0; i < canvas.pixels.size(); ++i)
        canvas.pixels[i] = static_cast<std::uint8_t>(i % 256);
    TilingPlan plan{{1, 1, 384}, 1.0, 384, 384, 0};
    auto tiles = slice_tiles(canvas, plan);
    REQUIRE(tiles.size() == 2);
    CHECK(tiles[0].pixels == canvas.pixels);
    CHECK(tiles[1].pixels == canvas.pixels);

    TilingPlan p23{{2, 3, 384}, 1.0, 768, 1152, 0};
    Image big(1152, 768);
    CHECK(slice_tiles(big, p23).size() == 7);

    CHECK_THROWS_AS(slice_tiles(big, plan), std::invalid_argument);
}

TEST_CASE("slice_tiles crops halves by color") {
    Image canvas(768, 384);
    for (int y = 0; y < 384; ++y)
        for (int x = 0; x < 768; ++x) {
            canvas.sample(x, y, 0) = x < 384 ? 255 : 0;
            canvas.sample(x, y, 2) = x < 384 ? 0 : 255;
        }
    TilingPlan plan{{1, 2, 384}, 1.0, 384, 768, 0};
    auto tiles = slice_tiles(canvas, plan);
    REQUIRE(tiles.size() == 3);
    CHECK(tiles[1].sample(0, 0, 0) == 255);
    CHECK(tiles[1].sample(383, 383, 0) == 255);
    CHECK(tiles[2].sample(0, 0, 2) == 255);
    CHECK(tiles[2].sample(383, 383, 2) == 255);
}

TEST_CASE("local tiles reconstruct the canvas") {
    Rng rng(5);
    Image canvas(768, 768);
    for (auto &p : canvas.pixels)
        p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    TilingPlan plan{{2, 2, 384}, 1.0, 768, 768, 0};
    auto tiles = slice_tiles(canvas, plan);
    REQUIRE(tiles.size() == 5);
    for (int ty = 0; ty < 2; ++ty)
        for (int tx = 0; tx < 2; ++tx) {
            const Image &tile = tiles[static_cast<std::size_t>(1 + ty * 2 + tx)];
            for (int y = 0; y < 384; y += 17)
                for (int x = 0; x < 384; x += 17)
                    for (int c = 0; c < 3; ++c)
                        CHECK(tile.sample(x, y, c) ==
                              canvas.sample(tx * 384 + x, ty * 384 + y, c));
        }
}
