#include "vlm/adaptor.hpp"

#include <doctest.h>

#include <stdexcept>

#include <sstream>

using namespace vlm;

namespace {

int count_kind(const VisualLayout &l, VisualToken::Kind k) {
    int c = 0;
    for (const auto &t : l.sequence)
        if (t.kind == k)
            ++c;
    return c;
}

// Independent count: 210 + 1 + m*14*(n*14 + 1).
int expected_tokens(int m, int n) { return 210 + 1 + m * 14 * (n * 14 + 1); }

} // namespace

TEST_CASE("layout token counts match the closed form") {
    CHECK(layout_visual_tokens(1, 1).sequence.size() == 421);
    CHECK(layout_visual_tokens(2, 3).sequence.size() == 1415);
    CHECK(layout_visual_tokens(1, 2).sequence.size() == 617);
    for (int m = 1; m <= 3; ++m)
        for (int n = 1; n <= 3; ++n)
            CHECK(layout_visual_tokens(m, n).sequence.size() ==
                  static_cast<std::size_t>(expected_tokens(m, n)));
}

TEST_CASE("layout structure for (1,1)") {
    VisualLayout l = layout_visual_tokens(1, 1);
    REQUIRE(l.sequence.size() == 421);
    // Thumbnail rows: 14 patches then a newline, 14 times.
    for (int r = 0; r < 14; ++r) {
        for (int c = 0; c < 14; ++c) {
            const VisualToken &t = l.sequence[static_cast<std::size_t>(r * 15 + c)];
            CHECK(t == VisualToken::patch(0, r, c));
        }
        CHECK(l.sequence[static_cast<std::size_t>(r * 15 + 14)].kind ==
              VisualToken::Kind::TileNewline);
    }
    CHECK(l.sequence[210].kind == VisualToken::Kind::ViewSeparator);
    // Local rows reference tile 1.
    CHECK(l.sequence[211] == VisualToken::patch(1, 0, 0));
    CHECK(l.sequence.back().kind == VisualToken::Kind::TileNewline);
}

TEST_CASE("local rows scan across tiles for (1,2)") {
    VisualLayout l = layout_visual_tokens(1, 2);
    // First local row: 14 columns of tile 1 then 14 of tile 2 then a newline.
    std::size_t base = 211;
    for (int c = 0; c < 14; ++c)
        CHECK(l.sequence[base + static_cast<std::size_t>(c)] ==
              VisualToken::patch(1, 0, c));
    for (int c = 0; c < 14; ++c)
        CHECK(l.sequence[base + 14 + static_cast<std::size_t>(c)] ==
              VisualToken::patch(2, 0, c));
    CHECK(l.sequence[base + 28].kind == VisualToken::Kind::TileNewline);
}

TEST_CASE("more than two images disables tiling") {
    VisualLayout l = layout_visual_tokens(2, 3, 3);
    CHECK(l.sequence.size() == 210);
    CHECK(count_kind(l, VisualToken::Kind::ViewSeparator) == 0);
    for (const auto &t : l.sequence)
        if (t.kind == VisualToken::Kind::Patch)
            CHECK(t.tile == 0);

    CHECK(layout_visual_tokens(2, 3, 2).sequence.size() == 1415);
}

TEST_CASE("layout token accounting") {
    VisualLayout l = layout_visual_tokens(2, 3);
    CHECK(count_kind(l, VisualToken::Kind::Patch) == 14 * 14 + 6 * 14 * 14);
    CHECK(count_kind(l, VisualToken::Kind::TileNewline) == 14 + 2 * 14);
    CHECK(count_kind(l, VisualToken::Kind::ViewSeparator) == 1);
}

TEST_CASE("pixel shuffle even grid") {
    TileFeatures f(4, 4, 3);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            for (int ch = 0; ch < 3; ++ch)
                f.values.at(r, c, ch) = 100.0 * r + 10.0 * c + ch;
    TileFeatures out = pixel_shuffle(f);
    CHECK(out.grid_h == 2);
    CHECK(out.grid_w == 2);
    CHECK(out.channels == 12);
    // Cell (0,0) gathers (0,0),(0,1),(1,0),(1,1) in row-major slot order.
    CHECK(out.values.at(0, 0, 0) == 0.0);
    CHECK(out.values.at(0, 0, 2) == 2.0);
    CHECK(out.values.at(0, 0, 3) == 10.0);
    CHECK(out.values.at(0, 0, 6) == 100.0);
    CHECK(out.values.at(0, 0, 9) == 110.0);
    CHECK(out.values.at(1, 1, 0) == 220.0);
}

TEST_CASE("pixel shuffle zero-pads odd grids") {
    TileFeatures f(3, 3, 2);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int ch = 0; ch < 2; ++ch)
                f.values.at(r, c, ch) = 1.0 + r + c + ch;
    TileFeatures out = pixel_shuffle(f);
    CHECK(out.grid_h == 2);
    CHECK(out.grid_w == 2);
    CHECK(out.channels == 8);
    // Bottom-right output cell has only the (2,2) input; other slots are 0.
    CHECK(out.values.at(1, 1, 0) == 5.0);
    CHECK(out.values.at(1, 1, 1) == 6.0);
    for (int slot = 2; slot < 8; ++slot)
        CHECK(out.values.at(1, 1, slot) == 0.0);
}

TEST_CASE("pixel shuffle production shape") {
    TileFeatures f(27, 27, 1152);
    TileFeatures out = pixel_shuffle(f);
    CHECK(out.grid_h == 14);
    CHECK(out.grid_w == 14);
    CHECK(out.channels == 4608);
}

TEST_CASE("pixel shuffle conserves mass") {
    Rng rng(11);
    TileFeatures f(5, 7, 3);
    double sum_in = 0.0;
    for (auto &v : f.values.data) {
        v = rng.uniform(-1.0, 1.0);
        sum_in += v;
    }
    TileFeatures out = pixel_shuffle(f);
    double sum_out = 0.0;
    for (double v : out.values.data)
        sum_out += v;
    CHECK(sum_out == doctest::Approx(sum_in).epsilon(1e-12));
    CHECK(out.values.numel() == 3 * 4 * 12);
}

TEST_CASE("project maps token rows through the MLP") {
    // Identity-ish setup: w1 = I, b1 pushes values positive so GELU ~ x,
    // w2 = 2I — checks the row-wise plumbing rather than GELU itself.
    Tensor tokens({2, 2}, {5.0, 6.0, 7.0, 8.0});
    Tensor w1 = Tensor::identity(2);
    Tensor b1 = Tensor::zeros({2});
    Tensor w2({2, 2}, {2, 0, 0, 2});
    Tensor b2 = Tensor::zeros({2});
    Tensor out = project(tokens, w1, b1, w2, b2);
    REQUIRE(out.shape == std::vector<int>{2, 2});
    // gelu(x) ~= x for x >= 5 to well under 1e-6.
    CHECK(out.at(0, 0) == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(out.at(1, 1) == doctest::Approx(16.0).epsilon(1e-6));
}

TEST_CASE("dump_layout format") {
    VisualLayout l = layout_visual_tokens(1, 1, 1, 1);
    std::string dumped = dump_layout(l);
    std::istringstream in(dumped);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        lines.push_back(line);
    REQUIRE(lines.size() == l.sequence.size());
    CHECK(lines[0] == "P 0 0 0");
    CHECK(lines[1] == "NL");
    CHECK(lines[2] == "SEP");
    CHECK(lines[3] == "P 1 0 0");
    CHECK(lines[4] == "NL");
}
