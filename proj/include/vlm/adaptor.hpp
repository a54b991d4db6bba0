#pragma once

#include "vlm/tensor.hpp"

#include <string>
#include <vector>

namespace vlm {

// One tile's feature grid, [grid_h, grid_w, channels].
struct TileFeatures {
    int grid_h = 0;
    int grid_w = 0;
    int channels = 0;
    Tensor values;

    TileFeatures() = default;
    TileFeatures(int gh, int gw, int c)
        : grid_h(gh), grid_w(gw), channels(c), values(Tensor::zeros({gh, gw, c})) {}
};

struct VisualToken {
    enum class Kind { Patch, TileNewline, ViewSeparator };
    Kind kind = Kind::Patch;
    // Patch only; tile 0 is the global thumbnail, locals are 1..m*n.
    int tile = 0;
    int row = 0;
    int col = 0;

    static VisualToken patch(int tile, int row, int col) {
        return {Kind::Patch, tile, row, col};
    }
    static VisualToken newline() { return {Kind::TileNewline, 0, 0, 0}; }
    static VisualToken separator() { return {Kind::ViewSeparator, 0, 0, 0}; }

    bool operator==(const VisualToken &) const = default;
};

struct VisualLayout {
    int m = 0;
    int n = 0;
    std::vector<VisualToken> sequence;
};

// Space-to-depth: output is ceil(g_h/f) x ceil(g_w/f) with channels*f^2,
// input zero-padded on the bottom/right to a multiple of f. Each output
// cell concatenates its f x f block's channel vectors in row-major order.
TileFeatures pixel_shuffle(const TileFeatures &features, int factor = 2);

// Token sequence for one image: thumbnail rows (patch-per-column plus a
// trailing newline), a view separator, then the m*n local tiles scanned as
// one (m*14) x (n*14) grid with a newline per global row. With more than
// two images in context tiling is off and only the thumbnail block remains.
// grid is the per-tile post-shuffle width (14 at production scale).
VisualLayout layout_visual_tokens(int m, int n, int images_in_context = 1,
                                  int grid = 14);

// Two-layer GELU MLP applied per token; W1 is [hidden, c_in], W2 is
// [d_model, hidden].
Tensor project(const Tensor &tokens, const Tensor &w1, const Tensor &b1,
               const Tensor &w2, const Tensor &b2);

// One line per token: "P t r c" | "NL" | "SEP".
std::string dump_layout(const VisualLayout &layout);

} // namespace vlm
