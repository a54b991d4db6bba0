#include "vlm/adaptor.hpp"
#include "vlm/nn.hpp"

#include <stdexcept>

namespace vlm {

TileFeatures pixel_shuffle(const TileFeatures &features, int factor) {
    if (factor < 1)
        throw std::invalid_argument("pixel_shuffle factor must be >= 1");
    int gh = features.grid_h, gw = features.grid_w, c = features.channels;
    int oh = (gh + factor - 1) / factor;
    int ow = (gw + factor - 1) / factor;
    TileFeatures out(oh, ow, c * factor * factor);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            int slot = 0;
            for (int dy = 0; dy < factor; ++dy) {
                for (int dx = 0; dx < factor; ++dx) {
                    int iy = oy * factor + dy;
                    int ix = ox * factor + dx;
                    for (int ch = 0; ch < c; ++ch, ++slot) {
                        double v = (iy < gh && ix < gw) ? features.values.at(iy, ix, ch) : 0.0;
                        out.values.at(oy, ox, slot) = v;
                    }
                }
            }
        }
    }
    return out;
}

VisualLayout layout_visual_tokens(int m, int n, int images_in_context, int grid) {
    if (m < 1 || n < 1 || grid < 1)
        throw std::invalid_argument("layout_visual_tokens: m, n, grid must be >= 1");
    VisualLayout layout;
    layout.m = m;
    layout.n = n;
    // Thumbnail block: grid rows of grid patches, newline after each row.
    for (int r = 0; r < grid; ++r) {
        for (int c = 0; c < grid; ++c)
            layout.sequence.push_back(VisualToken::patch(0, r, c));
        layout.sequence.push_back(VisualToken::newline());
    }
    if (images_in_context > 2)
        return layout; // tiling disabled, thumbnail only
    layout.sequence.push_back(VisualToken::separator());
    // Local tiles as one (m*grid) x (n*grid) raster: each global row scans
    // across all n tiles, then one newline.
    for (int gr = 0; gr < m * grid; ++gr) {
        int tile_row = gr / grid;
        int row_in_tile = gr % grid;
        for (int tc = 0; tc < n; ++tc)
            for (int c = 0; c < grid; ++c)
                layout.sequence.push_back(
                    VisualToken::patch(1 + tile_row * n + tc, row_in_tile, c));
        layout.sequence.push_back(VisualToken::newline());
    }
    return layout;
}

Tensor project(const Tensor &tokens, const Tensor &w1, const Tensor &b1,
               const Tensor &w2, const Tensor &b2) {
    if (tokens.rank() != 2 || w1.rank() != 2 || w2.rank() != 2)
        throw std::invalid_argument("project expects rank-2 tokens and weights");
    if (w1.dim(1) != tokens.dim(1) || w2.dim(1) != w1.dim(0) ||
        b1.dim(0) != w1.dim(0) || b2.dim(0) != w2.dim(0))
        throw std::invalid_argument("project weight shapes do not chain");
    Mlp mlp;
    mlp.fc1.weight = Param(w1);
    mlp.fc1.bias = Param(b1);
    mlp.fc2.weight = Param(w2);
    mlp.fc2.bias = Param(b2);
    return mlp.forward(tokens);
}

std::string dump_layout(const VisualLayout &layout) {
    std::string out;
    for (const auto &tok : layout.sequence) {
        switch (tok.kind) {
        case VisualToken::Kind::Patch:
            out += "P " + std::to_string(tok.tile) + " " + std::to_string(tok.row) +
                   " " + std::to_string(tok.col) + "\n";
            break;
        case VisualToken::Kind::TileNewline:
            out += "NL\n";
            break;
        case VisualToken::Kind::ViewSeparator:
            out += "SEP\n";
            break;
        }
    }
    return out;
}

} // namespace vlm
