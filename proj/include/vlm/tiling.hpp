#pragma once

#include "vlm/image.hpp"

#include <vector>

namespace vlm {

inline constexpr int kBaseTile = 384;
inline constexpr Rgb kPadFill{127, 127, 127};

// One (rows x cols) grid of base-resolution tiles.
struct ResolutionCandidate {
    int rows = 1; // m
    int cols = 1; // n
    int base = kBaseTile;

    int height() const { return rows * base; }
    int width() const { return cols * base; }
};

struct TilingPlan {
    ResolutionCandidate candidate;
    double scale = 1.0;
    int resized_h = 0;
    int resized_w = 0;
    std::int64_t padding_area = 0;

    int tile_count() const { return 1 + candidate.rows * candidate.cols; }
};

// All (m, n) with m, n >= 1 and m*n <= max_tiles, ordered by (m, n).
std::vector<ResolutionCandidate> candidate_resolutions(int base = kBaseTile,
                                                       int max_tiles = 9);

// Picks the candidate minimizing padding area after the largest uniform
// scale that fits; ties broken by fewer tiles, then smaller m.
TilingPlan select_resolution(int h, int w,
                             const std::vector<ResolutionCandidate> &candidates);

// Global thumbnail (whole canvas resized to base x base) followed by the
// local tiles in row-major order.
std::vector<Image> slice_tiles(const Image &canvas, const TilingPlan &plan);

// resize + pad an input image onto the plan's canvas.
Image build_canvas(const Image &img, const TilingPlan &plan);

} // namespace vlm
