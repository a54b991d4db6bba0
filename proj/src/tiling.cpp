#include "vlm/tiling.hpp"

#include <cmath>
#include <stdexcept>

namespace vlm {

std::vector<ResolutionCandidate> candidate_resolutions(int base, int max_tiles) {
    if (max_tiles < 1)
        throw std::invalid_argument("max_tiles must be >= 1");
    std::vector<ResolutionCandidate> out;
    for (int m = 1; m <= max_tiles; ++m)
        for (int n = 1; n <= max_tiles; ++n)
            if (m * n <= max_tiles)
                out.push_back({m, n, base});
    return out;
}

TilingPlan select_resolution(int h, int w,
                             const std::vector<ResolutionCandidate> &candidates) {
    if (h < 1 || w < 1)
        throw std::invalid_argument("image dimensions must be >= 1");
    if (candidates.empty())
        throw std::invalid_argument("candidate set is empty");
    bool have = false;
    TilingPlan best;
    for (const auto &cand : candidates) {
        double s = std::min(static_cast<double>(cand.height()) / h,
                            static_cast<double>(cand.width()) / w);
        // Round half-away-from-zero, clamp; the side attaining the scale
        // matches the candidate side exactly.
        int rh = std::min(cand.height(), static_cast<int>(std::llround(s * h)));
        int rw = std::min(cand.width(), static_cast<int>(std::llround(s * w)));
        if (cand.height() * static_cast<std::int64_t>(w) <=
            cand.width() * static_cast<std::int64_t>(h))
            rh = cand.height();
        else
            rw = cand.width();
        rh = std::max(rh, 1);
        rw = std::max(rw, 1);
        std::int64_t pad = static_cast<std::int64_t>(cand.height()) * cand.width() -
                           static_cast<std::int64_t>(rh) * rw;
        TilingPlan plan{cand, s, rh, rw, pad};
        bool better = false;
        if (!have) {
            better = true;
        } else if (pad != best.padding_area) {
            better = pad < best.padding_area;
        } else if (cand.rows * cand.cols != best.candidate.rows * best.candidate.cols) {
            better = cand.rows * cand.cols < best.candidate.rows * best.candidate.cols;
        } else {
            better = cand.rows < best.candidate.rows;
        }
        if (better) {
            best = plan;
            have = true;
        }
    }
    return best;
}

std::vector<Image> slice_tiles(const Image &canvas, const TilingPlan &plan) {
    const auto &cand = plan.candidate;
    if (canvas.height != cand.height() || canvas.width != cand.width())
        throw std::invalid_argument("canvas does not match tiling plan");
    std::vector<Image> tiles;
    tiles.reserve(static_cast<std::size_t>(plan.tile_count()));
    tiles.push_back(resize_bilinear(canvas, cand.base, cand.base));
    for (int ty = 0; ty < cand.rows; ++ty) {
        for (int tx = 0; tx < cand.cols; ++tx) {
            Image tile(cand.base, cand.base);
            for (int y = 0; y < cand.base; ++y)
                for (int x = 0; x < cand.base; ++x)
                    for (int c = 0; c < 3; ++c)
                        tile.sample(x, y, c) =
                            canvas.sample(tx * cand.base + x, ty * cand.base + y, c);
            tiles.push_back(std::move(tile));
        }
    }
    return tiles;
}

Image build_canvas(const Image &img, const TilingPlan &plan) {
    Image resized = resize_bilinear(img, plan.resized_h, plan.resized_w);
    return pad_to(resized, plan.candidate.height(), plan.candidate.width(), kPadFill);
}

} // namespace vlm
