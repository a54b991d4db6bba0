#pragma once

#include <cstdint>
#include <vector>

namespace vlm {

struct RankAssignment {
    std::vector<std::vector<int>> assignments; // rank -> sample indices
    std::vector<std::int64_t> loads;           // rank -> total tiles
};

struct StagePartition {
    std::vector<int> boundaries;     // S-1 split points (first layer of each later stage)
    std::vector<double> stage_costs; // per-stage summed cost
    double max_cost = 0.0;
};

// LPT greedy: samples sorted by descending tile count (ties by lower
// index), each assigned to the least-loaded rank (ties by lower rank id).
RankAssignment balance_tiles(const std::vector<int> &tile_counts, int ranks);

// Contiguous partition of layers into stages minimizing the maximum stage
// cost; ties resolved toward earlier split points.
StagePartition split_pipeline_stages(const std::vector<double> &layer_costs,
                                     int stages);

} // namespace vlm
