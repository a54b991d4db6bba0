#include "vlm/schedsim.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vlm {

RankAssignment balance_tiles(const std::vector<int> &tile_counts, int ranks) {
    if (ranks < 1)
        throw std::invalid_argument("balance_tiles: ranks must be >= 1");
    if (tile_counts.empty())
        throw std::invalid_argument("balance_tiles: no samples");
    for (int c : tile_counts)
        if (c < 1)
            throw std::invalid_argument("balance_tiles: tile counts must be >= 1");

    std::vector<int> order(tile_counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (tile_counts[static_cast<std::size_t>(a)] != tile_counts[static_cast<std::size_t>(b)])
            return tile_counts[static_cast<std::size_t>(a)] > tile_counts[static_cast<std::size_t>(b)];
        return a < b;
    });

    RankAssignment out;
    out.assignments.resize(static_cast<std::size_t>(ranks));
    out.loads.assign(static_cast<std::size_t>(ranks), 0);
    for (int idx : order) {
        int best = 0;
        for (int r = 1; r < ranks; ++r)
            if (out.loads[static_cast<std::size_t>(r)] < out.loads[static_cast<std::size_t>(best)])
                best = r;
        out.assignments[static_cast<std::size_t>(best)].push_back(idx);
        out.loads[static_cast<std::size_t>(best)] += tile_counts[static_cast<std::size_t>(idx)];
    }
    return out;
}

StagePartition split_pipeline_stages(const std::vector<double> &layer_costs, int stages) {
    int n = static_cast<int>(layer_costs.size());
    if (stages < 1 || stages > n)
        throw std::invalid_argument("split_pipeline_stages: need 1 <= stages <= layers");
    for (double c : layer_costs)
        if (c <= 0.0)
            throw std::invalid_argument("split_pipeline_stages: costs must be positive");

    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i)
        prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + layer_costs[static_cast<std::size_t>(i)];
    auto range_cost = [&](int lo, int hi) { // [lo, hi)
        return prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)];
    };

    // g[i][s]: min over contiguous partitions of layers [i, n) into s
    // non-empty stages of the maximum stage cost.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> g(static_cast<std::size_t>(n) + 1,
                                       std::vector<double>(static_cast<std::size_t>(stages) + 1, kInf));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)][1] = range_cost(i, n);
    for (int s = 2; s <= stages; ++s) {
        for (int i = 0; i + s <= n; ++i) {
            double best = kInf;
            for (int e = i; e + (s - 1) <= n - 1; ++e)
                best = std::min(best, std::max(range_cost(i, e + 1),
                                               g[static_cast<std::size_t>(e) + 1][static_cast<std::size_t>(s) - 1]));
            g[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] = best;
        }
    }

    // Reconstruct the lexicographically earliest optimal split points.
    StagePartition part;
    double target = g[0][static_cast<std::size_t>(stages)];
    int i = 0;
    for (int s = stages; s >= 1; --s) {
        if (s == 1) {
            part.stage_costs.push_back(range_cost(i, n));
            break;
        }
        for (int e = i; e + (s - 1) <= n - 1; ++e) {
            double cand = std::max(range_cost(i, e + 1),
                                   g[static_cast<std::size_t>(e) + 1][static_cast<std::size_t>(s) - 1]);
            if (cand <= target) {
                part.stage_costs.push_back(range_cost(i, e + 1));
                part.boundaries.push_back(e + 1);
                i = e + 1;
                break;
            }
        }
    }
    part.max_cost = *std::max_element(part.stage_costs.begin(), part.stage_costs.end());
    return part;
}

} // namespace vlm
