#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "dataset.hpp"
#include "geometry.hpp"
#include "tree.hpp"

namespace angletree {

struct SearchConfig {
    std::size_t k_neighbors = 1;
    double theta = 0.0;           // error angle, applied as cos(theta) on the bound
    bool force_kd_bound = false;  // divisor 1 instead of sin(dihedral)
    std::int64_t exclude_id = -1; // dataset row excluded from candidacy, -1 = none
};

struct SearchResult {
    std::vector<std::uint32_t> ids;   // ascending by (distance, id)
    std::vector<double> distances;    // non-decreasing, matching ids
    CountedMetric stats;
    bool truncated = false;           // k_neighbors exceeded the candidate count
};

namespace detail {

struct Candidate {
    double dist;
    std::uint32_t id;
    bool operator<(const Candidate& o) const {
        return dist < o.dist || (dist == o.dist && id < o.id);
    }
};

// Max-heap of the k best candidates seen so far.
struct BestK {
    std::size_t k;
    std::priority_queue<Candidate> heap;

    explicit BestK(std::size_t k_) : k(k_) {}

    double worst() const { return heap.size() < k ? std::numeric_limits<double>::infinity()
                                                  : heap.top().dist; }
    void offer(double dist, std::uint32_t id) {
        if (heap.size() < k) {
            heap.push({dist, id});
        } else if (Candidate{dist, id} < heap.top()) {
            heap.pop();
            heap.push({dist, id});
        }
    }
};

inline void scan_leaf(const AngleTreeNode& node, const Dataset& data, std::span<const double> q,
                      const SearchConfig& cfg, BestK& best, CountedMetric& stats) {
    for (auto id : node.point_ids) {
        if (cfg.exclude_id >= 0 && id == static_cast<std::uint32_t>(cfg.exclude_id)) continue;
        best.offer(euclidean_distance(q, data.row(id), stats), id);
    }
}

inline void descend(const AngleTreeNode& node, const Dataset& data, std::span<const double> q,
                    const SearchConfig& cfg, BestK& best, CountedMetric& stats) {
    if (node.is_leaf()) {
        scan_leaf(node, data, q, cfg, best, stats);
        return;
    }
    const double margin = signed_margin(q, node.splitter, stats);
    const AngleTreeNode& near = margin <= 0.0 ? *node.neg_child : *node.pos_child;
    const AngleTreeNode& far = margin <= 0.0 ? *node.pos_child : *node.neg_child;
    descend(near, data, q, cfg, best, stats);
    const double divisor = cfg.force_kd_bound ? 1.0 : std::sin(node.dihedral);
    const double bound = std::abs(margin) * std::cos(cfg.theta) / divisor;
    if (bound >= best.worst()) return;  // prune the far child
    descend(far, data, q, cfg, best, stats);
}

inline SearchResult finish(BestK& best, bool truncated) {
    SearchResult out;
    out.truncated = truncated;
    std::vector<Candidate> cands;
    cands.reserve(best.heap.size());
    while (!best.heap.empty()) {
        cands.push_back(best.heap.top());
        best.heap.pop();
    }
    std::sort(cands.begin(), cands.end());
    for (const auto& c : cands) {
        out.ids.push_back(c.id);
        out.distances.push_back(c.dist);
    }
    return out;
}

}  // namespace detail

/// Depth-first k-NN search with the dihedral pruning rule: the far child of a
/// node is pruned iff |margin| * cos(theta) / sin(dihedral) >= the current
/// k-th best distance. Approximate by design when dihedral < pi/2.
inline SearchResult knn_search(const AngleTreeNode& tree, const Dataset& data,
                               std::span<const double> q, const SearchConfig& cfg) {
    if (q.size() != data.dim) throw std::invalid_argument("knn_search: dimension mismatch");
    if (cfg.k_neighbors == 0) throw std::invalid_argument("knn_search: k_neighbors must be >= 1");
    detail::BestK best(cfg.k_neighbors);
    CountedMetric stats;
    detail::descend(tree, data, q, cfg, best, stats);
    auto out = detail::finish(best, cfg.k_neighbors > data.n);
    out.stats = stats;
    return out;
}

/// Exact k nearest by full scan; distance_evals equals N.
inline SearchResult brute_force(const Dataset& data, std::span<const double> q,
                                std::size_t k_neighbors, std::int64_t exclude_id = -1) {
    if (q.size() != data.dim) throw std::invalid_argument("brute_force: dimension mismatch");
    detail::BestK best(k_neighbors);
    CountedMetric stats;
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto id = static_cast<std::uint32_t>(i);
        const double d = euclidean_distance(q, data.row(i), stats);
        if (exclude_id >= 0 && id == static_cast<std::uint32_t>(exclude_id)) continue;
        best.offer(d, id);
    }
    auto out = detail::finish(best, k_neighbors > data.n);
    out.stats = stats;
    return out;
}

/// Fraction of the data a random partial scan must cover to match the given
/// all-k recall in expectation.
inline double pbf_equivalent_fraction(double recall, std::size_t k_neighbors) {
    if (recall < 0.0 || recall > 1.0)
        throw std::invalid_argument("pbf_equivalent_fraction: recall out of range");
    if (recall == 0.0) return 0.0;
    return std::pow(recall, 1.0 / static_cast<double>(k_neighbors));
}

/// Descend to the single containing leaf and scan only it; no backtracking.
inline SearchResult near_neighbor_probe(const AngleTreeNode& tree, const Dataset& data,
                                        std::span<const double> q, std::size_t k_neighbors = 1,
                                        std::int64_t exclude_id = -1) {
    if (q.size() != data.dim)
        throw std::invalid_argument("near_neighbor_probe: dimension mismatch");
    SearchConfig cfg;
    cfg.k_neighbors = k_neighbors;
    cfg.exclude_id = exclude_id;
    detail::BestK best(k_neighbors);
    CountedMetric stats;
    const AngleTreeNode* node = &tree;
    while (!node->is_leaf()) {
        const double margin = signed_margin(q, node->splitter, stats);
        node = margin <= 0.0 ? node->neg_child.get() : node->pos_child.get();
    }
    detail::scan_leaf(*node, data, q, cfg, best, stats);
    auto out = detail::finish(best, k_neighbors > node->point_ids.size());
    out.stats = stats;
    return out;
}

/// Probe each tree's leaf, merge the candidates, return the best k. Stats are
/// summed across trees.
inline SearchResult multi_tree_probe(const std::vector<const AngleTreeNode*>& trees,
                                     const Dataset& data, std::span<const double> q,
                                     std::size_t k_neighbors, std::int64_t exclude_id = -1) {
    if (trees.empty()) throw std::invalid_argument("multi_tree_probe: empty tree list");
    detail::BestK best(k_neighbors);
    CountedMetric stats;
    std::vector<std::uint32_t> seen;
    for (const auto* tree : trees) {
        auto r = near_neighbor_probe(*tree, data, q, k_neighbors, exclude_id);
        stats += r.stats;
        for (std::size_t i = 0; i < r.ids.size(); ++i) {
            if (std::find(seen.begin(), seen.end(), r.ids[i]) != seen.end()) continue;
            seen.push_back(r.ids[i]);
            best.offer(r.distances[i], r.ids[i]);
        }
    }
    auto out = detail::finish(best, false);
    out.stats = stats;
    return out;
}

/// A query counts as correct only if all k returned ids are true k-NN; ties
/// at the k-th distance count either id as correct.
inline bool all_k_correct(const SearchResult& got, const SearchResult& truth,
                          double tie_eps = 1e-9) {
    if (truth.ids.empty()) return got.ids.empty();
    if (got.ids.size() < truth.ids.size()) return false;
    const double kth = truth.distances.back();
    for (std::size_t i = 0; i < truth.ids.size(); ++i)
        if (got.distances[i] > kth + tie_eps) return false;
    return true;
}

}  // namespace angletree
