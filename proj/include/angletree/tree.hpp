#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "dataset.hpp"
#include "geometry.hpp"

namespace angletree {

enum class TreeType { kd, rp };

struct TreeConfig {
    TreeType tree_type = TreeType::rp;
    std::size_t min_size = 50;
    std::size_t angle_samples = 2000;  // k random vectors per node
    double iout = 0.1;                 // ignore-outlier quantile fraction, [0, 1)
    double theta = 0.0;                // stored for reporting; applied at search time
    std::uint64_t rng_seed = 0;
    std::size_t max_depth = 0;         // 0 = unlimited
    bool center_median = false;        // per-axis median instead of mean
    bool keep_angle_samples = false;   // cache sorted plane angles per node
};

struct AngleTreeNode {
    // Internal node fields
    Splitter splitter;
    double dihedral = M_PI_2;  // in (0, pi/2]
    std::unique_ptr<AngleTreeNode> neg_child;
    std::unique_ptr<AngleTreeNode> pos_child;
    // Leaf fields
    std::vector<std::uint32_t> point_ids;
    // Sorted plane angles kept only when TreeConfig::keep_angle_samples is set
    std::vector<double> cached_angles;

    bool is_leaf() const { return neg_child == nullptr; }
};

/// Generate a splitting hyperplane for the given point subset.
/// kd: axis of maximum sample variance; rp: normalized Gaussian direction.
/// Threshold is the median projection; ties go to the negative child, and the
/// threshold is lowered to the next distinct projection if the positive side
/// would otherwise be empty. Returns nullopt when all projections are equal.
inline std::optional<Splitter> gen_splitter(TreeType tree_type, const Dataset& data,
                                            const std::vector<std::uint32_t>& ids, Rng& rng,
                                            CountedMetric& metric) {
    if (ids.size() < 2) return std::nullopt;
    const std::size_t dim = data.dim;
    Splitter s;
    if (tree_type == TreeType::kd) {
        std::size_t best_axis = 0;
        double best_var = -1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            double sum = 0.0, sum2 = 0.0;
            for (auto id : ids) {
                const double x = data.row(id)[a];
                sum += x;
                sum2 += x * x;
            }
            const double mean = sum / static_cast<double>(ids.size());
            const double var = sum2 / static_cast<double>(ids.size()) - mean * mean;
            if (var > best_var) {
                best_var = var;
                best_axis = a;
            }
        }
        if (best_var <= 0.0) return std::nullopt;
        s.normal.assign(dim, 0.0);
        s.normal[best_axis] = 1.0;
    } else {
        s.normal = gaussian_vector(dim, rng);
        const double nn = norm(s.normal);
        if (nn == 0.0) return std::nullopt;
        for (auto& x : s.normal) x /= nn;
    }

    std::vector<double> projections;
    projections.reserve(ids.size());
    s.threshold = 0.0;
    for (auto id : ids) projections.push_back(signed_margin(data.row(id), s, metric));

    std::vector<double> sorted = projections;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) return std::nullopt;
    double threshold = sorted[sorted.size() / 2];
    if (threshold >= sorted.back()) {
        // median equals the maximum; lower to the next distinct projection so
        // the positive side keeps at least one point
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), sorted.back());
        threshold = *std::prev(it);
    }
    s.threshold = threshold;
    return s;
}

/// Estimate the dihedral angle between the splitter and the local intrinsic
/// plane: draw k points with replacement, form v = p - center, record the
/// angle gamma between v and the splitter hyperplane, and take the (1 - iout)
/// quantile of the ascending gammas. Degenerate (zero) vectors are skipped;
/// if all samples degenerate, the estimate falls back to pi/2.
inline double estimate_dihedral(const Splitter& splitter, const Dataset& data,
                                const std::vector<std::uint32_t>& ids, const TreeConfig& cfg,
                                Rng& rng, CountedMetric& metric,
                                std::vector<double>* out_samples = nullptr) {
    if (ids.empty()) throw std::invalid_argument("estimate_dihedral: empty subset");
    const std::size_t dim = data.dim;
    std::vector<double> center(dim, 0.0);
    if (cfg.center_median) {
        std::vector<double> axis(ids.size());
        for (std::size_t a = 0; a < dim; ++a) {
            for (std::size_t i = 0; i < ids.size(); ++i) axis[i] = data.row(ids[i])[a];
            std::nth_element(axis.begin(), axis.begin() + axis.size() / 2, axis.end());
            center[a] = axis[axis.size() / 2];
        }
    } else {
        for (auto id : ids) {
            const auto row = data.row(id);
            for (std::size_t a = 0; a < dim; ++a) center[a] += row[a];
        }
        for (auto& c : center) c /= static_cast<double>(ids.size());
    }

    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    std::vector<double> gammas;
    gammas.reserve(cfg.angle_samples);
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < cfg.angle_samples; ++i) {
        const auto row = data.row(ids[pick(rng)]);
        for (std::size_t a = 0; a < dim; ++a) v[a] = row[a] - center[a];
        if (norm(v) < 1e-12) continue;
        ++metric.angle_evals;
        gammas.push_back(M_PI_2 - angle_to_normal(v, splitter.normal));
    }
    std::sort(gammas.begin(), gammas.end());
    if (out_samples) *out_samples = gammas;
    if (gammas.empty()) return M_PI_2;

    const std::size_t k_eff = gammas.size();
    std::size_t idx = static_cast<std::size_t>(static_cast<double>(k_eff) * (1.0 - cfg.iout));
    if (idx >= k_eff) idx = k_eff - 1;
    double alpha = gammas[idx];
    return std::clamp(alpha, 1e-9, M_PI_2);
}

namespace detail {
// Splitter generation and angle sampling draw from independent streams so the
// tree skeleton is a function of the seed alone, regardless of angle_samples.
inline std::unique_ptr<AngleTreeNode> build_node(const Dataset& data,
                                                 std::vector<std::uint32_t> ids,
                                                 const TreeConfig& cfg, std::size_t depth,
                                                 Rng& rng, Rng& angle_rng,
                                                 CountedMetric& metric) {
    auto node = std::make_unique<AngleTreeNode>();
    const bool depth_capped = cfg.max_depth != 0 && depth >= cfg.max_depth;
    if (ids.size() <= cfg.min_size || depth_capped) {
        node->point_ids = std::move(ids);
        return node;
    }
    auto splitter = gen_splitter(cfg.tree_type, data, ids, rng, metric);
    if (!splitter) {
        node->point_ids = std::move(ids);
        return node;
    }
    node->splitter = std::move(*splitter);
    if (cfg.angle_samples > 0) {
        node->dihedral = estimate_dihedral(node->splitter, data, ids, cfg, angle_rng, metric,
                                           cfg.keep_angle_samples ? &node->cached_angles : nullptr);
    } else {
        node->dihedral = M_PI_2;
    }
    std::vector<std::uint32_t> neg_ids, pos_ids;
    for (auto id : ids) {
        if (signed_margin(data.row(id), node->splitter, metric) <= 0.0)
            neg_ids.push_back(id);
        else
            pos_ids.push_back(id);
    }
    node->neg_child = build_node(data, std::move(neg_ids), cfg, depth + 1, rng, angle_rng, metric);
    node->pos_child = build_node(data, std::move(pos_ids), cfg, depth + 1, rng, angle_rng, metric);
    return node;
}
}  // namespace detail

struct BuildResult {
    std::unique_ptr<AngleTreeNode> root;
    CountedMetric metric;
};

inline BuildResult build_angle_tree(const Dataset& data, const TreeConfig& cfg) {
    if (data.n == 0) throw std::invalid_argument("build_angle_tree: empty dataset");
    if (cfg.iout < 0.0 || cfg.iout >= 1.0)
        throw std::invalid_argument("build_angle_tree: iout must be in [0, 1)");
    std::vector<std::uint32_t> ids(data.n);
    for (std::size_t i = 0; i < data.n; ++i) ids[i] = static_cast<std::uint32_t>(i);
    Rng rng(cfg.rng_seed);
    Rng angle_rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ull);
    BuildResult out;
    out.root = detail::build_node(data, std::move(ids), cfg, 0, rng, angle_rng, out.metric);
    return out;
}

/// Recompute every node's dihedral from its cached angle samples at a new
/// iout, leaving the tree skeleton untouched. Requires keep_angle_samples.
inline void reapply_iout(AngleTreeNode& node, double iout) {
    if (node.is_leaf()) return;
    if (node.cached_angles.empty())
        throw std::logic_error("reapply_iout: tree built without keep_angle_samples");
    const std::size_t k_eff = node.cached_angles.size();
    std::size_t idx = static_cast<std::size_t>(static_cast<double>(k_eff) * (1.0 - iout));
    if (idx >= k_eff) idx = k_eff - 1;
    node.dihedral = std::clamp(node.cached_angles[idx], 1e-9, M_PI_2);
    reapply_iout(*node.neg_child, iout);
    reapply_iout(*node.pos_child, iout);
}

inline void force_dihedral(AngleTreeNode& node, double value) {
    if (node.is_leaf()) return;
    node.dihedral = value;
    force_dihedral(*node.neg_child, value);
    force_dihedral(*node.pos_child, value);
}

inline std::size_t count_internal_nodes(const AngleTreeNode& node) {
    if (node.is_leaf()) return 0;
    return 1 + count_internal_nodes(*node.neg_child) + count_internal_nodes(*node.pos_child);
}

inline std::size_t count_leaves(const AngleTreeNode& node) {
    if (node.is_leaf()) return 1;
    return count_leaves(*node.neg_child) + count_leaves(*node.pos_child);
}

// ---------------------------------------------------------------------------
// Serialization: magic "ATRE", u32 version, u32 D, then pre-order node
// records. Internal: tag 1, D+2 doubles (normal, threshold, dihedral), u64
// absolute offset of the positive child (negative child follows in-line).
// Leaf: tag 0, u32 count, count u32 ids. Little-endian throughout.
// ---------------------------------------------------------------------------

namespace detail {
template <typename T>
inline void append_raw(std::vector<std::uint8_t>& buf, const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
inline T read_raw(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw std::runtime_error("tree blob truncated");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

inline void serialize_node(const AngleTreeNode& node, std::vector<std::uint8_t>& buf) {
    if (node.is_leaf()) {
        buf.push_back(0);
        append_raw(buf, static_cast<std::uint32_t>(node.point_ids.size()));
        for (auto id : node.point_ids) append_raw(buf, id);
        return;
    }
    buf.push_back(1);
    for (double x : node.splitter.normal) append_raw(buf, x);
    append_raw(buf, node.splitter.threshold);
    append_raw(buf, node.dihedral);
    const std::size_t offset_pos = buf.size();
    append_raw(buf, std::uint64_t{0});  // backpatched below
    serialize_node(*node.neg_child, buf);
    const std::uint64_t pos_offset = buf.size();
    std::memcpy(buf.data() + offset_pos, &pos_offset, sizeof(pos_offset));
    serialize_node(*node.pos_child, buf);
}

inline std::unique_ptr<AngleTreeNode> deserialize_node(const std::vector<std::uint8_t>& buf,
                                                       std::size_t& pos, std::size_t dim) {
    auto node = std::make_unique<AngleTreeNode>();
    const std::uint8_t tag = read_raw<std::uint8_t>(buf, pos);
    if (tag == 0) {
        const auto count = read_raw<std::uint32_t>(buf, pos);
        node->point_ids.resize(count);
        for (auto& id : node->point_ids) id = read_raw<std::uint32_t>(buf, pos);
        return node;
    }
    if (tag != 1) throw std::runtime_error("tree blob: bad node tag");
    node->splitter.normal.resize(dim);
    for (auto& x : node->splitter.normal) x = read_raw<double>(buf, pos);
    node->splitter.threshold = read_raw<double>(buf, pos);
    node->dihedral = read_raw<double>(buf, pos);
    const auto pos_offset = read_raw<std::uint64_t>(buf, pos);
    node->neg_child = deserialize_node(buf, pos, dim);
    if (pos != pos_offset) throw std::runtime_error("tree blob: child offset mismatch");
    node->pos_child = deserialize_node(buf, pos, dim);
    return node;
}
}  // namespace detail

inline std::vector<std::uint8_t> serialize_tree(const AngleTreeNode& root, std::size_t dim) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), {'A', 'T', 'R', 'E'});
    detail::append_raw(buf, std::uint32_t{1});
    detail::append_raw(buf, static_cast<std::uint32_t>(dim));
    detail::serialize_node(root, buf);
    return buf;
}

struct LoadedTree {
    std::unique_ptr<AngleTreeNode> root;
    std::size_t dim = 0;
};

inline LoadedTree deserialize_tree(const std::vector<std::uint8_t>& buf) {
    std::size_t pos = 0;
    if (buf.size() < 12 || std::memcmp(buf.data(), "ATRE", 4) != 0)
        throw std::runtime_error("not an ATRE tree blob");
    pos = 4;
    const auto version = detail::read_raw<std::uint32_t>(buf, pos);
    if (version != 1) throw std::runtime_error("unsupported ATRE version");
    LoadedTree out;
    out.dim = detail::read_raw<std::uint32_t>(buf, pos);
    out.root = detail::deserialize_node(buf, pos, out.dim);
    if (pos != buf.size()) throw std::runtime_error("trailing bytes in tree blob");
    return out;
}

inline void save_tree(const AngleTreeNode& root, std::size_t dim, const std::string& path) {
    const auto buf = serialize_tree(root, dim);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline LoadedTree load_tree(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
    return deserialize_tree(buf);
}

}  // namespace angletree
