// Acceptance suite: runs each release gate end to end and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "angletree/angletree.hpp"

using namespace angletree;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("[%s] C%02d %s — %s\n", ok ? "PASS" : "FAIL", id, what.c_str(),
                detail.c_str());
    if (!ok) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    auto est = sin_alpha_mc(500, 5, 100000, rng);
    const double target = std::sqrt(4.5 / 499.5);
    const double dev = std::abs(est.mean - target) / est.std_error();
    bool ok = dev <= 3.0;

    Rng rng2(7);
    auto var_est = sin_alpha_mc(1000, 100, 100000, rng2);
    const double var_target = 1.0 / 1999.0;
    const double var_rel = std::abs(var_est.variance - var_target) / var_target;
    ok = ok && var_rel <= 0.20;
    const double secs = elapsed_s(t0);
    ok = ok && secs < 10.0;
    report(1, ok, "sin(alpha) moments",
           "mean dev " + fmt(dev) + " SE (<=3), var rel err " + fmt(var_rel) +
               " (<=0.2), " + fmt(secs) + " s (<10)");
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string worst;
    double worst_dev = 0.0;
    Rng rng(99);
    for (std::size_t d : {2u, 3u, 5u, 8u, 10u}) {
        for (double deg : {15.0, 30.0, 45.0}) {
            const double th = deg * M_PI / 180.0;
            const double analytic = segment_ratio(d, th);
            const std::size_t n = 1000000;
            std::size_t inside = 0;
            for (std::size_t i = 0; i < n; ++i) {
                auto v = gaussian_vector(d, rng);
                if (std::abs(v[0]) / norm(v) >= std::cos(th)) ++inside;
            }
            const double frac = static_cast<double>(inside) / n;
            const double se = std::sqrt(analytic * (1.0 - analytic) / n);
            const double dev = std::abs(frac - analytic) / se;
            if (dev > worst_dev) {
                worst_dev = dev;
                worst = "d=" + std::to_string(d) + " theta=" + fmt(deg);
            }
            if (dev > 3.0) ok = false;
            if (d % 2 == 1) {
                const double series = segment_ratio_series(d, th);
                if (std::abs(analytic - series) > 1e-8 * std::abs(series)) ok = false;
            }
        }
    }
    const double secs = elapsed_s(t0);
    ok = ok && secs < 60.0;
    report(2, ok, "segment ratio vs MC and series",
           "worst MC dev " + fmt(worst_dev) + " SE at " + worst + " (<=3), " + fmt(secs) +
               " s (<60)");
}

void criterion_3() {
    const double th = 30.0 * M_PI / 180.0;
    bool low_ok = true, high_ok = true;
    std::string low_detail;
    for (std::size_t d = 1; d <= 10; ++d) {
        const double p = miss_probability(d, th, 2000);
        if (p >= 0.01) {
            low_ok = false;
            low_detail += " d=" + std::to_string(d) + ":" + fmt(p);
        }
    }
    for (std::size_t d = 25; d <= 30; ++d)
        if (miss_probability(d, th, 2000) <= 0.99) high_ok = false;
    report(3, low_ok && high_ok, "failure probability cliff",
           std::string("d<=10 all <0.01: ") + (low_ok ? "yes" : ("no —" + low_detail)) +
               "; d>=25 all >0.99: " + (high_ok ? "yes" : "no"));
}

void criterion_4() {
    bool ok = true;
    std::string detail;
    struct Case {
        std::size_t d, D;
        double eps, alpha_deg;
    };
    for (const Case c : {Case{2, 5, 0.05, 45.0}, Case{3, 20, 0.1, 30.0}}) {
        GeometryParams p;
        p.intrinsic_dim = c.d;
        p.ambient_dim = c.D;
        p.epsilon = c.eps;
        p.alpha = c.alpha_deg * M_PI / 180.0;
        const double analytic = error_region_ratio(p);
        Rng rng(4);
        auto mc = hypercylinder_mc(p, 10000000, rng);
        const double rel = std::abs(mc.ratio - analytic) / analytic;
        if (rel > 0.02) ok = false;
        detail += "d=" + std::to_string(c.d) + ": quad " + fmt(analytic) + " mc " +
                  fmt(mc.ratio) + " rel " + fmt(rel) + "; ";
    }
    GeometryParams p;
    p.intrinsic_dim = 3;
    p.ambient_dim = 20;
    p.epsilon = 0.1;
    double prev = 1.0;
    for (int deg = 10; deg <= 90; deg += 10) {
        p.alpha = deg * M_PI / 180.0;
        const double v = error_region_ratio(p);
        if (v > prev + 1e-12) ok = false;
        prev = v;
    }
    report(4, ok, "error region quadrature vs MC", detail + "monotone in alpha");
}

void criterion_5() {
    bool ok = true;
    std::vector<Dataset> datasets;
    datasets.push_back(gen_sin3d(5000, 1));
    datasets.push_back(gen_affine_flat(5000, 3, 30, 0.0, 2));
    datasets.push_back(gen_sphere(5000, 8, 40, 0.02, 3));
    std::size_t queries = 0;
    for (const auto& data : datasets) {
        TreeConfig tcfg;
        tcfg.min_size = 40;
        tcfg.angle_samples = 500;
        tcfg.rng_seed = 5;
        auto built = build_angle_tree(data, tcfg);
        auto forced = deserialize_tree(serialize_tree(*built.root, data.dim));
        force_dihedral(*forced.root, M_PI_2);
        Rng rng(55);
        for (int trial = 0; trial < 200; ++trial, ++queries) {
            const auto q = data.row(rng() % data.n);
            SearchConfig acfg;
            acfg.k_neighbors = 2;
            SearchConfig kcfg = acfg;
            kcfg.force_kd_bound = true;
            auto a = knn_search(*forced.root, data, q, acfg);
            auto b = knn_search(*built.root, data, q, kcfg);
            if (a.ids != b.ids || a.distances != b.distances ||
                a.stats.distance_evals != b.stats.distance_evals)
                ok = false;
        }
    }
    report(5, ok, "pi/2 dihedrals reduce to the kd rule",
           std::to_string(queries) + " queries on 3 datasets, zero-tolerance equality");
}

void criterion_6() {
    const double theta = compute_theta(3, 2000, 0.01);
    // recall on the full-size flat
    auto data = gen_affine_flat(10000, 3, 50, 0.0, 6);
    TreeConfig tcfg;
    tcfg.min_size = 50;
    tcfg.angle_samples = 2000;
    tcfg.iout = 0.0;
    tcfg.rng_seed = 6;
    auto built = build_angle_tree(data, tcfg);
    SearchConfig cfg;
    cfg.k_neighbors = 1;
    cfg.theta = theta;
    Rng rng(66);
    std::size_t correct = 0;
    const int n_queries = 500;
    for (int trial = 0; trial < n_queries; ++trial) {
        const auto q = data.row(rng() % data.n);
        auto got = knn_search(*built.root, data, q, cfg);
        auto truth = brute_force(data, q, 1);
        if (all_k_correct(got, truth)) ++correct;
    }
    const double recall = static_cast<double>(correct) / n_queries;
    bool ok = recall == 1.0;

    // exhaustive prune audit on the smaller flat
    auto small = gen_affine_flat(2000, 3, 50, 0.0, 7);
    TreeConfig scfg = tcfg;
    scfg.rng_seed = 7;
    auto sbuilt = build_angle_tree(small, scfg);
    std::size_t audited = 0;
    bool audit_ok = true;
    Rng rng2(67);
    for (int trial = 0; trial < 100; ++trial) {
        const auto q = small.row(rng2() % small.n);
        auto got = knn_search(*sbuilt.root, small, q, cfg);
        const double kth = got.distances.back();
        // walk the tree exactly as the search does and check pruned subtrees
        struct Frame {
            const AngleTreeNode* node;
        };
        std::vector<const AngleTreeNode*> stack{sbuilt.root.get()};
        while (!stack.empty()) {
            const auto* node = stack.back();
            stack.pop_back();
            if (node->is_leaf()) continue;
            CountedMetric m;
            const double margin = signed_margin(q, node->splitter, m);
            const AngleTreeNode* near = margin <= 0 ? node->neg_child.get()
                                                    : node->pos_child.get();
            const AngleTreeNode* far = margin <= 0 ? node->pos_child.get()
                                                   : node->neg_child.get();
            stack.push_back(near);
            const double bound = std::abs(margin) * std::cos(cfg.theta) /
                                 std::sin(node->dihedral);
            if (bound >= kth) {
                ++audited;
                std::vector<const AngleTreeNode*> sub{far};
                while (!sub.empty()) {
                    const auto* s = sub.back();
                    sub.pop_back();
                    if (!s->is_leaf()) {
                        sub.push_back(s->neg_child.get());
                        sub.push_back(s->pos_child.get());
                        continue;
                    }
                    for (auto id : s->point_ids)
                        if (euclidean_distance(q, small.row(id), m) < kth - 1e-9)
                            audit_ok = false;
                }
            } else {
                stack.push_back(far);
            }
        }
    }
    ok = ok && audit_ok;
    report(6, ok, "exactness on noiseless flats",
           "recall " + fmt(recall) + " over 500 queries (=1.0); " + std::to_string(audited) +
               " pruned subtrees audited " + (audit_ok ? "clean" : "DIRTY"));
}

struct QueryStats {
    double recall = 0.0;
    double mean_ndc = 0.0;       // distance evals only
    double mean_total_ndc = 0.0; // distances + projections
};

QueryStats run_queries(const AngleTreeNode& tree, const Dataset& data, std::size_t k,
                       std::size_t n_queries, std::uint64_t seed, bool exclude_self) {
    Rng rng(seed);
    QueryStats out;
    std::size_t correct = 0;
    std::uint64_t ndc = 0, total = 0;
    for (std::size_t trial = 0; trial < n_queries; ++trial) {
        const auto qid = static_cast<std::int64_t>(rng() % data.n);
        const auto q = data.row(qid);
        SearchConfig cfg;
        cfg.k_neighbors = k;
        cfg.exclude_id = exclude_self ? qid : -1;
        auto got = knn_search(tree, data, q, cfg);
        auto truth = brute_force(data, q, k, exclude_self ? qid : -1);
        if (all_k_correct(got, truth)) ++correct;
        ndc += got.stats.distance_evals;
        total += got.stats.total();
    }
    out.recall = static_cast<double>(correct) / static_cast<double>(n_queries);
    out.mean_ndc = static_cast<double>(ndc) / static_cast<double>(n_queries);
    out.mean_total_ndc = static_cast<double>(total) / static_cast<double>(n_queries);
    return out;
}

void criteria_7_8() {
    auto data = gen_sphere(20000, 8, 100, 0.0, 8);
    TreeConfig tcfg;
    tcfg.min_size = 50;
    tcfg.angle_samples = 2000;
    tcfg.iout = 0.1;
    tcfg.rng_seed = 8;
    auto built = build_angle_tree(data, tcfg);

    auto one = run_queries(*built.root, data, 1, 200, 88, /*exclude_self=*/true);
    const double pbf_frac = pbf_equivalent_fraction(one.recall, 1);
    const double speedup = pbf_frac * static_cast<double>(data.n) / one.mean_total_ndc;
    const bool ok7 = one.recall >= 0.90 && speedup > 1.5;
    report(7, ok7, "sphere speedup analog",
           "1-NN recall " + fmt(one.recall) + " (>=0.9), mean total NDC " +
               fmt(one.mean_total_ndc) + ", speedup over PBF " + fmt(speedup) + " (>1.5)");

    auto two = run_queries(*built.root, data, 2, 200, 88, /*exclude_self=*/true);
    const double ratio = two.mean_ndc / one.mean_ndc;
    const bool ok8 = ratio >= 1.3 && ratio <= 3.0;
    report(8, ok8, "2-NN cost ratio",
           "mean NDC 2-NN/1-NN = " + fmt(ratio) + " (in [1.3, 3.0])");
}

void criterion_9() {
    auto data = gen_sphere(10000, 8, 60, 0.05, 9);
    TreeConfig tcfg;
    tcfg.min_size = 50;
    tcfg.angle_samples = 2000;
    tcfg.iout = 0.0;
    tcfg.rng_seed = 9;
    tcfg.keep_angle_samples = true;
    auto built = build_angle_tree(data, tcfg);
    bool ndc_ok = true, recall_ok = true;
    double prev_ndc = std::numeric_limits<double>::infinity();
    double prev_recall = 1.0 + 1e-12;
    std::string detail;
    for (double iout : {0.0, 0.05, 0.1, 0.2}) {
        reapply_iout(*built.root, iout);
        auto stats = run_queries(*built.root, data, 1, 200, 99, /*exclude_self=*/true);
        if (stats.mean_ndc > prev_ndc) ndc_ok = false;
        if (stats.recall > prev_recall + 1e-12) recall_ok = false;
        prev_ndc = stats.mean_ndc;
        prev_recall = stats.recall;
        detail += fmt(iout) + ":(ndc " + fmt(stats.mean_ndc) + ", recall " +
                  fmt(stats.recall) + ") ";
    }
    report(9, ndc_ok && recall_ok, "iout monotonicity", detail);
}

void criterion_10() {
    auto data = gen_sphere(100000, 14, 15, 0.0, 10);
    const std::size_t t = 3;
    std::vector<BuildResult> built;
    std::vector<const AngleTreeNode*> trees;
    for (std::size_t i = 0; i < t; ++i) {
        TreeConfig tcfg;
        tcfg.tree_type = TreeType::rp;
        tcfg.min_size = 0;
        tcfg.max_depth = 9;
        tcfg.angle_samples = 0;
        tcfg.rng_seed = 1000 + i;
        built.push_back(build_angle_tree(data, tcfg));
        trees.push_back(built.back().root.get());
    }
    Rng rng(110);
    const std::size_t n_queries = 300;
    std::vector<std::size_t> single_hits(t, 0);
    std::size_t multi_hits = 0;
    for (std::size_t trial = 0; trial < n_queries; ++trial) {
        const auto qid = static_cast<std::int64_t>(rng() % data.n);
        const auto q = data.row(qid);
        auto truth = brute_force(data, q, 1, qid);
        for (std::size_t i = 0; i < t; ++i) {
            auto r = near_neighbor_probe(*trees[i], data, q, 1, qid);
            if (all_k_correct(r, truth)) ++single_hits[i];
        }
        auto multi = multi_tree_probe(trees, data, q, 1, qid);
        if (all_k_correct(multi, truth)) ++multi_hits;
    }
    double p_hat = 0.0;
    for (auto h : single_hits) p_hat += static_cast<double>(h);
    p_hat /= static_cast<double>(t * n_queries);
    const double projected = 1.0 - std::pow(1.0 - p_hat, static_cast<double>(t));
    const double measured = static_cast<double>(multi_hits) / n_queries;
    const bool ok = std::abs(measured - projected) <= 0.03;
    report(10, ok, "LSH emulation consistency",
           "p_hat " + fmt(p_hat) + ", projected " + fmt(projected) + ", measured " +
               fmt(measured) + " (|diff| <= 0.03)");
}

void criterion_11() {
    bool ok = true;
    std::string detail;
    double prev_per_node = -1.0;
    for (std::size_t n : {5000u, 10000u, 20000u}) {
        auto data = gen_sphere(n, 6, 30, 0.0, 11);
        TreeConfig with_angles;
        with_angles.min_size = 50;
        with_angles.angle_samples = 2000;
        with_angles.rng_seed = 11;
        TreeConfig without = with_angles;
        without.angle_samples = 0;
        auto a = build_angle_tree(data, with_angles);
        auto b = build_angle_tree(data, without);
        // same seed and same rng consumption for splitters is not guaranteed
        // across configs, so compare against the angle-op counter directly
        const double angle_cost = static_cast<double>(a.metric.total()) -
                                  static_cast<double>(b.metric.total());
        const double nodes = static_cast<double>(count_internal_nodes(*a.root));
        const double per_node = angle_cost / nodes;
        if (prev_per_node >= 0.0 &&
            std::abs(per_node - prev_per_node) > 0.05 * prev_per_node)
            ok = false;
        prev_per_node = per_node;
        detail += "n=" + std::to_string(n) + ": " + fmt(per_node) + " ops/node; ";
    }
    report(11, ok, "build accounting linear in k", detail + "(within 5%)");
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_7_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("acceptance: %d failure(s), %.1f s total\n", failures, elapsed_s(t0));
    return failures;
}
