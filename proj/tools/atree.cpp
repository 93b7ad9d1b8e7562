// atree: benchmark driver for the angle-tree library.
//
// Subcommands: gen, build, query, lsh-emulate, analyze. All reports are CSV;
// every row echoes the configuration and seed that produced it. Exit codes:
// 0 success, 2 usage error, 1 runtime error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "angletree/angletree.hpp"

using namespace angletree;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

FileFormat parse_format(const std::string& fmt) {
    if (fmt == "bin") return FileFormat::bin;
    if (fmt == "csv") return FileFormat::csv;
    throw CLI::ValidationError("--format must be 'bin' or 'csv'");
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open for writing: " + path);
    return file;
}

struct GenOptions {
    std::string kind;
    std::size_t n = 1000;
    std::size_t ambient_dim = 2;
    std::size_t intrinsic_dim = 1;
    double noise = 0.0;
    double epsilon = 0.05;
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "bin";
};

int run_gen(const GenOptions& o) {
    Dataset data;
    if (o.kind == "sphere") {
        data = gen_sphere(o.n, o.intrinsic_dim, o.ambient_dim, o.noise, o.seed);
    } else if (o.kind == "flat") {
        data = gen_affine_flat(o.n, o.intrinsic_dim, o.ambient_dim, o.noise, o.seed);
    } else if (o.kind == "sin3d") {
        data = gen_sin3d(o.n, o.seed);
    } else if (o.kind == "hypercylinder") {
        data = gen_hypercylinder(o.n, o.intrinsic_dim, o.ambient_dim, o.epsilon, o.seed);
    } else {
        throw CLI::ValidationError("--kind must be sphere|flat|sin3d|hypercylinder");
    }
    save_dataset(data, o.out, parse_format(o.format));
    std::printf("wrote %s: N=%zu D=%zu kind=%s seed=%llu\n", o.out.c_str(), data.n, data.dim,
                o.kind.c_str(), static_cast<unsigned long long>(o.seed));
    return 0;
}

struct BuildOptions {
    std::string data_path;
    std::string data_format = "bin";
    std::string tree_type = "rp";
    std::size_t min_size = 50;
    std::size_t k_samples = 2000;
    double iout = 0.1;
    std::size_t max_depth = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string report;
};

TreeConfig to_tree_config(const BuildOptions& o) {
    TreeConfig cfg;
    if (o.tree_type == "kd")
        cfg.tree_type = TreeType::kd;
    else if (o.tree_type == "rp")
        cfg.tree_type = TreeType::rp;
    else
        throw CLI::ValidationError("--tree must be 'kd' or 'rp'");
    cfg.min_size = o.min_size;
    cfg.angle_samples = o.k_samples;
    cfg.iout = o.iout;
    cfg.max_depth = o.max_depth;
    cfg.rng_seed = o.seed;
    return cfg;
}

int run_build(const BuildOptions& o) {
    auto data = load_dataset(o.data_path, parse_format(o.data_format));
    const auto t0 = std::chrono::steady_clock::now();
    auto built = build_angle_tree(data, to_tree_config(o));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_tree(*built.root, data.dim, o.out);
    std::ofstream file;
    auto& os = open_out(o.report, file);
    os << "dataset,n,dim,tree,min_size,k_samples,iout,max_depth,seed,"
          "internal_nodes,leaves,build_projections,build_angle_ops,build_ndc,wall_s\n";
    os << o.data_path << ',' << data.n << ',' << data.dim << ',' << o.tree_type << ','
       << o.min_size << ',' << o.k_samples << ',' << o.iout << ',' << o.max_depth << ','
       << o.seed << ',' << count_internal_nodes(*built.root) << ','
       << count_leaves(*built.root) << ',' << built.metric.projection_evals << ','
       << built.metric.angle_evals << ',' << built.metric.total() << ',' << secs << '\n';
    return 0;
}

struct QueryOptions {
    std::string data_path;
    std::string data_format = "bin";
    std::string tree_path;
    std::size_t knn = 1;
    double theta_deg = 0.0;
    bool force_kd_bound = false;
    bool exclude_self = false;
    std::size_t n_queries = 200;
    std::uint64_t seed = 0;
    std::string out;
};

int run_query(const QueryOptions& o) {
    if (o.n_queries == 0) throw CLI::ValidationError("--n-queries must be >= 1");
    auto data = load_dataset(o.data_path, parse_format(o.data_format));
    auto tree = load_tree(o.tree_path);
    if (tree.dim != data.dim) throw std::runtime_error("tree/dataset dimension mismatch");
    std::ofstream file;
    auto& os = open_out(o.out, file);
    os << "query_index,query_id,correct,distance_evals,projection_evals,total_ndc,knn_distance\n";
    Rng rng(o.seed);
    std::size_t correct = 0;
    std::uint64_t sum_dist = 0, sum_proj = 0;
    std::vector<std::uint64_t> per_query_ndc;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < o.n_queries; ++i) {
        const auto qid = static_cast<std::int64_t>(rng() % data.n);
        const auto q = data.row(qid);
        SearchConfig cfg;
        cfg.k_neighbors = o.knn;
        cfg.theta = o.theta_deg * kDegToRad;
        cfg.force_kd_bound = o.force_kd_bound;
        cfg.exclude_id = o.exclude_self ? qid : -1;
        auto got = knn_search(*tree.root, data, q, cfg);
        auto truth = brute_force(data, q, o.knn, cfg.exclude_id);
        const bool ok = all_k_correct(got, truth);
        if (ok) ++correct;
        sum_dist += got.stats.distance_evals;
        sum_proj += got.stats.projection_evals;
        per_query_ndc.push_back(got.stats.total());
        os << i << ',' << qid << ',' << (ok ? 1 : 0) << ',' << got.stats.distance_evals << ','
           << got.stats.projection_evals << ',' << got.stats.total() << ','
           << got.distances.back() << '\n';
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double recall = static_cast<double>(correct) / static_cast<double>(o.n_queries);
    const double mean_ndc =
        static_cast<double>(sum_dist + sum_proj) / static_cast<double>(o.n_queries);
    std::sort(per_query_ndc.begin(), per_query_ndc.end());
    const double median_ndc =
        static_cast<double>(per_query_ndc[per_query_ndc.size() / 2]);
    const double pbf = pbf_equivalent_fraction(recall, o.knn);
    const double speedup = mean_ndc > 0.0
                               ? pbf * static_cast<double>(data.n) / mean_ndc
                               : 0.0;
    os << "# aggregate\n";
    os << "dataset,tree,knn,theta_deg,force_kd_bound,exclude_self,n_queries,seed,"
          "recall,mean_distance_evals,median_total_ndc,mean_projection_evals,mean_total_ndc,"
          "pbf_equivalent_fraction,speedup_over_pbf,wall_s\n";
    os << o.data_path << ',' << o.tree_path << ',' << o.knn << ',' << o.theta_deg << ','
       << o.force_kd_bound << ',' << o.exclude_self << ',' << o.n_queries << ',' << o.seed
       << ',' << recall << ','
       << static_cast<double>(sum_dist) / static_cast<double>(o.n_queries) << ','
       << median_ndc << ','
       << static_cast<double>(sum_proj) / static_cast<double>(o.n_queries) << ','
       << mean_ndc << ',' << pbf << ',' << speedup << ',' << secs << '\n';
    return 0;
}

struct LshOptions {
    std::string data_path;
    std::string data_format = "bin";
    std::size_t trees = 3;
    std::size_t max_depth = 9;
    std::size_t min_size = 0;
    std::size_t n_queries = 200;
    std::uint64_t seed = 0;
    std::string out;
};

int run_lsh(const LshOptions& o) {
    if (o.n_queries == 0) throw CLI::ValidationError("--n-queries must be >= 1");
    if (o.trees == 0) throw CLI::ValidationError("--trees must be >= 1");
    auto data = load_dataset(o.data_path, parse_format(o.data_format));
    std::vector<BuildResult> built;
    std::vector<const AngleTreeNode*> trees;
    for (std::size_t i = 0; i < o.trees; ++i) {
        TreeConfig cfg;
        cfg.tree_type = TreeType::rp;
        cfg.min_size = o.min_size;
        cfg.max_depth = o.max_depth;
        cfg.angle_samples = 0;
        cfg.rng_seed = o.seed + i;
        built.push_back(build_angle_tree(data, cfg));
        trees.push_back(built.back().root.get());
    }
    Rng rng(o.seed ^ 0xabcdefull);
    std::vector<std::size_t> single_hits(o.trees, 0);
    std::vector<std::uint64_t> single_ndc(o.trees, 0);
    std::size_t multi_hits = 0;
    std::uint64_t multi_ndc = 0;
    for (std::size_t i = 0; i < o.n_queries; ++i) {
        const auto qid = static_cast<std::int64_t>(rng() % data.n);
        const auto q = data.row(qid);
        auto truth = brute_force(data, q, 1, qid);
        for (std::size_t ti = 0; ti < o.trees; ++ti) {
            auto r = near_neighbor_probe(*trees[ti], data, q, 1, qid);
            if (all_k_correct(r, truth)) ++single_hits[ti];
            single_ndc[ti] += r.stats.distance_evals;
        }
        auto multi = multi_tree_probe(trees, data, q, 1, qid);
        if (all_k_correct(multi, truth)) ++multi_hits;
        multi_ndc += multi.stats.distance_evals;
    }
    double p_hat = 0.0, mean_single_ndc = 0.0;
    for (std::size_t ti = 0; ti < o.trees; ++ti) {
        p_hat += static_cast<double>(single_hits[ti]);
        mean_single_ndc += static_cast<double>(single_ndc[ti]);
    }
    p_hat /= static_cast<double>(o.trees * o.n_queries);
    mean_single_ndc /= static_cast<double>(o.trees * o.n_queries);
    const double projected = 1.0 - std::pow(1.0 - p_hat, static_cast<double>(o.trees));
    const double measured = static_cast<double>(multi_hits) / static_cast<double>(o.n_queries);
    std::ofstream file;
    auto& os = open_out(o.out, file);
    os << "dataset,trees,max_depth,min_size,n_queries,seed,"
          "single_tree_p,projected_accuracy,measured_accuracy,"
          "avg_per_search,avg_per_search_all_hashes,measured_multi_ndc\n";
    os << o.data_path << ',' << o.trees << ',' << o.max_depth << ',' << o.min_size << ','
       << o.n_queries << ',' << o.seed << ',' << p_hat << ',' << projected << ',' << measured
       << ',' << mean_single_ndc << ','
       << mean_single_ndc * static_cast<double>(o.trees) << ','
       << static_cast<double>(multi_ndc) / static_cast<double>(o.n_queries) << '\n';
    return 0;
}

struct AnalyzeOptions {
    bool miss_prob = false;
    bool error_region = false;
    std::size_t k = 2000;
    std::vector<double> theta_deg{15.0, 30.0, 45.0};
    std::size_t d_max = 30;
    std::size_t d = 2;
    std::size_t ambient_dim = 5;
    double epsilon = 0.05;
    std::vector<double> alpha_deg{10, 20, 30, 40, 45, 50, 60, 70, 80, 90};
    bool mc_check = false;
    std::size_t mc_samples = 1000000;
    std::uint64_t seed = 0;
    std::string out;
};

int run_analyze(const AnalyzeOptions& o) {
    if (!o.miss_prob && !o.error_region)
        throw CLI::ValidationError("choose --miss-prob and/or --error-region");
    std::ofstream file;
    auto& os = open_out(o.out, file);
    Rng rng(o.seed);
    if (o.miss_prob) {
        os << "metric,d,theta_deg,k,segment_ratio,miss_probability";
        if (o.mc_check) os << ",mc_segment_ratio,mc_std_error";
        os << '\n';
        for (std::size_t d = 1; d <= o.d_max; ++d) {
            for (double deg : o.theta_deg) {
                const double th = deg * kDegToRad;
                const double s = segment_ratio(d, th);
                os << "miss_prob," << d << ',' << deg << ',' << o.k << ',' << s << ','
                   << miss_probability(d, th, o.k);
                if (o.mc_check) {
                    std::size_t inside = 0;
                    for (std::size_t i = 0; i < o.mc_samples; ++i) {
                        auto v = gaussian_vector(d, rng);
                        if (std::abs(v[0]) / norm(v) >= std::cos(th)) ++inside;
                    }
                    const double frac =
                        static_cast<double>(inside) / static_cast<double>(o.mc_samples);
                    os << ',' << frac << ','
                       << std::sqrt(frac * (1 - frac) / static_cast<double>(o.mc_samples));
                }
                os << '\n';
            }
        }
    }
    if (o.error_region) {
        os << "metric,d,D,epsilon,alpha_deg,error_region_ratio";
        if (o.mc_check) os << ",mc_ratio,mc_std_error";
        os << '\n';
        for (double deg : o.alpha_deg) {
            GeometryParams p;
            p.intrinsic_dim = o.d;
            p.ambient_dim = o.ambient_dim;
            p.epsilon = o.epsilon;
            p.alpha = deg * kDegToRad;
            os << "error_region," << o.d << ',' << o.ambient_dim << ',' << o.epsilon << ','
               << deg << ',' << error_region_ratio(p);
            if (o.mc_check) {
                auto mc = hypercylinder_mc(p, o.mc_samples, rng);
                os << ',' << mc.ratio << ',' << mc.std_error;
            }
            os << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"angle-tree benchmark driver"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset file");
    cmd_gen->add_option("--kind", gen.kind, "sphere|flat|sin3d|hypercylinder")->required();
    cmd_gen->add_option("--n", gen.n, "point count");
    cmd_gen->add_option("--D", gen.ambient_dim, "ambient dimension");
    cmd_gen->add_option("--d", gen.intrinsic_dim, "intrinsic dimension");
    cmd_gen->add_option("--noise", gen.noise, "Gaussian noise sigma (sphere, flat)");
    cmd_gen->add_option("--epsilon", gen.epsilon, "noise fraction (hypercylinder)");
    cmd_gen->add_option("--seed", gen.seed, "rng seed");
    cmd_gen->add_option("--out", gen.out, "output path")->required();
    cmd_gen->add_option("--format", gen.format, "bin|csv (default bin)");

    BuildOptions build;
    auto* cmd_build = app.add_subcommand("build", "build an angle tree; emits an E1 report row");
    cmd_build->add_option("--data", build.data_path, "dataset file")->required();
    cmd_build->add_option("--data-format", build.data_format, "bin|csv (default bin)");
    cmd_build->add_option("--tree", build.tree_type, "kd|rp (default rp)");
    cmd_build->add_option("--min-size", build.min_size, "leaf capacity (default 50)");
    cmd_build->add_option("--k-samples", build.k_samples,
                          "random vectors per node for the dihedral estimate (default 2000)");
    cmd_build->add_option("--iout", build.iout, "ignore-outlier fraction (default 0.1)");
    cmd_build->add_option("--max-depth", build.max_depth, "depth cap, 0 = unlimited");
    cmd_build->add_option("--seed", build.seed, "rng seed");
    cmd_build->add_option("--out", build.out, "tree blob path")->required();
    cmd_build->add_option("--report", build.report, "report CSV path, '-' = stdout");

    QueryOptions query;
    auto* cmd_query = app.add_subcommand("query", "run k-NN queries; emits an E2/E3 report");
    cmd_query->add_option("--data", query.data_path, "dataset file")->required();
    cmd_query->add_option("--data-format", query.data_format, "bin|csv (default bin)");
    cmd_query->add_option("--tree", query.tree_path, "tree blob path")->required();
    cmd_query->add_option("--knn", query.knn, "neighbors per query (default 1)");
    cmd_query->add_option("--theta", query.theta_deg, "error angle in degrees (default 0)");
    cmd_query->add_flag("--force-kd-bound", query.force_kd_bound,
                        "use the classic kd pruning bound");
    cmd_query->add_flag("--exclude-self", query.exclude_self,
                        "drop the query point from candidacy");
    cmd_query->add_option("--n-queries", query.n_queries,
                          "dataset points sampled as queries (default 200)");
    cmd_query->add_option("--seed", query.seed, "rng seed for query sampling");
    cmd_query->add_option("--out", query.out, "CSV path, '-' = stdout");

    LshOptions lsh;
    auto* cmd_lsh = app.add_subcommand(
        "lsh-emulate", "near-neighbor probes over t rp-trees, per-tree p and projection");
    cmd_lsh->add_option("--data", lsh.data_path, "dataset file")->required();
    cmd_lsh->add_option("--data-format", lsh.data_format, "bin|csv (default bin)");
    cmd_lsh->add_option("--trees", lsh.trees, "number of trees t (default 3)");
    cmd_lsh->add_option("--max-depth", lsh.max_depth, "levels per tree (default 9)");
    cmd_lsh->add_option("--min-size", lsh.min_size, "leaf capacity (default 0)");
    cmd_lsh->add_option("--n-queries", lsh.n_queries, "queries (default 200)");
    cmd_lsh->add_option("--seed", lsh.seed, "rng seed");
    cmd_lsh->add_option("--out", lsh.out, "CSV path, '-' = stdout");

    AnalyzeOptions analyze;
    auto* cmd_analyze =
        app.add_subcommand("analyze", "closed-form surfaces with optional MC cross-check");
    cmd_analyze->add_flag("--miss-prob", analyze.miss_prob,
                          "grid miss probability over d and theta");
    cmd_analyze->add_flag("--error-region", analyze.error_region,
                          "grid error-region ratio over alpha");
    cmd_analyze->add_option("--k", analyze.k, "random vector count (default 2000)");
    cmd_analyze->add_option("--theta", analyze.theta_deg,
                            "theta grid in degrees (default 15 30 45)");
    cmd_analyze->add_option("--d-max", analyze.d_max, "largest d for the miss grid");
    cmd_analyze->add_option("--d", analyze.d, "intrinsic dimension for the error region");
    cmd_analyze->add_option("--D", analyze.ambient_dim, "ambient dimension");
    cmd_analyze->add_option("--epsilon", analyze.epsilon, "noise fraction");
    cmd_analyze->add_option("--alpha", analyze.alpha_deg, "alpha grid in degrees");
    cmd_analyze->add_flag("--mc-check", analyze.mc_check, "append Monte Carlo columns");
    cmd_analyze->add_option("--mc-samples", analyze.mc_samples, "MC sample count");
    cmd_analyze->add_option("--seed", analyze.seed, "rng seed");
    cmd_analyze->add_option("--out", analyze.out, "CSV path, '-' = stdout");

    try {
        app.parse(argc, argv);
        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_build->parsed()) return run_build(build);
        if (cmd_query->parsed()) return run_query(query);
        if (cmd_lsh->parsed()) return run_lsh(lsh);
        if (cmd_analyze->parsed()) return run_analyze(analyze);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
