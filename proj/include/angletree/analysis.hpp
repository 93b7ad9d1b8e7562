#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "dataset.hpp"

namespace angletree {

/// Parameters of the hypercylinder noise model: data uniform in a d-ball of
/// radius a = sqrt(3/d) crossed with a (D-d)-ball of radius
/// b = sqrt(3 eps/(D-d)).
struct GeometryParams {
    std::size_t ambient_dim = 2;   // D
    std::size_t intrinsic_dim = 1; // d <= D
    double epsilon = 0.0;          // noise fraction, [0, 0.1]
    double alpha = M_PI_2;         // dihedral angle, (0, pi/2]
    double theta = 0.0;            // error angle
    std::size_t k = 2000;          // sample count

    double a() const { return std::sqrt(3.0 / static_cast<double>(intrinsic_dim)); }
    double b() const {
        return std::sqrt(3.0 * epsilon / static_cast<double>(ambient_dim - intrinsic_dim));
    }
};

namespace quad {

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
/// Legendre polynomial roots.
inline void gauss_legendre(std::size_t n, std::vector<double>& nodes,
                           std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

/// Composite 16-point Gauss-Legendre with interval doubling until successive
/// estimates agree to rel_tol.
inline double integrate(const std::function<double(double)>& f, double lo, double hi,
                        double rel_tol) {
    if (lo >= hi) return 0.0;
    static thread_local std::vector<double> nodes, weights;
    if (nodes.empty()) gauss_legendre(16, nodes, weights);
    double prev = 0.0;
    for (std::size_t pieces = 1; pieces <= 4096; pieces *= 2) {
        double sum = 0.0;
        const double w = (hi - lo) / static_cast<double>(pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
            const double a = lo + w * static_cast<double>(p);
            const double c = a + 0.5 * w;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                sum += weights[i] * f(c + 0.5 * w * nodes[i]);
        }
        sum *= 0.5 * w;
        if (pieces > 1 && std::abs(sum - prev) <= rel_tol * std::max(std::abs(sum), 1e-300))
            return sum;
        prev = sum;
    }
    return prev;
}

}  // namespace quad

/// Volume of the dim-ball of the given radius; dim 0 -> 1.
inline double ball_volume(std::size_t dim, double radius) {
    if (radius < 0.0) throw std::invalid_argument("ball_volume: negative radius");
    if (dim == 0) return 1.0;
    if (radius == 0.0) return 0.0;
    const double half = static_cast<double>(dim) / 2.0;
    return std::exp(half * std::log(M_PI) + static_cast<double>(dim) * std::log(radius) -
                    std::lgamma(half + 1.0));
}

/// Volume of a hypersphere cap of the given height, by quadrature of slab
/// slices. The substitution t = r cos(phi) keeps the integrand smooth at the
/// pole.
inline double cap_volume(std::size_t dim, double radius, double height) {
    if (dim == 0) throw std::invalid_argument("cap_volume: dim must be >= 1");
    if (height < -1e-12 || height > 2.0 * radius + 1e-12)
        throw std::invalid_argument("cap_volume: height outside [0, 2r]");
    if (radius == 0.0 || height <= 0.0) return 0.0;
    height = std::min(height, 2.0 * radius);
    if (height > radius) return ball_volume(dim, radius) - cap_volume(dim, radius, 2.0 * radius - height);
    const double phi_max = std::acos((radius - height) / radius);
    const auto integrand = [dim, radius](double phi) {
        const double s = std::sin(phi);
        return ball_volume(dim - 1, radius * s) * radius * s;
    };
    return quad::integrate(integrand, 0.0, phi_max, 1e-10);
}

struct MomentEstimate {
    double mean = 0.0;
    double variance = 0.0;  // sample variance
    std::size_t n = 0;

    double std_error() const { return std::sqrt(variance / static_cast<double>(n)); }
};

/// Monte Carlo moments of sin(alpha) for a random splitter normal against a
/// fixed d-dimensional plane: sin(alpha) = chi_d / chi_D on shared Gaussian
/// draws.
inline MomentEstimate sin_alpha_mc(std::size_t ambient_dim, std::size_t intrinsic_dim,
                                   std::size_t n_samples, Rng& rng) {
    if (intrinsic_dim > ambient_dim)
        throw std::invalid_argument("sin_alpha_mc: d must be <= D");
    if (n_samples == 0) throw std::invalid_argument("sin_alpha_mc: n_samples must be >= 1");
    std::normal_distribution<double> gauss(0.0, 1.0);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double in_plane = 0.0, total = 0.0;
        for (std::size_t i = 0; i < ambient_dim; ++i) {
            const double x = gauss(rng);
            total += x * x;
            if (i < intrinsic_dim) in_plane += x * x;
        }
        const double v = std::sqrt(in_plane / total);
        sum += v;
        sum2 += v * v;
    }
    MomentEstimate out;
    out.n = n_samples;
    out.mean = sum / static_cast<double>(n_samples);
    out.variance = n_samples > 1
                       ? (sum2 - sum * sum / static_cast<double>(n_samples)) /
                             static_cast<double>(n_samples - 1)
                       : 0.0;
    return out;
}

/// Volume fraction of the doubled cone-plus-cap region of half-angle theta in
/// the unit d-ball: the probability that one uniform random vector lands
/// within theta of a fixed direction (or its negation).
inline double segment_ratio(std::size_t intrinsic_dim, double theta) {
    if (intrinsic_dim == 0) throw std::invalid_argument("segment_ratio: d must be >= 1");
    if (theta <= 0.0 || theta > M_PI_2)
        throw std::invalid_argument("segment_ratio: theta must be in (0, pi/2]");
    if (intrinsic_dim == 1) return 1.0;  // both directions of the 1-ball are captured
    const double cone = ball_volume(intrinsic_dim - 1, std::sin(theta)) * std::cos(theta) /
                        static_cast<double>(intrinsic_dim);
    const double cap = cap_volume(intrinsic_dim, 1.0, 1.0 - std::cos(theta));
    return std::min(1.0, 2.0 * (cone + cap) / ball_volume(intrinsic_dim, 1.0));
}

/// Terminating hypergeometric form of the segment ratio, valid for odd d:
/// 2F1(1/2, (1-d)/2; 3/2; cos^2 theta) is a finite polynomial there.
inline double segment_ratio_series(std::size_t intrinsic_dim, double theta) {
    if (intrinsic_dim % 2 == 0)
        throw std::invalid_argument("segment_ratio_series: d must be odd");
    const double d = static_cast<double>(intrinsic_dim);
    const double c = std::cos(theta);
    const double x = c * c;
    // terminating 2F1(1/2, (1-d)/2; 3/2; x)
    double hyp = 0.0, term = 1.0;
    const std::size_t jmax = (intrinsic_dim - 1) / 2;
    for (std::size_t j = 0; j <= jmax; ++j) {
        hyp += term;
        const double jd = static_cast<double>(j);
        term *= (0.5 + jd) * ((1.0 - d) / 2.0 + jd) / (1.5 + jd) * x / (jd + 1.0);
    }
    const double g1 = std::exp(std::lgamma(1.0 + d / 2.0) - std::lgamma((d + 1.0) / 2.0));
    const double g2 = std::exp(std::lgamma(1.0 + d / 2.0) - std::lgamma(1.0 + (d - 1.0) / 2.0));
    const double segment = 2.0 * (0.5 - c * g1 / std::sqrt(M_PI) * hyp);
    const double cap = 2.0 * c * std::pow(std::sin(theta), d - 1.0) * g2 /
                       (d * std::sqrt(M_PI));
    return segment + cap;
}

/// Probability that all k random vectors miss the doubled segment.
inline double miss_probability(std::size_t intrinsic_dim, double theta, std::size_t k) {
    if (k == 0) return 1.0;
    const double s = segment_ratio(intrinsic_dim, theta);
    if (s >= 1.0) return 0.0;
    return std::pow(1.0 - s, static_cast<double>(k));
}

/// Smallest theta on a half-degree grid with miss probability at or below the
/// target; capped at pi/2 when unattainable.
inline double compute_theta(std::size_t intrinsic_dim, std::size_t k, double target_fail_prob) {
    if (target_fail_prob <= 0.0 || target_fail_prob >= 1.0)
        throw std::invalid_argument("compute_theta: target must be in (0, 1)");
    const double step = 0.5 * M_PI / 180.0;
    for (int i = 1; i <= 180; ++i) {
        const double theta = std::min(step * i, M_PI_2);
        if (miss_probability(intrinsic_dim, theta, k) <= target_fail_prob) return theta;
    }
    return M_PI_2;
}

/// Fraction of the hypercylinder volume occupied by the error region of a
/// splitter tilted at dihedral alpha: one-dimensional quadrature over the
/// in-plane axis of (d-1)-ball slices times (D-d)-ball caps, doubled.
inline double error_region_ratio(const GeometryParams& p) {
    if (p.intrinsic_dim >= p.ambient_dim)
        throw std::invalid_argument("error_region_ratio: need d < D");
    if (p.alpha <= 0.0 || p.alpha > M_PI_2)
        throw std::invalid_argument("error_region_ratio: alpha must be in (0, pi/2]");
    if (p.alpha == M_PI_2) return 0.0;
    if (p.epsilon <= 0.0) return 0.0;
    const double a = p.a();
    const double b = p.b();
    const double tan_alpha = std::tan(p.alpha);
    const std::size_t noise_dim = p.ambient_dim - p.intrinsic_dim;
    // The splitter exits through the cylinder side when b/tan(alpha) > a.
    const double lo = std::max(-b / tan_alpha, -a);
    const auto integrand = [&](double z) {
        const double r2 = a * a - z * z;
        if (r2 <= 0.0) return 0.0;
        const double h = std::clamp(b + z * tan_alpha, 0.0, 2.0 * b);
        return ball_volume(p.intrinsic_dim - 1, std::sqrt(r2)) * cap_volume(noise_dim, b, h);
    };
    const double v = 2.0 * quad::integrate(integrand, lo, 0.0, 1e-6);
    return v / (ball_volume(p.intrinsic_dim, a) * ball_volume(noise_dim, b));
}

struct HypercylinderMcResult {
    double ratio = 0.0;      // doubled misclassification fraction
    double std_error = 0.0;  // on the doubled ratio
    double avg_ip_dist2 = 0.0;      // mean squared distance within the IP
    double avg_noise_dist2 = 0.0;   // mean squared distance from the IP
    std::size_t n = 0;
};

/// Monte Carlo oracle for the error-region ratio; also reports the empirical
/// moments the ball model actually attains (the closed-form a, b come from a
/// per-axis box model, so these moments differ from 1 and epsilon).
inline HypercylinderMcResult hypercylinder_mc(const GeometryParams& p, std::size_t n_samples,
                                              Rng& rng) {
    if (p.intrinsic_dim >= p.ambient_dim)
        throw std::invalid_argument("hypercylinder_mc: need d < D");
    if (n_samples == 0) throw std::invalid_argument("hypercylinder_mc: n_samples must be >= 1");
    const double a = p.a();
    const double b = p.b();
    const double tan_alpha = std::tan(p.alpha);
    const std::size_t noise_dim = p.ambient_dim - p.intrinsic_dim;
    std::size_t hits = 0;
    double ip2 = 0.0, noise2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const auto u = sample_ball(p.intrinsic_dim, a, rng);
        const auto w = b > 0.0 ? sample_ball(noise_dim, b, rng)
                               : std::vector<double>(noise_dim, 0.0);
        ip2 += squared_norm(u);
        noise2 += squared_norm(w);
        if (u[0] < 0.0 && w[0] > -u[0] * tan_alpha) ++hits;
    }
    HypercylinderMcResult out;
    out.n = n_samples;
    const double frac = static_cast<double>(hits) / static_cast<double>(n_samples);
    out.ratio = 2.0 * frac;
    out.std_error = 2.0 * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n_samples));
    out.avg_ip_dist2 = ip2 / static_cast<double>(n_samples);
    out.avg_noise_dist2 = noise2 / static_cast<double>(n_samples);
    return out;
}

}  // namespace angletree
