#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace angletree {

using Vector = std::vector<double>;

/// Per-query operation counters. Distance evaluations, splitter
/// projections and angle computations all cost one O(D) dot product,
/// so total() is the hardware-independent cost of a query or build.
struct CountedMetric {
    std::uint64_t distance_evals = 0;
    std::uint64_t projection_evals = 0;
    std::uint64_t angle_evals = 0;

    std::uint64_t total() const { return distance_evals + projection_evals + angle_evals; }

    void reset() { distance_evals = projection_evals = angle_evals = 0; }

    CountedMetric& operator+=(const CountedMetric& o) {
        distance_evals += o.distance_evals;
        projection_evals += o.projection_evals;
        angle_evals += o.angle_evals;
        return *this;
    }
};

/// Affine hyperplane of codimension 1: {x : x . normal == threshold}.
/// The normal is stored unit length.
struct Splitter {
    Vector normal;
    double threshold = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> v) { return dot(v, v); }

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

inline double euclidean_distance(std::span<const double> a, std::span<const double> b,
                                 CountedMetric& m) {
    if (a.size() != b.size()) throw std::invalid_argument("euclidean_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    ++m.distance_evals;
    return std::sqrt(s);
}

/// Angle between a vector and a hyperplane normal, folded into [0, pi/2].
/// The absolute value folds antiparallel vectors: a vector close to -n is
/// as good as one close to n.
inline double angle_to_normal(std::span<const double> v, std::span<const double> n) {
    if (v.size() != n.size()) throw std::invalid_argument("angle_to_normal: dimension mismatch");
    const double nv = norm(v);
    const double nn = norm(n);
    if (nv == 0.0 || nn == 0.0) throw std::invalid_argument("angle_to_normal: zero-norm vector");
    double c = std::abs(dot(v, n)) / (nv * nn);
    if (c > 1.0) c = 1.0;
    return std::acos(c);
}

/// Signed perpendicular offset of q from the splitter hyperplane.
/// |result| is dist(q, splitter) because the normal is unit length.
inline double signed_margin(std::span<const double> q, const Splitter& s, CountedMetric& m) {
    if (q.size() != s.normal.size()) throw std::invalid_argument("signed_margin: dimension mismatch");
    ++m.projection_evals;
    return dot(q, s.normal) - s.threshold;
}

}  // namespace angletree
