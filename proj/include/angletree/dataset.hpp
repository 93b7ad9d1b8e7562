#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace angletree {

/// Immutable N x D row-major matrix of coordinates.
struct Dataset {
    std::vector<double> coords;  // n * dim entries, row major
    std::size_t n = 0;
    std::size_t dim = 0;
    std::string name;

    std::span<const double> row(std::size_t i) const {
        return {coords.data() + i * dim, dim};
    }
};

using Rng = std::mt19937_64;

inline std::vector<double> gaussian_vector(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = gauss(rng);
    return v;
}

/// Uniform point in the dim-ball of the given radius.
/// Gaussian direction times radius * U^(1/dim); rejection free.
inline std::vector<double> sample_ball(std::size_t dim, double radius, Rng& rng) {
    std::vector<double> v = gaussian_vector(dim, rng);
    const double nv = norm(v);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
    const double scale = nv > 0.0 ? r / nv : 0.0;
    for (auto& x : v) x *= scale;
    return v;
}

/// Seeded random orthonormal map: `cols` orthonormal columns in ambient
/// dimension `ambient`, as a column-major list. Modified Gram-Schmidt with
/// one re-orthogonalization pass keeps columns orthogonal to ~1e-15.
inline std::vector<std::vector<double>> orthonormal_columns(std::size_t ambient,
                                                            std::size_t cols, Rng& rng) {
    if (cols > ambient) throw std::invalid_argument("orthonormal_columns: cols > ambient");
    std::vector<std::vector<double>> basis;
    basis.reserve(cols);
    while (basis.size() < cols) {
        std::vector<double> v = gaussian_vector(ambient, rng);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                const double c = dot(v, b);
                for (std::size_t i = 0; i < ambient; ++i) v[i] -= c * b[i];
            }
        }
        const double nv = norm(v);
        if (nv < 1e-8) continue;  // rare near-dependence, redraw
        for (auto& x : v) x /= nv;
        basis.push_back(std::move(v));
    }
    return basis;
}

/// n points uniform on the unit d-sphere in R^(d+1), embedded into R^D by a
/// seeded orthonormal map, plus isotropic Gaussian noise of scale noise_sigma.
inline Dataset gen_sphere(std::size_t n, std::size_t d, std::size_t ambient_dim,
                          double noise_sigma, std::uint64_t seed) {
    if (d + 1 > ambient_dim) throw std::invalid_argument("gen_sphere: need d+1 <= D");
    if (n == 0) throw std::invalid_argument("gen_sphere: n must be >= 1");
    // the embedding map draws from its own stream so the intrinsic point
    // cloud depends only on (n, d, seed), not on the ambient dimension
    Rng rng(seed);
    Rng basis_rng(seed ^ 0x5851f42d4c957f2dull);
    const auto basis = orthonormal_columns(ambient_dim, d + 1, basis_rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset out;
    out.n = n;
    out.dim = ambient_dim;
    out.name = "sphere";
    out.coords.assign(n * ambient_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> s = gaussian_vector(d + 1, rng);
        const double ns = norm(s);
        for (auto& x : s) x /= ns;
        double* row = out.coords.data() + i * ambient_dim;
        for (std::size_t j = 0; j <= d; ++j)
            for (std::size_t a = 0; a < ambient_dim; ++a) row[a] += s[j] * basis[j][a];
        if (noise_sigma > 0.0)
            for (std::size_t a = 0; a < ambient_dim; ++a) row[a] += noise_sigma * gauss(rng);
    }
    return out;
}

/// Uniform points in a d-cube mapped by a seeded orthonormal map plus offset.
inline Dataset gen_affine_flat(std::size_t n, std::size_t d, std::size_t ambient_dim,
                               double noise_sigma, std::uint64_t seed) {
    if (d > ambient_dim) throw std::invalid_argument("gen_affine_flat: need d <= D");
    if (n == 0) throw std::invalid_argument("gen_affine_flat: n must be >= 1");
    Rng rng(seed);
    const auto basis = orthonormal_columns(ambient_dim, d, rng);
    std::vector<double> offset = gaussian_vector(ambient_dim, rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset out;
    out.n = n;
    out.dim = ambient_dim;
    out.name = "affine_flat";
    out.coords.assign(n * ambient_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.coords.data() + i * ambient_dim;
        for (std::size_t a = 0; a < ambient_dim; ++a) row[a] = offset[a];
        for (std::size_t j = 0; j < d; ++j) {
            const double c = unif(rng);
            for (std::size_t a = 0; a < ambient_dim; ++a) row[a] += c * basis[j][a];
        }
        if (noise_sigma > 0.0)
            for (std::size_t a = 0; a < ambient_dim; ++a) row[a] += noise_sigma * gauss(rng);
    }
    return out;
}

/// Reconstruction of the low-dimensional surface example:
/// (x, y, sin x + cos y) with (x, y) uniform on [0, 2pi]^2.
inline Dataset gen_sin3d(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("gen_sin3d: n must be >= 1");
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
    Dataset out;
    out.n = n;
    out.dim = 3;
    out.name = "sin3d";
    out.coords.resize(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = unif(rng);
        const double y = unif(rng);
        out.coords[i * 3 + 0] = x;
        out.coords[i * 3 + 1] = y;
        out.coords[i * 3 + 2] = std::sin(x) + std::cos(y);
    }
    return out;
}

/// Points (u, w) with u uniform in the d-ball of radius a and w uniform in
/// the (D-d)-ball of radius b, axis aligned to the first d coordinates.
/// a = sqrt(3/d), b = sqrt(3 eps/(D-d)).
inline Dataset gen_hypercylinder(std::size_t n, std::size_t d, std::size_t ambient_dim,
                                 double epsilon, std::uint64_t seed) {
    if (d >= ambient_dim) throw std::invalid_argument("gen_hypercylinder: need d < D");
    if (n == 0) throw std::invalid_argument("gen_hypercylinder: n must be >= 1");
    const double a = std::sqrt(3.0 / static_cast<double>(d));
    const double b = std::sqrt(3.0 * epsilon / static_cast<double>(ambient_dim - d));
    Rng rng(seed);
    Dataset out;
    out.n = n;
    out.dim = ambient_dim;
    out.name = "hypercylinder";
    out.coords.resize(n * ambient_dim);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.coords.data() + i * ambient_dim;
        const auto u = sample_ball(d, a, rng);
        for (std::size_t j = 0; j < d; ++j) row[j] = u[j];
        if (b > 0.0) {
            const auto w = sample_ball(ambient_dim - d, b, rng);
            for (std::size_t j = d; j < ambient_dim; ++j) row[j] = w[j - d];
        } else {
            for (std::size_t j = d; j < ambient_dim; ++j) row[j] = 0.0;
        }
    }
    return out;
}

enum class FileFormat { csv, bin };

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("unexpected end of file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline void save_dataset(const Dataset& data, const std::string& path, FileFormat format) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    if (format == FileFormat::bin) {
        os.write("ATDS", 4);
        detail::put_u32(os, 1u);
        detail::put_u32(os, static_cast<std::uint32_t>(data.n));
        detail::put_u32(os, static_cast<std::uint32_t>(data.dim));
        static_assert(sizeof(double) == 8);
        os.write(reinterpret_cast<const char*>(data.coords.data()),
                 static_cast<std::streamsize>(data.coords.size() * sizeof(double)));
    } else {
        os << "# D=" << data.dim << "\n";
        os.precision(17);
        for (std::size_t i = 0; i < data.n; ++i) {
            for (std::size_t j = 0; j < data.dim; ++j) {
                if (j) os << ',';
                os << data.coords[i * data.dim + j];
            }
            os << '\n';
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path, FileFormat format) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    Dataset out;
    out.name = path;
    if (format == FileFormat::bin) {
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, "ATDS", 4) != 0)
            throw std::runtime_error(path + ": bad magic, not an ATDS file");
        const std::uint32_t version = detail::get_u32(is);
        if (version != 1) throw std::runtime_error(path + ": unsupported ATDS version");
        out.n = detail::get_u32(is);
        out.dim = detail::get_u32(is);
        if (out.n == 0 || out.dim == 0) throw std::runtime_error(path + ": empty dataset");
        out.coords.resize(out.n * out.dim);
        is.read(reinterpret_cast<char*>(out.coords.data()),
                static_cast<std::streamsize>(out.coords.size() * sizeof(double)));
        if (!is) throw std::runtime_error(path + ": truncated coordinate block");
    } else {
        std::string line;
        std::size_t row_no = 0;
        std::size_t expect_cols = 0;
        while (std::getline(is, line)) {
            ++row_no;
            if (line.empty()) continue;
            if (line[0] == '#') {
                const auto pos = line.find("D=");
                if (pos != std::string::npos) expect_cols = std::stoul(line.substr(pos + 2));
                continue;
            }
            std::vector<double> vals;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                std::size_t used = 0;
                double v;
                try {
                    v = std::stod(cell, &used);
                } catch (const std::exception&) {
                    throw std::runtime_error(path + ": row " + std::to_string(row_no) +
                                             ", column " + std::to_string(vals.size() + 1) +
                                             ": not a number: '" + cell + "'");
                }
                if (!std::isfinite(v))
                    throw std::runtime_error(path + ": row " + std::to_string(row_no) +
                                             ", column " + std::to_string(vals.size() + 1) +
                                             ": non-finite value");
                vals.push_back(v);
            }
            if (out.dim == 0) {
                out.dim = expect_cols ? expect_cols : vals.size();
            }
            if (vals.size() != out.dim)
                throw std::runtime_error(path + ": row " + std::to_string(row_no) + " has " +
                                         std::to_string(vals.size()) + " columns, expected " +
                                         std::to_string(out.dim));
            out.coords.insert(out.coords.end(), vals.begin(), vals.end());
            ++out.n;
        }
        if (out.n == 0) throw std::runtime_error(path + ": empty dataset file");
    }
    for (double v : out.coords)
        if (!std::isfinite(v)) throw std::runtime_error(path + ": non-finite coordinate");
    return out;
}

}  // namespace angletree
