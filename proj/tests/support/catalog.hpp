#pragma once
// Shared fixtures: the convex catalog used by the property suites and a few
// brute-force oracles that stay independent of the library's code paths.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oblique/convex.hpp"

namespace oblique::testing {

struct NamedConvex {
    std::string name;
    ConvexFunction phi;
    bool minimum_at_origin;  // phi >= phi(0) = 0 holds
};

inline Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline Mat mat2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

inline Set triangle() {
    return Set::halfspace_intersection(2, {{vec({-1, 0}), 0.0}, {vec({0, -1}), 0.0}, {vec({1, 1}), 1.0}});
}

inline Set halfline() { return Set::halfspace_intersection(1, {{vec({-1}), 0.0}}); }

inline std::vector<NamedConvex> convex_catalog() {
    std::vector<NamedConvex> out;
    out.push_back({"indicator box [0,1]^2", ConvexFunction::indicator(Set::box(vec({0, 0}), vec({1, 1}))), true});
    out.push_back({"indicator ball(0,1)", ConvexFunction::indicator(Set::ball(vec({0, 0}), 1.0)), true});
    out.push_back({"indicator triangle", ConvexFunction::indicator(triangle()), true});
    out.push_back({"indicator half-line", ConvexFunction::indicator(halfline()), true});
    out.push_back({"indicator box [-1,1]^3", ConvexFunction::indicator(Set::box(Vec::Constant(3, -1), Vec::Constant(3, 1))), true});
    out.push_back({"half |x|^2 + ball",
                   ConvexFunction::quadratic_plus_indicator(Mat::Identity(2, 2), Vec::Zero(2), Set::ball(vec({0, 0}), 1.0)),
                   true});
    out.push_back({"anisotropic quadratic + box",
                   ConvexFunction::quadratic_plus_indicator(mat2(2, 0.5, 0.5, 1), Vec::Zero(2),
                                                            Set::box(vec({-1, -1}), vec({1, 1}))),
                   true});
    out.push_back({"anisotropic quadratic + triangle",
                   ConvexFunction::quadratic_plus_indicator(mat2(2, 0.5, 0.5, 1), vec({0.3, -0.2}), triangle()), false});
    out.push_back({"anisotropic quadratic on R^2",
                   ConvexFunction::quadratic_plus_indicator(mat2(2, 0.5, 0.5, 1), Vec::Zero(2), Set::whole_space(2)), true});
    out.push_back({"affine + box", ConvexFunction::lipschitz_affine_plus_indicator(vec({1, 0}), 0.0,
                                                                                  Set::box(vec({0, -1}), vec({1, 1}))),
                   true});
    out.push_back({"affine + ball", ConvexFunction::lipschitz_affine_plus_indicator(vec({0.5, -1}), 2.0,
                                                                                   Set::ball(vec({0.5, 0.5}), 1.5)),
                   false});
    return out;
}

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    Vec cube(int d, double half) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v(i) = uniform(-half, half);
        return v;
    }
    Vec in_domain(const ConvexFunction& phi, double half) { return phi.project_domain(cube(phi.dim(), half)); }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Brute-force 1-D minimisation of fn over [lo, hi] on a uniform grid,
/// followed by a local grid refinement around the best node.
template <class Fn>
double brute_min_1d(Fn fn, double lo, double hi, int points = 200'001) {
    double best_x = lo, best = fn(lo);
    for (int round = 0; round < 3; ++round) {
        const double step = (hi - lo) / (points - 1);
        for (int i = 0; i < points; ++i) {
            const double x = lo + step * i;
            const double v = fn(x);
            if (v < best) {
                best = v;
                best_x = x;
            }
        }
        lo = best_x - 2 * step;
        hi = best_x + 2 * step;
    }
    return best;
}

/// Projection onto a polyhedron by enumerating every active set of size <= d
/// and keeping the feasible KKT point closest to x. Exponential, test-only.
inline Vec enumerate_polyhedron_projection(const std::vector<Halfspace>& hs, const Vec& x) {
    const auto m = hs.size();
    const auto d = static_cast<std::size_t>(x.size());
    Vec best = x;
    double best_dist = std::numeric_limits<double>::infinity();
    auto feasible = [&](const Vec& z) {
        for (const auto& h : hs)
            if (h.normal.dot(z) - h.offset > 1e-12) return false;
        return true;
    };
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        std::vector<std::size_t> act;
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1ULL << i)) act.push_back(i);
        if (act.size() > d) continue;
        Vec z = x;
        if (!act.empty()) {
            Mat n(static_cast<Eigen::Index>(act.size()), x.size());
            Vec r(n.rows());
            for (Eigen::Index i = 0; i < n.rows(); ++i) {
                n.row(i) = hs[act[static_cast<std::size_t>(i)]].normal.transpose();
                r(i) = hs[act[static_cast<std::size_t>(i)]].normal.dot(x) - hs[act[static_cast<std::size_t>(i)]].offset;
            }
            const Mat g = n * n.transpose();
            if (std::abs(g.determinant()) < 1e-12) continue;
            z = x - n.transpose() * g.inverse() * r;
        }
        if (!feasible(z)) continue;
        const double dist = (z - x).norm();
        if (dist < best_dist) {
            best_dist = dist;
            best = z;
        }
    }
    return best;
}

}  // namespace oblique::testing
