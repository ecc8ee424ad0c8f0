#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oblique/det_solver.hpp"

namespace oblique {

// Every checker pairs dk with the state the solver used for that increment:
// the left endpoint for penalized solutions (k grows by h grad phi_eps(x_i))
// and the right endpoint for closed-form reflections, where the push happens
// at the end of the cell. The phi(x) term reads phi at J_eps x (penalized) or
// at the projection of x onto D (closed form), which is where dk lives.

struct ViWindow {
    double s = 0.0;
    double t = 0.0;
};

struct ViOptions {
    std::vector<ViWindow> windows;  // empty: [0, T] and its four quarters
    std::vector<Vec> test_points;   // empty: extreme points of D plus an interior point
    std::optional<Vec> u0;          // interior point for blends; default D's witness
    std::vector<double> thetas = {0.25, 0.5};
};

struct ViReport {
    double residual = 0.0;  // max over windows and test functions
    double tolerance = 0.0; // 1e-4 (1 + tv_k)
    bool pass = false;
    ViWindow worst_window;
    std::string worst_test_fn;
    int evaluations = 0;
};

/// Discrete residual of int <y - x, dk> + int phi(x) - int phi(y) over the
/// given windows, for constant test functions and blends (1 - theta) x + theta u0.
ViReport vi_residual(const SkorohodSolution& sol, const ConvexFunction& phi, const ViOptions& opts = {});

/// The default constant test functions: box corners and centre, ball centre
/// and the points centre +- r e_i, or for polyhedra u0 and the projections of
/// u0 +- 10 e_i.
std::vector<Vec> default_test_points(const Set& domain, const Vec& u0);

/// sum <x1 - x2, dk1 - dk2> over the shared grid. Rejects solutions of
/// different (phi, H) systems and solutions on different grids.
double monotonicity_gap(const SkorohodSolution& a, const SkorohodSolution& b);

struct AnnexBReport {
    double lhs = 0.0;     // r0 TV(k) + int phi(x)
    double rhs = 0.0;     // int <x - u0, dk> + T phi#
    double margin = 0.0;  // rhs - lhs
    double phi_sharp = 0.0;
    double tolerance = 0.0;  // 1e-6 (1 + tv_k)
    bool pass = false;
};

/// Upper bound for phi over the sphere u0 + r0 S^{d-1}: exact for indicators,
/// the affine kind and isotropic quadratics; phi(u0) + r0 |A u0 + q| +
/// r0^2 lambda_max / 2 for anisotropic quadratics.
double phi_sharp(const ConvexFunction& phi, const Vec& u0, double r0);

/// Both sides of r0 TV(k) + int phi(x) <= int <x - u0, dk> + T phi# over [0, T].
/// Throws InvalidArgument unless the ball of radius r0 around u0 lies in D.
AnnexBReport annexB_bound(const SkorohodSolution& sol, const ConvexFunction& phi, const Vec& u0, double r0);

/// Least-squares slope of log(gap) against log(eps). Requires at least three
/// points with strictly decreasing eps; throws on negative or NaN gaps and
/// returns nullopt when some gap is exactly zero (already converged).
std::optional<double> convergence_slope(const std::vector<std::pair<double, double>>& eps_gap);

/// Same, reading the levels of a refinement history that carry a gap.
std::optional<double> convergence_slope(const std::vector<RefinementLevel>& history);

struct AprioriReport {
    double tv_ratio = 0.0;  // tv_k last / previous level
    bool stabilized = false;  // ratio in [0.8, 1.2]
    std::vector<std::pair<double, double>> scaled_family;  // (lambda, tv_k)
    bool monotone_in_scale = true;
};

/// tv_k stabilization across the last two refinement levels and, when a
/// lambda-scaled family of runs is supplied, whether tv_k is nondecreasing in lambda.
AprioriReport apriori_monitor(const std::vector<RefinementLevel>& history,
                              std::vector<std::pair<double, double>> scaled_family = {});

}  // namespace oblique
