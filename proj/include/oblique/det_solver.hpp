#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "oblique/convex.hpp"
#include "oblique/errors.hpp"
#include "oblique/oblique_field.hpp"
#include "oblique/paths.hpp"

namespace oblique {

/// Scalar time profile p(t) = offset + amplitude sin(omega t).
struct TimeProfile {
    double offset = 1.0;
    double amplitude = 0.0;
    double omega = 0.0;

    double operator()(double t) const;
    double sup_abs() const { return std::abs(offset) + std::abs(amplitude); }
};

/// Drift f(t, x) from the catalog, with its bound profile f#(t) over the
/// domain and Lipschitz modulus mu(t).
class DriftSpec {
public:
    enum class Kind { zero, constant, affine, time_modulated };

    static DriftSpec zero(int dim);
    static DriftSpec constant(Vec value);
    /// f(t, x) = A x + b0.
    static DriftSpec affine(Mat a, Vec b0);
    /// f(t, x) = p(t) (A x + b0).
    static DriftSpec time_modulated(Mat a, Vec b0, TimeProfile profile);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return static_cast<int>(b0_.size()); }

    Vec eval(double t, const Vec& x) const;
    /// mu(t) = |p(t)| ||A||.
    double lipschitz(double t) const;
    /// f#(t) = sup_{x in D} |f(t, x)|, bounded by |p(t)| (||A|| max|z| + |b0|);
    /// infinite when A != 0 and D is unbounded.
    double bound(double t, const Set& domain) const;

    std::string describe() const;

private:
    DriftSpec(Kind kind, Mat a, Vec b0) : kind_(kind), a_(std::move(a)), b0_(std::move(b0)) {}

    Kind kind_;
    Mat a_;
    Vec b0_;
    TimeProfile profile_;
    double a_norm_ = 0.0;
};

/// Spot-checks |f(t, x)| <= f#(t) on probe points of D at the given times.
/// Returns an empty string on success, otherwise a description of the violation.
std::string check_drift_bound(const DriftSpec& f, const Set& domain, const std::vector<double>& times,
                              const std::vector<Vec>& probes);

/// int_0^T mu(t) dt by the rectangle rule on the given grid.
double drift_lipschitz_integral(const DriftSpec& f, double horizon, double dt);

struct PenalizedConfig {
    double eps = 0.0;          // penalization parameter and input delay
    int substep_ratio = 10;    // inner step h = eps / (substep_ratio c) or finer
    double horizon = 0.0;      // T
    double guard_radius = 1e6; // |x| beyond this raises StabilityBreach
};

struct SolutionDiagnostics {
    double feasibility_defect = 0.0;    // max_t dist(x(t), D)
    double max_penalty_gradient = 0.0;  // max_t |grad phi_eps(x(t))|
    double identity_residual = 0.0;     // max_t |x + int H dk - x0 - input|
    std::size_t substeps = 1;           // inner steps per input grid cell
};

/// Paired paths (x, k) on the solver's time grid plus run metadata.
/// For penalized solutions the grid is the inner-step grid, which refines
/// the input grid by `stride`; node i of the input grid is node i*stride here.
struct SkorohodSolution {
    SampledPath x;
    SampledPath k;
    double eps = 0.0;  // 0 for closed-form solutions
    std::size_t stride = 1;
    double tv_k = 0.0;
    std::vector<RefinementLevel> refinement_history;
    SolutionDiagnostics diagnostics;
    std::string system;  // identity of the (phi, H) pair

    /// Number of input-grid cells.
    std::size_t coarse_steps() const noexcept { return x.steps() / stride; }
    Vec x_coarse(std::size_t i) const { return x.node(i * stride); }
    Vec k_coarse(std::size_t i) const { return k.node(i * stride); }
};

std::string system_tag(const ConvexFunction& phi, const ObliqueField& h);

/// Increment of the (delayed) input over grid cell j, given read access to
/// the input-grid states computed so far (columns 0..current).
using DelayedIncrement = std::function<Vec(std::size_t j, const Mat& coarse_states)>;

/// Explicit Euler integration of the penalized delayed equation
///   x(t) + int_0^t H(x) grad phi_eps(x) ds = x0 + (input read eps earlier),
/// driven cell by cell. The input over cell i is `increment(i - e)` with
/// e = eps / dt, zero for i < e. k is accumulated with the same rectangle rule.
SkorohodSolution run_penalized(const ConvexFunction& phi, const ObliqueField& h, const Vec& x0, double dt,
                               std::size_t steps, const PenalizedConfig& cfg, const DelayedIncrement& increment);

/// Penalized approximation for a C^1 input m (its cell increments stand in for m').
/// Throws GridMismatch when eps or the horizon are not multiples of m.dt().
SkorohodSolution solve_penalized(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                 const SampledPath& m, const Vec& x0, const PenalizedConfig& cfg);

struct SkorohodOptions {
    double tol = 1e-3;
    double eps0 = std::numeric_limits<double>::quiet_NaN();  // NaN: 0.1 T
    int max_halvings = 10;
    int substep_ratio = 10;
    double guard_radius = 1e6;
    double horizon = std::numeric_limits<double>::quiet_NaN();  // NaN: the input's horizon
};

/// Mollify-then-penalize ladder eps0, eps0/2, ... (each snapped up to a grid
/// multiple) until two consecutive solutions differ by at most tol at the
/// input-grid nodes. With max_halvings = 0 a single level is returned.
/// Throws NoConvergence (carrying the history) otherwise.
SkorohodSolution solve_skorohod(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                const SampledPath& m, const Vec& x0, const SkorohodOptions& opts = {});

/// Runs every level of the ladder regardless of tol and returns the finest
/// solution with the full history (used to measure convergence rates).
SkorohodSolution refinement_ladder(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                   const SampledPath& m, const Vec& x0, const SkorohodOptions& opts = {});

/// The snapped eps ladder used by solve_skorohod.
std::vector<double> eps_ladder(double eps0, int max_halvings, double dt);

/// sup over shared input-grid nodes of |x_a - x_b|; both solutions must
/// sit on the same input grid (their strides may differ).
double coarse_sup_gap(const SkorohodSolution& a, const SkorohodSolution& b);

/// Closed-form reflection on [0, inf) with constant scalar H = h:
/// x = x0 + m + h l, l(t) = max(0, -min_{s<=t}(x0 + m(s))) / h, k = -l.
SkorohodSolution oracle_halfline(double h, double x0, const SampledPath& m);

struct StabilityGap {
    double sup_gap = 0.0;
    double tv_gap_m = 0.0;  // total variation of m1 - m2
    double V = 0.0;         // TV(x1) + TV(x2) + TV(k1) + TV(k2) + int mu
};

StabilityGap stability_gap(const SkorohodSolution& s1, const SkorohodSolution& s2, const SampledPath& m1,
                           const SampledPath& m2, double mu_integral = 0.0);

}  // namespace oblique
