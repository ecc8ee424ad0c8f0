#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oblique/linalg.hpp"

namespace oblique {

/// Halfspace {z : <normal, z> <= offset}.
struct Halfspace {
    Vec normal;
    double offset = 0.0;
};

/// Tolerance and budget for the iterative projection onto polyhedra
/// and for the projected-gradient prox of quadratic kinds.
inline constexpr double kInnerTolerance = 1e-12;
inline constexpr int kInnerIterationCap = 10'000;

/// Slack used when deciding membership of points produced by projections.
inline constexpr double kMembershipSlack = 1e-10;

/// Closed convex set from the catalog: polyhedron, box or ball.
class Set {
public:
    enum class Kind { halfspace_intersection, box, ball };

    static Set halfspace_intersection(int dim, std::vector<Halfspace> halfspaces);
    static Set box(Vec lo, Vec hi);
    static Set ball(Vec center, double radius);
    /// All of R^d (a halfspace intersection with no constraints).
    static Set whole_space(int dim) { return halfspace_intersection(dim, {}); }

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    bool bounded() const noexcept { return kind_ != Kind::halfspace_intersection; }

    const std::vector<Halfspace>& halfspaces() const noexcept { return halfspaces_; }
    const Vec& lo() const noexcept { return lo_; }
    const Vec& hi() const noexcept { return hi_; }
    const Vec& center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }

    /// Membership with an absolute slack scaled by (1 + |x|).
    bool contains(const Vec& x, double slack = kMembershipSlack) const;

    /// Euclidean projection. Polyhedra with more than two constraints use
    /// Dykstra's alternating projections; throws ProjectionError when the
    /// tolerance is not met within the iteration cap.
    Vec project(const Vec& x) const;

    double distance(const Vec& x) const { return (x - project(x)).norm(); }

    /// The r-interior {z : dist(z, complement) >= r}, which for this catalog is
    /// again a catalog set. Throws InvalidArgument when it is empty.
    Set shrink(double r) const;

    /// Largest |z| over the set; nullopt when unbounded.
    std::optional<double> max_norm() const;

    /// A point of the set (centre for box/ball, projection of 0 for polyhedra).
    Vec witness() const;

    /// Canonical text form, used for system identity tags.
    std::string describe() const;

private:
    Set(Kind kind, int dim) : kind_(kind), dim_(dim) {}

    Vec project_polyhedron(const Vec& x) const;

    Kind kind_;
    int dim_;
    std::vector<Halfspace> halfspaces_;
    Vec lo_, hi_;
    Vec center_;
    double radius_ = 0.0;
};

/// Proper l.s.c. convex phi = phi_1 + I_D from the catalog. The Moreau-Yosida
/// machinery below is exact up to the inner tolerance.
class ConvexFunction {
public:
    enum class Kind { indicator, quadratic_plus_indicator, lipschitz_affine_plus_indicator };

    static ConvexFunction indicator(Set domain);
    /// 1/2 <A z, z> + <q, z> + I_D(z), with A symmetric positive semidefinite.
    static ConvexFunction quadratic_plus_indicator(Mat a, Vec q, Set domain);
    /// <a, z> + beta + I_D(z).
    static ConvexFunction lipschitz_affine_plus_indicator(Vec a, double beta, Set domain);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return domain_.dim(); }
    const Set& domain() const noexcept { return domain_; }
    const Mat& quadratic() const noexcept { return a_; }
    const Vec& linear() const noexcept { return q_; }
    double constant() const noexcept { return beta_; }
    /// Largest eigenvalue of A (zero for the other kinds).
    double lambda_max() const noexcept { return lambda_max_; }

    /// The L of the growth condition |phi(x) - phi(y)| <= L + L|x - y| on D.
    /// Zero for indicators, |a| for the affine kind, and ||A|| max|z| + |q| for
    /// the quadratic kind (infinite on unbounded domains).
    double lipschitz_L() const noexcept { return lipschitz_; }

    /// phi(x); +infinity outside the domain.
    double eval(const Vec& x) const;

    Vec project_domain(const Vec& x) const { return domain_.project(x); }

    /// J_eps x = argmin_z |z - x|^2 / (2 eps) + phi(z).
    Vec resolvent(double eps, const Vec& x) const;

    /// (x - J_eps x) / eps.
    Vec yosida_gradient(double eps, const Vec& x) const;

    /// phi_eps(x) = |x - J_eps x|^2 / (2 eps) + phi(J_eps x).
    double moreau_envelope(double eps, const Vec& x) const;

    std::string describe() const;

private:
    ConvexFunction(Kind kind, Set domain) : kind_(kind), domain_(std::move(domain)) {}

    double smooth_part(const Vec& x) const;
    Vec constrained_quadratic_prox(double eps, const Vec& x) const;

    Kind kind_;
    Set domain_;
    Mat a_;
    Vec q_;
    double beta_ = 0.0;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
    bool scalar_quadratic_ = false;
    double lipschitz_ = 0.0;
};

/// Uniform interiority constants of the domain and the step bounds derived
/// from them together with the field constants b, c.
struct DomainGeometry {
    double r0 = 0.0;
    double h0 = 0.0;
    double rho0 = 0.0;    // r0 / (2 (1 + r0 + h0))
    double delta0 = 0.0;  // min(rho0 / (2 b c), rho0)
};

DomainGeometry make_geometry(double r0, double h0, double b, double c);

struct GeometryReport {
    bool pass = false;
    double r0 = 0.0;
    double h0 = 0.0;          // computed (bounded sets) or declared
    bool h0_computed = false;
    double probe_max_distance = 0.0;  // largest dist(z, D_r0) seen on the probe cloud
    int probes = 0;
    Vec interior_witness;
    std::string message;
};

/// Checks that D_r0 is nonempty and that h0 = sup_{z in D} dist(z, D_r0) is
/// finite. For bounded sets h0 is computed in closed form; for polyhedra the
/// declared value is spot-checked on a probe cloud of `probes` points.
GeometryReport check_geometry(const Set& domain, double r0, std::optional<double> declared_h0,
                              int probes = 1'000, std::uint64_t seed = 0x5eed);

}  // namespace oblique
