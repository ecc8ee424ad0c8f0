#include "oblique/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oblique/errors.hpp"
#include "oblique/format.hpp"

namespace oblique {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec project_halfspace(const Halfspace& h, const Vec& x) {
    const double viol = h.normal.dot(x) - h.offset;
    if (viol <= 0.0) return x;
    return x - (viol / h.normal.squaredNorm()) * h.normal;
}

// Re-solves the projection exactly on the face Dykstra converged to: project x
// onto the affine hull of the active constraints and keep the result when the
// multipliers are nonnegative and the point is feasible.
Vec polish_on_active_face(const std::vector<Halfspace>& hs, const Vec& x, const Vec& approx) {
    const double scale = 1.0 + approx.norm();
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < hs.size(); ++i)
        if (hs[i].normal.dot(approx) - hs[i].offset >= -1e-9 * scale * hs[i].normal.norm()) active.push_back(i);
    if (active.empty() || active.size() > static_cast<std::size_t>(x.size())) return approx;

    Mat n(static_cast<Eigen::Index>(active.size()), x.size());
    Vec rhs(n.rows());
    for (Eigen::Index r = 0; r < n.rows(); ++r) {
        const auto& h = hs[active[static_cast<std::size_t>(r)]];
        n.row(r) = h.normal.transpose();
        rhs(r) = h.normal.dot(x) - h.offset;
    }
    const Mat gram = n * n.transpose();
    Eigen::FullPivLU<Mat> lu(gram);
    if (lu.rank() < gram.rows()) return approx;
    const Vec lambda = lu.solve(rhs);
    if ((lambda.array() < -1e-12).any()) return approx;
    const Vec z = x - n.transpose() * lambda;
    for (const auto& h : hs)
        if (h.normal.dot(z) - h.offset > 1e-13 * scale * h.normal.norm()) return approx;
    if ((z - approx).norm() > 1e-9 * scale) return approx;
    return z;
}

bool within(const Halfspace& h, const Vec& x, double slack) {
    return h.normal.dot(x) - h.offset <= slack * h.normal.norm();
}

std::string describe_vec(const Vec& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_double(v(i));
    }
    return s + "]";
}

std::string describe_mat(const Mat& m) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) s += ',';
        s += describe_vec(m.row(i).transpose());
    }
    return s + "]";
}

void require_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------
// Set

Set Set::halfspace_intersection(int dim, std::vector<Halfspace> halfspaces) {
    if (dim < 1) throw InvalidArgument("set: dimension must be >= 1");
    for (const auto& h : halfspaces) {
        if (h.normal.size() != dim) throw InvalidArgument("halfspace: normal has wrong dimension");
        require_finite(h.normal, "halfspace normal");
        if (h.normal.norm() == 0.0) throw InvalidArgument("halfspace: zero normal");
        if (!std::isfinite(h.offset)) throw InvalidArgument("halfspace: non-finite offset");
    }
    Set s(Kind::halfspace_intersection, dim);
    s.halfspaces_ = std::move(halfspaces);
    return s;
}

Set Set::box(Vec lo, Vec hi) {
    if (lo.size() < 1 || lo.size() != hi.size()) throw InvalidArgument("box: lo/hi dimension mismatch");
    require_finite(lo, "box lo");
    require_finite(hi, "box hi");
    if ((hi.array() < lo.array()).any()) throw InvalidArgument("box: lo > hi in some coordinate");
    Set s(Kind::box, static_cast<int>(lo.size()));
    s.lo_ = std::move(lo);
    s.hi_ = std::move(hi);
    return s;
}

Set Set::ball(Vec center, double radius) {
    if (center.size() < 1) throw InvalidArgument("ball: empty center");
    require_finite(center, "ball center");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidArgument("ball: radius must be finite and >= 0");
    Set s(Kind::ball, static_cast<int>(center.size()));
    s.center_ = std::move(center);
    s.radius_ = radius;
    return s;
}

bool Set::contains(const Vec& x, double slack) const {
    const double tol = slack * (1.0 + x.norm());
    switch (kind_) {
        case Kind::box:
            return ((x - lo_).array() >= -tol).all() && ((hi_ - x).array() >= -tol).all();
        case Kind::ball:
            return (x - center_).norm() <= radius_ + tol;
        case Kind::halfspace_intersection:
            return std::all_of(halfspaces_.begin(), halfspaces_.end(),
                               [&](const Halfspace& h) { return within(h, x, tol); });
    }
    return false;
}

Vec Set::project(const Vec& x) const {
    if (x.size() != dim_) throw InvalidArgument("project: dimension mismatch");
    switch (kind_) {
        case Kind::box:
            return x.cwiseMax(lo_).cwiseMin(hi_);
        case Kind::ball: {
            const Vec r = x - center_;
            const double n = r.norm();
            if (n <= radius_) return x;
            return center_ + (radius_ / n) * r;
        }
        case Kind::halfspace_intersection:
            return project_polyhedron(x);
    }
    return x;
}

Vec Set::project_polyhedron(const Vec& x) const {
    const auto& hs = halfspaces_;
    if (std::all_of(hs.begin(), hs.end(), [&](const Halfspace& h) { return h.normal.dot(x) <= h.offset; }))
        return x;

    if (hs.size() <= 2) {
        // The projection lies on the affine hull of its active face; among the
        // candidate faces the feasible candidate closest to x is the answer.
        std::optional<Vec> best;
        double best_dist = kInf;
        auto consider = [&](const Vec& z) {
            if (!contains(z, 1e-14)) return;
            const double dist = (z - x).squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best = z;
            }
        };
        for (const auto& h : hs) consider(project_halfspace(h, x));
        if (hs.size() == 2) {
            Mat n(2, dim_);
            n.row(0) = hs[0].normal.transpose();
            n.row(1) = hs[1].normal.transpose();
            const Mat gram = n * n.transpose();
            if (std::abs(gram.determinant()) > 1e-14 * gram.norm() * gram.norm()) {
                Vec rhs(2);
                rhs << hs[0].normal.dot(x) - hs[0].offset, hs[1].normal.dot(x) - hs[1].offset;
                const Vec lambda = gram.ldlt().solve(rhs);
                consider(x - n.transpose() * lambda);
            }
        }
        if (!best) throw ProjectionError("polyhedron projection: empty intersection");
        return *best;
    }

    // Dykstra's alternating projections.
    Vec z = x;
    std::vector<Vec> corr(hs.size(), Vec::Zero(dim_));
    for (int cycle = 0; cycle < kInnerIterationCap; ++cycle) {
        const Vec prev = z;
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const Vec y = z + corr[i];
            z = project_halfspace(hs[i], y);
            corr[i] = y - z;
        }
        const double scale = 1.0 + z.norm();
        double violation = 0.0;
        for (const auto& h : hs) violation = std::max(violation, (h.normal.dot(z) - h.offset) / h.normal.norm());
        if ((z - prev).norm() <= kInnerTolerance * scale && violation <= kInnerTolerance * scale)
            return polish_on_active_face(hs, x, z);
    }
    throw ProjectionError("polyhedron projection: Dykstra iteration did not reach 1e-12 within 10000 cycles");
}

Set Set::shrink(double r) const {
    if (!(r >= 0.0)) throw InvalidArgument("shrink: radius must be >= 0");
    switch (kind_) {
        case Kind::box: {
            Vec lo = lo_.array() + r;
            Vec hi = hi_.array() - r;
            if ((hi.array() < lo.array()).any()) throw InvalidArgument("shrink: box r-interior is empty");
            return box(std::move(lo), std::move(hi));
        }
        case Kind::ball:
            if (radius_ < r) throw InvalidArgument("shrink: ball r-interior is empty");
            return ball(center_, radius_ - r);
        case Kind::halfspace_intersection: {
            std::vector<Halfspace> hs;
            hs.reserve(halfspaces_.size());
            for (const auto& h : halfspaces_) hs.push_back({h.normal, h.offset - r * h.normal.norm()});
            Set s = halfspace_intersection(dim_, std::move(hs));
            try {
                const Vec w = s.project(Vec::Zero(dim_));
                if (!s.contains(w, 1e-9)) throw InvalidArgument("shrink: polyhedron r-interior is empty");
            } catch (const ProjectionError&) {
                throw InvalidArgument("shrink: polyhedron r-interior is empty");
            }
            return s;
        }
    }
    return *this;
}

std::optional<double> Set::max_norm() const {
    switch (kind_) {
        case Kind::box:
            return lo_.cwiseAbs().cwiseMax(hi_.cwiseAbs()).norm();
        case Kind::ball:
            return center_.norm() + radius_;
        case Kind::halfspace_intersection:
            return std::nullopt;
    }
    return std::nullopt;
}

Vec Set::witness() const {
    switch (kind_) {
        case Kind::box:
            return 0.5 * (lo_ + hi_);
        case Kind::ball:
            return center_;
        case Kind::halfspace_intersection:
            return project(Vec::Zero(dim_));
    }
    return Vec::Zero(dim_);
}

std::string Set::describe() const {
    switch (kind_) {
        case Kind::box:
            return "box(lo=" + describe_vec(lo_) + ",hi=" + describe_vec(hi_) + ")";
        case Kind::ball:
            return "ball(center=" + describe_vec(center_) + ",radius=" + format_double(radius_) + ")";
        case Kind::halfspace_intersection: {
            std::string s = "halfspaces(d=" + std::to_string(dim_);
            for (const auto& h : halfspaces_) s += ";" + describe_vec(h.normal) + "<=" + format_double(h.offset);
            return s + ")";
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// ConvexFunction

ConvexFunction ConvexFunction::indicator(Set domain) {
    return ConvexFunction(Kind::indicator, std::move(domain));
}

ConvexFunction ConvexFunction::quadratic_plus_indicator(Mat a, Vec q, Set domain) {
    const int d = domain.dim();
    if (a.rows() != d || a.cols() != d || q.size() != d)
        throw InvalidArgument("quadratic_plus_indicator: A/q dimension mismatch");
    if (!a.allFinite() || !q.allFinite()) throw InvalidArgument("quadratic_plus_indicator: non-finite entries");
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (a(i, j) != a(j, i)) throw InvalidArgument("quadratic_plus_indicator: A is not symmetric");
    const auto eig = jacobi_eigen(a);
    const double scale = std::max(1.0, std::abs(eig.values(d - 1)));
    if (eig.values(0) < -1e-12 * scale) throw InvalidArgument("quadratic_plus_indicator: A is not positive semidefinite");

    ConvexFunction f(Kind::quadratic_plus_indicator, std::move(domain));
    f.lambda_min_ = std::max(0.0, eig.values(0));
    f.lambda_max_ = std::max(0.0, eig.values(d - 1));
    bool scalar = true;
    for (int i = 0; i < d && scalar; ++i)
        for (int j = 0; j < d && scalar; ++j) scalar = (i == j) ? a(i, i) == a(0, 0) : a(i, j) == 0.0;
    f.scalar_quadratic_ = scalar;
    const auto r = f.domain_.max_norm();
    f.lipschitz_ = r ? f.lambda_max_ * *r + q.norm() : kInf;
    f.a_ = std::move(a);
    f.q_ = std::move(q);
    return f;
}

ConvexFunction ConvexFunction::lipschitz_affine_plus_indicator(Vec a, double beta, Set domain) {
    if (a.size() != domain.dim()) throw InvalidArgument("lipschitz_affine_plus_indicator: a has wrong dimension");
    if (!a.allFinite() || !std::isfinite(beta)) throw InvalidArgument("lipschitz_affine_plus_indicator: non-finite entries");
    ConvexFunction f(Kind::lipschitz_affine_plus_indicator, std::move(domain));
    f.lipschitz_ = a.norm();
    f.q_ = std::move(a);
    f.beta_ = beta;
    return f;
}

double ConvexFunction::smooth_part(const Vec& x) const {
    switch (kind_) {
        case Kind::indicator:
            return 0.0;
        case Kind::quadratic_plus_indicator:
            return 0.5 * x.dot(a_ * x) + q_.dot(x);
        case Kind::lipschitz_affine_plus_indicator:
            return q_.dot(x) + beta_;
    }
    return 0.0;
}

double ConvexFunction::eval(const Vec& x) const {
    if (x.size() != dim()) throw InvalidArgument("eval: dimension mismatch");
    if (!domain_.contains(x)) return kInf;
    return smooth_part(x);
}

Vec ConvexFunction::resolvent(double eps, const Vec& x) const {
    if (!(eps > 0.0)) throw InvalidArgument("resolvent: eps must be > 0");
    if (x.size() != dim()) throw InvalidArgument("resolvent: dimension mismatch");
    switch (kind_) {
        case Kind::indicator:
            return domain_.project(x);
        case Kind::lipschitz_affine_plus_indicator:
            return domain_.project(x - eps * q_);
        case Kind::quadratic_plus_indicator: {
            const Vec shifted = x - eps * q_;
            if (scalar_quadratic_) return domain_.project(shifted / (1.0 + eps * a_(0, 0)));
            const bool unconstrained =
                domain_.kind() == Set::Kind::halfspace_intersection && domain_.halfspaces().empty();
            if (unconstrained) {
                const Mat m = Mat::Identity(dim(), dim()) + eps * a_;
                return m.ldlt().solve(shifted);
            }
            return constrained_quadratic_prox(eps, x);
        }
    }
    return x;
}

Vec ConvexFunction::constrained_quadratic_prox(double eps, const Vec& x) const {
    // Projected gradient on the (1/eps)-strongly convex objective
    // |z - x|^2 / (2 eps) + 1/2 <A z, z> + <q, z> over D.
    const double lip = 1.0 / eps + lambda_max_;
    const double step = 1.0 / lip;
    Vec z = domain_.project((x - eps * q_) / (1.0 + eps * 0.5 * (lambda_min_ + lambda_max_)));
    for (int it = 0; it < kInnerIterationCap; ++it) {
        const Vec grad = (z - x) / eps + a_ * z + q_;
        const Vec next = domain_.project(z - step * grad);
        const double change = (next - z).norm();
        z = next;
        if (change <= kInnerTolerance * (1.0 + z.norm())) return z;
    }
    throw ProjectionError("quadratic prox: projected gradient did not reach 1e-12 within 10000 iterations");
}

Vec ConvexFunction::yosida_gradient(double eps, const Vec& x) const {
    return (x - resolvent(eps, x)) / eps;
}

double ConvexFunction::moreau_envelope(double eps, const Vec& x) const {
    const Vec j = resolvent(eps, x);
    return (x - j).squaredNorm() / (2.0 * eps) + smooth_part(j);
}

std::string ConvexFunction::describe() const {
    switch (kind_) {
        case Kind::indicator:
            return "indicator(" + domain_.describe() + ")";
        case Kind::quadratic_plus_indicator:
            return "quadratic(A=" + describe_mat(a_) + ",q=" + describe_vec(q_) + ";" + domain_.describe() + ")";
        case Kind::lipschitz_affine_plus_indicator:
            return "affine(a=" + describe_vec(q_) + ",beta=" + format_double(beta_) + ";" + domain_.describe() + ")";
    }
    return {};
}

// ---------------------------------------------------------------------------
// Geometry

DomainGeometry make_geometry(double r0, double h0, double b, double c) {
    if (!(r0 > 0.0)) throw InvalidArgument("geometry: r0 must be > 0");
    if (!(h0 >= 0.0) || !std::isfinite(h0)) throw InvalidArgument("geometry: h0 must be finite and >= 0");
    if (!(c >= 1.0)) throw InvalidArgument("geometry: c must be >= 1");
    if (!(b >= 0.0)) throw InvalidArgument("geometry: b must be >= 0");
    DomainGeometry g;
    g.r0 = r0;
    g.h0 = h0;
    g.rho0 = r0 / (2.0 * (1.0 + r0 + h0));
    g.delta0 = b > 0.0 ? std::min(g.rho0 / (2.0 * b * c), g.rho0) : g.rho0;
    return g;
}

GeometryReport check_geometry(const Set& domain, double r0, std::optional<double> declared_h0, int probes,
                              std::uint64_t seed) {
    GeometryReport rep;
    rep.r0 = r0;
    if (!(r0 > 0.0)) {
        rep.message = "r0 must be > 0";
        return rep;
    }
    std::optional<Set> interior;
    try {
        interior = domain.shrink(r0);
    } catch (const Error& e) {
        rep.message = e.what();
        return rep;
    }
    rep.interior_witness = interior->witness();

    const int d = domain.dim();
    switch (domain.kind()) {
        case Set::Kind::box:
            rep.h0 = r0 * std::sqrt(static_cast<double>(d));
            rep.h0_computed = true;
            break;
        case Set::Kind::ball:
            rep.h0 = r0;
            rep.h0_computed = true;
            break;
        case Set::Kind::halfspace_intersection:
            if (!declared_h0) {
                rep.message = "unbounded domain: h0 must be declared";
                return rep;
            }
            rep.h0 = *declared_h0;
            break;
    }
    if (declared_h0 && rep.h0_computed && *declared_h0 + 1e-12 < rep.h0) {
        rep.message = "declared h0 is smaller than sup_z dist(z, D_r0) = " + format_double(rep.h0);
        return rep;
    }

    // Probe cloud: points of D obtained by projecting a cube around the witness.
    std::mt19937_64 rng(seed);
    const double half = 4.0 * (1.0 + r0 + rep.h0);
    std::uniform_real_distribution<double> u(-half, half);
    for (int p = 0; p < probes; ++p) {
        Vec z(d);
        for (int i = 0; i < d; ++i) z(i) = rep.interior_witness(i) + u(rng);
        const Vec on_d = domain.project(z);
        rep.probe_max_distance = std::max(rep.probe_max_distance, interior->distance(on_d));
    }
    rep.probes = probes;
    if (rep.probe_max_distance > rep.h0 + 1e-9 * (1.0 + rep.h0)) {
        rep.message = "probe cloud found dist(z, D_r0) = " + format_double(rep.probe_max_distance) + " > h0";
        return rep;
    }
    rep.pass = true;
    rep.message = "ok";
    return rep;
}

}  // namespace oblique
