#include "oblique/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oblique/errors.hpp"
#include "oblique/format.hpp"

namespace oblique {

namespace {

// Per-cell quantities shared by the checkers: the state paired with the
// increment dk_i = k_{i+1} - k_i and the point of D where phi is read.
struct CellView {
    std::vector<Vec> x;     // paired state
    std::vector<Vec> xd;    // J_eps x or pi_D x at the paired node
    std::vector<double> phi_xd;
    std::vector<Vec> dk;
    double h = 0.0;
};

CellView cell_view(const SkorohodSolution& sol, const ConvexFunction& phi) {
    if (sol.x.dim() != phi.dim()) throw InvalidArgument("diagnostics: dimension mismatch between solution and phi");
    CellView v;
    const std::size_t cells = sol.x.steps();
    const bool closed_form = sol.eps == 0.0;
    v.h = sol.x.dt();
    v.x.reserve(cells);
    v.xd.reserve(cells);
    v.phi_xd.reserve(cells);
    v.dk.reserve(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const Vec x = sol.x.node(closed_form ? i + 1 : i);
        Vec xd = closed_form ? phi.project_domain(x) : phi.resolvent(sol.eps, x);
        v.phi_xd.push_back(phi.eval(xd));
        v.x.push_back(x);
        v.xd.push_back(std::move(xd));
        v.dk.push_back(sol.k.node(i + 1) - sol.k.node(i));
    }
    return v;
}

std::size_t node_index(const SampledPath& p, double t) {
    const double r = (t - p.t0()) / p.dt();
    const auto i = static_cast<long long>(std::llround(r));
    if (i < 0 || static_cast<std::size_t>(i) > p.steps())
        throw InvalidArgument("diagnostics: window time " + format_double(t) + " is outside the solution horizon");
    return static_cast<std::size_t>(i);
}

std::string point_label(const Vec& p) {
    std::string s = "const(";
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (i) s += ",";
        s += format_double(p(i));
    }
    return s + ")";
}

}  // namespace

std::vector<Vec> default_test_points(const Set& domain, const Vec& u0) {
    const int d = domain.dim();
    std::vector<Vec> out;
    switch (domain.kind()) {
    case Set::Kind::box: {
        if (d <= 6) {
            for (unsigned mask = 0; mask < (1u << d); ++mask) {
                Vec c(d);
                for (int i = 0; i < d; ++i) c(i) = (mask >> i) & 1u ? domain.hi()(i) : domain.lo()(i);
                out.push_back(c);
            }
        } else {
            out.push_back(domain.lo());
            out.push_back(domain.hi());
        }
        out.push_back(0.5 * (domain.lo() + domain.hi()));
        break;
    }
    case Set::Kind::ball:
        out.push_back(domain.center());
        for (int i = 0; i < d; ++i) {
            out.push_back(domain.center() + domain.radius() * Vec::Unit(d, i));
            out.push_back(domain.center() - domain.radius() * Vec::Unit(d, i));
        }
        break;
    case Set::Kind::halfspace_intersection:
        out.push_back(u0);
        for (int i = 0; i < d; ++i) {
            out.push_back(domain.project(u0 + 10.0 * Vec::Unit(d, i)));
            out.push_back(domain.project(u0 - 10.0 * Vec::Unit(d, i)));
        }
        break;
    }
    return out;
}

ViReport vi_residual(const SkorohodSolution& sol, const ConvexFunction& phi, const ViOptions& opts) {
    const CellView v = cell_view(sol, phi);
    const Vec u0 = opts.u0 ? *opts.u0 : phi.domain().witness();
    if (!phi.domain().contains(u0)) throw InvalidArgument("vi_residual: u0 is not in the domain");

    std::vector<ViWindow> windows = opts.windows;
    if (windows.empty()) {
        const double t0 = sol.x.t0(), T = sol.x.end();
        windows.push_back({t0, T});
        for (int q = 0; q < 4; ++q) windows.push_back({t0 + (T - t0) * q / 4.0, t0 + (T - t0) * (q + 1) / 4.0});
    }
    const std::vector<Vec> points = opts.test_points.empty() ? default_test_points(phi.domain(), u0) : opts.test_points;
    std::vector<double> phi_points;
    for (const auto& p : points) {
        if (p.size() != phi.dim()) throw InvalidArgument("vi_residual: test point has the wrong dimension");
        if (!phi.domain().contains(p)) throw InvalidArgument("vi_residual: test point " + point_label(p) + " is not in D");
        phi_points.push_back(phi.eval(p));
    }

    ViReport rep;
    rep.residual = -std::numeric_limits<double>::infinity();
    rep.tolerance = 1e-4 * (1.0 + sol.tv_k);
    auto consider = [&](double r, const ViWindow& w, const std::string& label) {
        ++rep.evaluations;
        if (r > rep.residual) {
            rep.residual = r;
            rep.worst_window = w;
            rep.worst_test_fn = label;
        }
    };

    for (const auto& w : windows) {
        if (!(w.s <= w.t)) throw InvalidArgument("vi_residual: window with s > t");
        const std::size_t a = node_index(sol.x, w.s), b = node_index(sol.x, w.t);
        for (std::size_t j = 0; j < points.size(); ++j) {
            double r = 0.0;
            for (std::size_t i = a; i < b; ++i)
                r += (points[j] - v.x[i]).dot(v.dk[i]) + v.h * (v.phi_xd[i] - phi_points[j]);
            consider(r, w, point_label(points[j]));
        }
        for (double theta : opts.thetas) {
            double r = 0.0;
            for (std::size_t i = a; i < b; ++i) {
                const Vec y = (1.0 - theta) * v.xd[i] + theta * u0;
                r += (y - v.x[i]).dot(v.dk[i]) + v.h * (v.phi_xd[i] - phi.eval(y));
            }
            consider(r, w, "blend(theta=" + format_double(theta) + ")");
        }
    }
    rep.pass = rep.residual <= rep.tolerance;
    return rep;
}

double monotonicity_gap(const SkorohodSolution& a, const SkorohodSolution& b) {
    if (a.system != b.system)
        throw InvalidArgument("monotonicity_gap: solutions belong to different systems (" + a.system + " vs " + b.system + ")");
    if (a.x.nodes() != b.x.nodes() || a.x.dt() != b.x.dt() || a.x.t0() != b.x.t0() || a.x.dim() != b.x.dim())
        throw GridMismatch("monotonicity_gap: solutions are on different grids");
    const bool right = a.eps == 0.0 && b.eps == 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.x.steps(); ++i) {
        const std::size_t p = right ? i + 1 : i;
        const Vec dka = a.k.node(i + 1) - a.k.node(i);
        const Vec dkb = b.k.node(i + 1) - b.k.node(i);
        acc += (a.x.node(p) - b.x.node(p)).dot(dka - dkb);
    }
    return acc;
}

double phi_sharp(const ConvexFunction& phi, const Vec& u0, double r0) {
    switch (phi.kind()) {
    case ConvexFunction::Kind::indicator:
        return 0.0;
    case ConvexFunction::Kind::lipschitz_affine_plus_indicator:
        return phi.linear().dot(u0) + phi.constant() + r0 * phi.linear().norm();
    case ConvexFunction::Kind::quadratic_plus_indicator: {
        const Vec grad = phi.quadratic() * u0 + phi.linear();
        return phi.eval(u0) + r0 * grad.norm() + 0.5 * r0 * r0 * phi.lambda_max();
    }
    }
    throw InternalError("phi_sharp: unknown kind");
}

AnnexBReport annexB_bound(const SkorohodSolution& sol, const ConvexFunction& phi, const Vec& u0, double r0) {
    if (!(r0 > 0.0)) throw InvalidArgument("annexB_bound: r0 must be > 0");
    if (u0.size() != phi.dim()) throw InvalidArgument("annexB_bound: u0 has the wrong dimension");
    bool inside = false;
    try {
        inside = phi.domain().shrink(r0).contains(u0);
    } catch (const InvalidArgument&) {
        inside = false;
    }
    if (!inside)
        throw InvalidArgument("annexB_bound: the ball of radius " + format_double(r0) + " around u0 leaves the domain");

    const CellView v = cell_view(sol, phi);
    AnnexBReport rep;
    rep.phi_sharp = phi_sharp(phi, u0, r0);
    double phi_int = 0.0, pairing = 0.0;
    for (std::size_t i = 0; i < v.x.size(); ++i) {
        phi_int += v.h * v.phi_xd[i];
        pairing += (v.x[i] - u0).dot(v.dk[i]);
    }
    const double horizon = sol.x.end() - sol.x.t0();
    rep.lhs = r0 * sol.tv_k + phi_int;
    rep.rhs = pairing + horizon * rep.phi_sharp;
    rep.margin = rep.rhs - rep.lhs;
    rep.tolerance = 1e-6 * (1.0 + sol.tv_k);
    rep.pass = rep.margin >= -rep.tolerance;
    return rep;
}

std::optional<double> convergence_slope(const std::vector<std::pair<double, double>>& eps_gap) {
    if (eps_gap.size() < 3) throw InvalidArgument("convergence_slope: needs at least three (eps, gap) points");
    bool zero = false;
    for (std::size_t i = 0; i < eps_gap.size(); ++i) {
        const auto [eps, gap] = eps_gap[i];
        if (!(eps > 0.0)) throw InvalidArgument("convergence_slope: eps must be > 0");
        if (i > 0 && !(eps < eps_gap[i - 1].first)) throw InvalidArgument("convergence_slope: eps must strictly decrease");
        if (std::isnan(gap) || gap < 0.0) throw InvalidArgument("convergence_slope: gaps must be nonnegative numbers");
        if (gap == 0.0) zero = true;
    }
    if (zero) return std::nullopt;
    const double n = static_cast<double>(eps_gap.size());
    double sx = 0, sy = 0;
    for (const auto& [eps, gap] : eps_gap) {
        sx += std::log(eps);
        sy += std::log(gap);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [eps, gap] : eps_gap) {
        const double dx = std::log(eps) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(gap) - my);
    }
    return sxy / sxx;
}

std::optional<double> convergence_slope(const std::vector<RefinementLevel>& history) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : history)
        if (!std::isnan(r.gap)) pts.emplace_back(r.eps, r.gap);
    return convergence_slope(pts);
}

AprioriReport apriori_monitor(const std::vector<RefinementLevel>& history,
                              std::vector<std::pair<double, double>> scaled_family) {
    if (history.size() < 2) throw InvalidArgument("apriori_monitor: needs at least two refinement levels");
    AprioriReport rep;
    const double last = history.back().tv_k, prev = history[history.size() - 2].tv_k;
    if (prev == 0.0)
        rep.tv_ratio = last == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    else
        rep.tv_ratio = last / prev;
    rep.stabilized = rep.tv_ratio >= 0.8 && rep.tv_ratio <= 1.2;
    std::sort(scaled_family.begin(), scaled_family.end());
    for (std::size_t i = 1; i < scaled_family.size(); ++i)
        if (scaled_family[i].second < scaled_family[i - 1].second - 1e-12 * (1.0 + scaled_family[i - 1].second))
            rep.monotone_in_scale = false;
    rep.scaled_family = std::move(scaled_family);
    return rep;
}

}  // namespace oblique
