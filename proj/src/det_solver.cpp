#include "oblique/det_solver.hpp"

#include <algorithm>
#include <cmath>

#include "oblique/format.hpp"

namespace oblique {

double TimeProfile::operator()(double t) const { return offset + amplitude * std::sin(omega * t); }

// ---------------------------------------------------------------------------
// DriftSpec

DriftSpec DriftSpec::zero(int dim) {
    if (dim < 1) throw InvalidArgument("drift: dimension must be >= 1");
    return DriftSpec(Kind::zero, Mat::Zero(dim, dim), Vec::Zero(dim));
}

DriftSpec DriftSpec::constant(Vec value) {
    if (value.size() < 1 || !value.allFinite()) throw InvalidArgument("drift: constant value must be finite");
    const auto d = value.size();
    return DriftSpec(Kind::constant, Mat::Zero(d, d), std::move(value));
}

DriftSpec DriftSpec::affine(Mat a, Vec b0) {
    if (a.rows() != b0.size() || a.cols() != b0.size() || b0.size() < 1)
        throw InvalidArgument("drift: affine A must be d x d with b0 of length d");
    if (!a.allFinite() || !b0.allFinite()) throw InvalidArgument("drift: non-finite entries");
    DriftSpec f(Kind::affine, std::move(a), std::move(b0));
    f.a_norm_ = spectral_norm(f.a_);
    return f;
}

DriftSpec DriftSpec::time_modulated(Mat a, Vec b0, TimeProfile profile) {
    DriftSpec f = affine(std::move(a), std::move(b0));
    if (!std::isfinite(profile.offset) || !std::isfinite(profile.amplitude) || !std::isfinite(profile.omega))
        throw InvalidArgument("drift: non-finite time profile");
    f.kind_ = Kind::time_modulated;
    f.profile_ = profile;
    return f;
}

Vec DriftSpec::eval(double t, const Vec& x) const {
    switch (kind_) {
        case Kind::zero:
            return Vec::Zero(b0_.size());
        case Kind::constant:
            return b0_;
        case Kind::affine:
            return a_ * x + b0_;
        case Kind::time_modulated:
            return profile_(t) * (a_ * x + b0_);
    }
    return b0_;
}

double DriftSpec::lipschitz(double t) const {
    switch (kind_) {
        case Kind::zero:
        case Kind::constant:
            return 0.0;
        case Kind::affine:
            return a_norm_;
        case Kind::time_modulated:
            return std::abs(profile_(t)) * a_norm_;
    }
    return 0.0;
}

double DriftSpec::bound(double t, const Set& domain) const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::constant:
            return b0_.norm();
        case Kind::affine:
        case Kind::time_modulated: {
            const double scale = kind_ == Kind::affine ? 1.0 : std::abs(profile_(t));
            if (a_norm_ == 0.0) return scale * b0_.norm();
            const auto r = domain.max_norm();
            if (!r) return std::numeric_limits<double>::infinity();
            return scale * (a_norm_ * *r + b0_.norm());
        }
    }
    return 0.0;
}

std::string DriftSpec::describe() const {
    auto vec = [](const Vec& v) {
        std::string s = "[";
        for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
        return s + "]";
    };
    switch (kind_) {
        case Kind::zero:
            return "zero";
        case Kind::constant:
            return "constant(" + vec(b0_) + ")";
        case Kind::affine:
        case Kind::time_modulated: {
            std::string s = kind_ == Kind::affine ? "affine(A=[" : "time_modulated(A=[";
            for (Eigen::Index i = 0; i < a_.rows(); ++i) s += (i ? "," : "") + vec(a_.row(i).transpose());
            s += "],b0=" + vec(b0_);
            if (kind_ == Kind::time_modulated)
                s += ",p=" + format_double(profile_.offset) + "+" + format_double(profile_.amplitude) + "sin(" +
                     format_double(profile_.omega) + "t)";
            return s + ")";
        }
    }
    return {};
}

std::string check_drift_bound(const DriftSpec& f, const Set& domain, const std::vector<double>& times,
                              const std::vector<Vec>& probes) {
    for (double t : times) {
        const double bound = f.bound(t, domain);
        for (const auto& p : probes) {
            const Vec x = domain.project(p);
            const double v = f.eval(t, x).norm();
            if (v > bound * (1.0 + 1e-12) + 1e-12)
                return "|f(" + format_double(t) + ", x)| = " + format_double(v) + " exceeds f# = " + format_double(bound);
        }
    }
    return {};
}

double drift_lipschitz_integral(const DriftSpec& f, double horizon, double dt) {
    const std::size_t n = grid_steps(horizon, dt, "horizon");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += dt * f.lipschitz(static_cast<double>(i) * dt);
    return total;
}

// ---------------------------------------------------------------------------
// Penalized scheme

std::string system_tag(const ConvexFunction& phi, const ObliqueField& h) {
    return phi.describe() + " | " + h.describe();
}

SkorohodSolution run_penalized(const ConvexFunction& phi, const ObliqueField& h, const Vec& x0, double dt,
                               std::size_t steps, const PenalizedConfig& cfg, const DelayedIncrement& increment) {
    const int d = phi.dim();
    if (h.dim() != d || x0.size() != d) throw InvalidArgument("penalized solve: dimension mismatch");
    if (!(cfg.eps > 0.0)) throw InvalidArgument("penalized solve: eps must be > 0");
    if (cfg.substep_ratio < 1) throw InvalidArgument("penalized solve: substep_ratio must be >= 1");
    if (steps < 1) throw InvalidArgument("penalized solve: need at least one grid step");
    if (!phi.domain().contains(x0)) throw InvalidArgument("penalized solve: x0 is outside Dom(phi)");

    const std::size_t delay = grid_steps(cfg.eps, dt, "eps");
    if (delay < 1) throw GridMismatch("penalized solve: eps is smaller than the grid step");

    // Inner step h <= eps / (ratio c), chosen to divide dt.
    const double h_max = cfg.eps / (static_cast<double>(cfg.substep_ratio) * h.c());
    const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(dt / h_max * (1.0 - 1e-12))));
    const double step = dt / static_cast<double>(sub);

    const std::size_t fine = steps * sub;
    Mat xs(d, static_cast<Eigen::Index>(fine + 1));
    Mat ks(d, static_cast<Eigen::Index>(fine + 1));
    Mat coarse(d, static_cast<Eigen::Index>(steps + 1));

    Vec x = x0;
    Vec k = Vec::Zero(d);
    Vec reflect = Vec::Zero(d);  // int H dk
    Vec input = Vec::Zero(d);    // accumulated delayed input
    xs.col(0) = x;
    ks.col(0) = k;
    coarse.col(0) = x;

    SolutionDiagnostics diag;
    diag.substeps = sub;
    std::size_t col = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        Vec rate = Vec::Zero(d);
        if (i >= delay) {
            const Vec inc = increment(i - delay, coarse);
            if (inc.size() != d) throw InvalidArgument("penalized solve: input increment has wrong dimension");
            rate = inc / dt;
        }
        for (std::size_t s = 0; s < sub; ++s) {
            const Vec grad = phi.yosida_gradient(cfg.eps, x);
            diag.max_penalty_gradient = std::max(diag.max_penalty_gradient, grad.norm());
            const Vec push = h.eval(x) * grad;
            x += step * (rate - push);
            k += step * grad;
            reflect += step * push;
            input += step * rate;
            ++col;
            xs.col(static_cast<Eigen::Index>(col)) = x;
            ks.col(static_cast<Eigen::Index>(col)) = k;
            const double norm = x.norm();
            if (!(norm <= cfg.guard_radius)) {
                const double t = static_cast<double>(col) * step;
                throw StabilityBreach("penalized solve: |x| = " + format_double(norm) + " exceeds guard radius at t = " +
                                          format_double(t),
                                      t, norm);
            }
            diag.identity_residual = std::max(diag.identity_residual, (x + reflect - x0 - input).norm());
        }
        coarse.col(static_cast<Eigen::Index>(i + 1)) = x;
    }
    diag.max_penalty_gradient = std::max(diag.max_penalty_gradient, phi.yosida_gradient(cfg.eps, x).norm());

    for (Eigen::Index c = 0; c < xs.cols(); ++c)
        diag.feasibility_defect = std::max(diag.feasibility_defect, phi.domain().distance(xs.col(c)));

    SkorohodSolution sol;
    sol.x = SampledPath(0.0, step, std::move(xs));
    sol.k = SampledPath(0.0, step, std::move(ks));
    sol.eps = cfg.eps;
    sol.stride = sub;
    sol.tv_k = total_variation(sol.k);
    sol.diagnostics = diag;
    sol.system = system_tag(phi, h);
    return sol;
}

SkorohodSolution solve_penalized(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                 const SampledPath& m, const Vec& x0, const PenalizedConfig& cfg) {
    if (m.dim() != phi.dim() || f.dim() != phi.dim()) throw InvalidArgument("solve_penalized: dimension mismatch");
    if (m.t0() != 0.0) throw InvalidArgument("solve_penalized: input path must start at t = 0");
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : m.end();
    const std::size_t steps = grid_steps(horizon, m.dt(), "horizon");
    if (steps > m.steps()) throw InvalidArgument("solve_penalized: horizon exceeds the input path");

    const Set& domain = phi.domain();
    const double dt = m.dt();
    auto increment = [&](std::size_t j, const Mat& coarse) -> Vec {
        const auto a = static_cast<Eigen::Index>(j);
        Vec inc = m.values().col(a + 1) - m.values().col(a);
        if (f.kind() != DriftSpec::Kind::zero) inc += dt * f.eval(m.time(j), domain.project(coarse.col(a)));
        return inc;
    };
    PenalizedConfig c = cfg;
    c.horizon = horizon;
    return run_penalized(phi, h, x0, dt, steps, c, increment);
}

std::vector<double> eps_ladder(double eps0, int max_halvings, double dt) {
    if (!(eps0 > 0.0)) throw InvalidArgument("eps ladder: eps0 must be > 0");
    if (max_halvings < 0) throw InvalidArgument("eps ladder: max_halvings must be >= 0");
    std::vector<double> out;
    for (int level = 0; level <= max_halvings; ++level) {
        const double want = eps0 / std::ldexp(1.0, level);
        const std::size_t cells = std::max<std::size_t>(1, grid_steps_ceil(want, dt));
        const double eps = static_cast<double>(cells) * dt;
        if (!out.empty() && eps >= out.back()) break;  // grid resolution reached
        out.push_back(eps);
    }
    return out;
}

double coarse_sup_gap(const SkorohodSolution& a, const SkorohodSolution& b) {
    const std::size_t n = a.coarse_steps();
    if (n != b.coarse_steps() || a.x.dim() != b.x.dim() ||
        std::abs(a.x.dt() * static_cast<double>(a.stride) - b.x.dt() * static_cast<double>(b.stride)) >
            1e-12 * a.x.dt() * static_cast<double>(a.stride))
        throw GridMismatch("coarse_sup_gap: solutions are on different input grids");
    double gap = 0.0;
    for (std::size_t i = 0; i <= n; ++i) gap = std::max(gap, (a.x_coarse(i) - b.x_coarse(i)).norm());
    return gap;
}

namespace {

// Runs the eps ladder; with stop_at_tol the first level whose gap meets tol ends it.
SkorohodSolution run_ladder(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f, const SampledPath& m,
                            const Vec& x0, const SkorohodOptions& opts, bool stop_at_tol, bool& met_tol) {
    if (!(opts.tol > 0.0)) throw InvalidArgument("solve_skorohod: tol must be > 0");
    const double horizon = std::isnan(opts.horizon) ? m.end() - m.t0() : opts.horizon;
    const double eps0 = std::isnan(opts.eps0) ? 0.1 * horizon : opts.eps0;
    const auto ladder = eps_ladder(eps0, opts.max_halvings, m.dt());

    std::vector<RefinementLevel> history;
    SkorohodSolution prev;
    met_tol = false;
    for (std::size_t level = 0; level < ladder.size(); ++level) {
        const double eps = ladder[level];
        const auto smooth = mollify(m, eps);
        PenalizedConfig cfg;
        cfg.eps = eps;
        cfg.substep_ratio = opts.substep_ratio;
        cfg.horizon = horizon;
        cfg.guard_radius = opts.guard_radius;
        SkorohodSolution sol = solve_penalized(phi, h, f, smooth.path, x0, cfg);

        RefinementLevel rec;
        rec.eps = eps;
        rec.tv_k = sol.tv_k;
        rec.gap = level == 0 ? std::numeric_limits<double>::quiet_NaN() : coarse_sup_gap(sol, prev);
        history.push_back(rec);

        met_tol = met_tol || (level > 0 && rec.gap <= opts.tol);
        const bool last = level + 1 == ladder.size();
        if (opts.max_halvings == 0 || (stop_at_tol && met_tol) || (!stop_at_tol && last)) {
            if (opts.max_halvings == 0) met_tol = true;
            sol.refinement_history = std::move(history);
            return sol;
        }
        prev = std::move(sol);
    }
    std::string msg = "solve_skorohod: consecutive-solution gap stayed above tol = " + format_double(opts.tol) +
                      " after " + std::to_string(history.size()) + " levels";
    throw NoConvergence(std::move(msg), std::move(history));
}

}  // namespace

SkorohodSolution solve_skorohod(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                const SampledPath& m, const Vec& x0, const SkorohodOptions& opts) {
    bool met = false;
    return run_ladder(phi, h, f, m, x0, opts, true, met);
}

SkorohodSolution refinement_ladder(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                   const SampledPath& m, const Vec& x0, const SkorohodOptions& opts) {
    bool met = false;
    return run_ladder(phi, h, f, m, x0, opts, false, met);
}

// ---------------------------------------------------------------------------
// Closed-form oracle and stability

SkorohodSolution oracle_halfline(double h, double x0, const SampledPath& m) {
    if (!(h > 0.0)) throw InvalidArgument("oracle_halfline: h must be > 0");
    if (!(x0 >= 0.0)) throw InvalidArgument("oracle_halfline: x0 must be >= 0");
    if (m.dim() != 1) throw InvalidArgument("oracle_halfline: input must be one-dimensional");

    const auto n = static_cast<Eigen::Index>(m.nodes());
    Mat xs(1, n), ks(1, n);
    double running_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double free = x0 + m.values()(0, i);
        running_min = std::min(running_min, free);
        const double push = std::max(0.0, -running_min);  // h * l(t)
        xs(0, i) = free + push;
        ks(0, i) = -push / h;
    }
    SkorohodSolution sol;
    sol.x = SampledPath(m.t0(), m.dt(), std::move(xs));
    sol.k = SampledPath(m.t0(), m.dt(), std::move(ks));
    sol.eps = 0.0;
    sol.stride = 1;
    sol.tv_k = total_variation(sol.k);

    const auto phi = ConvexFunction::indicator(Set::halfspace_intersection(1, {{Vec::Constant(1, -1.0), 0.0}}));
    const auto field = ObliqueField::constant(Mat::Constant(1, 1, h), std::max(h, 1.0 / h), 0.0);
    sol.system = system_tag(phi, field);
    for (Eigen::Index i = 0; i < n; ++i)
        sol.diagnostics.feasibility_defect = std::max(sol.diagnostics.feasibility_defect, std::max(0.0, -sol.x.values()(0, i)));
    return sol;
}

StabilityGap stability_gap(const SkorohodSolution& s1, const SkorohodSolution& s2, const SampledPath& m1,
                           const SampledPath& m2, double mu_integral) {
    if (s1.x.nodes() != s2.x.nodes() || s1.x.dt() != s2.x.dt() || s1.x.dim() != s2.x.dim())
        throw GridMismatch("stability_gap: solutions are on different grids");
    StabilityGap out;
    out.sup_gap = (s1.x.values() - s2.x.values()).colwise().norm().maxCoeff();
    out.tv_gap_m = total_variation(difference(m1, m2));
    out.V = total_variation(s1.x) + total_variation(s2.x) + total_variation(s1.k) + total_variation(s2.k) + mu_integral;
    return out;
}

}  // namespace oblique
