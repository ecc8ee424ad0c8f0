#include "oblique/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "oblique/diagnostics.hpp"
#include "oblique/errors.hpp"
#include "oblique/format.hpp"

namespace oblique {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(splitmix64(seed) ^ (counter * 0xd1b54a32d192ed03ULL));
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

double standard_normal(std::uint64_t seed, std::uint64_t counter) {
    // u1 in (0, 1], u2 in [0, 1); only the cosine branch is used.
    const double u1 = static_cast<double>((draw_bits(seed, 2 * counter) >> 11) + 1) * kTwoPow53Inv;
    const double u2 = static_cast<double>(draw_bits(seed, 2 * counter + 1) >> 11) * kTwoPow53Inv;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform_unit(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(draw_bits(seed, counter) >> 11) * kTwoPow53Inv;
}

SampledPath brownian_path(const BrownianDriver& drv) {
    if (!(drv.dt > 0.0)) throw InvalidArgument("brownian: dt must be > 0");
    if (drv.dims < 1) throw InvalidArgument("brownian: dims must be >= 1");
    if (!(drv.horizon >= drv.dt)) throw InvalidArgument("brownian: horizon must be >= dt");
    const std::size_t steps = grid_steps(drv.horizon, drv.dt, "brownian horizon");
    const double scale = std::sqrt(drv.dt);
    const auto k = static_cast<std::uint64_t>(drv.dims);
    Mat v(drv.dims, static_cast<Eigen::Index>(steps + 1));
    v.col(0).setZero();
    for (std::size_t i = 0; i < steps; ++i)
        for (int c = 0; c < drv.dims; ++c)
            v(c, static_cast<Eigen::Index>(i + 1)) =
                v(c, static_cast<Eigen::Index>(i)) +
                scale * standard_normal(drv.seed, static_cast<std::uint64_t>(i) * k + static_cast<std::uint64_t>(c));
    return SampledPath(0.0, drv.dt, std::move(v));
}

// ---------------------------------------------------------------------------
// Diffusion catalog

DiffusionSpec DiffusionSpec::zero(int dim, int noise_dims) {
    if (dim < 1 || noise_dims < 1) throw InvalidArgument("diffusion: dimensions must be >= 1");
    return DiffusionSpec(Kind::zero, Mat::Zero(dim, noise_dims));
}

DiffusionSpec DiffusionSpec::constant(Mat g) {
    if (g.rows() < 1 || g.cols() < 1 || !g.allFinite()) throw InvalidArgument("diffusion: matrix must be finite and nonempty");
    DiffusionSpec s(Kind::constant, std::move(g));
    s.g_norm_ = spectral_norm(s.g_);
    return s;
}

DiffusionSpec DiffusionSpec::affine_in_x(Mat g, double alpha, Vec a, double s_max) {
    if (g.rows() < 1 || g.cols() < 1 || !g.allFinite()) throw InvalidArgument("diffusion: matrix must be finite and nonempty");
    if (a.size() != g.rows()) throw InvalidArgument("diffusion: slope vector must have the state dimension");
    if (!(s_max > 0.0) || !std::isfinite(alpha) || !a.allFinite())
        throw InvalidArgument("diffusion: affine factor needs finite alpha, a and s_max > 0");
    DiffusionSpec s(Kind::affine_in_x, std::move(g));
    s.alpha_ = alpha;
    s.a_ = std::move(a);
    s.s_max_ = s_max;
    s.g_norm_ = spectral_norm(s.g_);
    return s;
}

Mat DiffusionSpec::eval(double, const Vec& x) const {
    switch (kind_) {
    case Kind::zero:
    case Kind::constant:
        return g_;
    case Kind::affine_in_x:
        return std::clamp(alpha_ + a_.dot(x), -s_max_, s_max_) * g_;
    }
    throw InternalError("diffusion: unknown kind");
}

double DiffusionSpec::bound(double, const Set& domain) const {
    switch (kind_) {
    case Kind::zero:
        return 0.0;
    case Kind::constant:
        return g_norm_;
    case Kind::affine_in_x: {
        const auto r = domain.max_norm();
        const double s = r ? std::min(s_max_, std::abs(alpha_) + a_.norm() * *r) : s_max_;
        return s * g_norm_;
    }
    }
    throw InternalError("diffusion: unknown kind");
}

double DiffusionSpec::lipschitz(double) const { return kind_ == Kind::affine_in_x ? g_norm_ * a_.norm() : 0.0; }

std::string DiffusionSpec::describe() const {
    auto mat = [](const Mat& m) {
        std::string s = "[";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            s += i ? ";" : "";
            for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + format_double(m(i, j));
        }
        return s + "]";
    };
    switch (kind_) {
    case Kind::zero:
        return "g=zero(" + std::to_string(dim()) + "x" + std::to_string(noise_dims()) + ")";
    case Kind::constant:
        return "g=constant" + mat(g_);
    case Kind::affine_in_x: {
        std::string s = "g=affine_in_x(alpha=" + format_double(alpha_) + ",a=";
        for (Eigen::Index i = 0; i < a_.size(); ++i) s += (i ? "," : "") + format_double(a_(i));
        return s + ",s_max=" + format_double(s_max_) + ")" + mat(g_);
    }
    }
    throw InternalError("diffusion: unknown kind");
}

// ---------------------------------------------------------------------------
// M^n

MnBuilder::MnBuilder(const DriftSpec& f, const DiffusionSpec& g, const Set& domain, const SampledPath& b, const Vec& x0,
                     std::size_t delay_cells)
    : f_(f), g_(g), domain_(domain), b_(b), x0_(x0), q_(delay_cells) {
    const int d = static_cast<int>(x0.size());
    if (f.dim() != d || g.dim() != d || domain.dim() != d) throw InvalidArgument("M^n: dimension mismatch");
    if (g.noise_dims() != b.dim()) throw InvalidArgument("M^n: Brownian dimension does not match g");
    if (q_ < 1) throw GridMismatch("M^n: the delay must span at least one grid cell");
    const auto nodes = static_cast<Eigen::Index>(b.nodes());
    ito_ = Mat::Zero(d, nodes);
    m_ = Mat::Zero(d, nodes);
    drift_ = Vec::Zero(d);
    window_ = Vec::Zero(d);
}

Vec MnBuilder::step(std::size_t j, const Mat& states) {
    if (j != next_) throw InternalError("M^n: steps must be requested in order");
    if (j >= b_.steps()) throw InvalidArgument("M^n: step beyond the Brownian horizon");
    const double t = b_.time(j);
    const Vec delayed = j >= q_ ? Vec(states.col(static_cast<Eigen::Index>(j - q_))) : x0_;
    const Vec xd = domain_.project(delayed);
    const auto jj = static_cast<Eigen::Index>(j);

    if (f_.kind() != DriftSpec::Kind::zero) drift_ += b_.dt() * f_.eval(t, xd);
    Vec ito_next = ito_.col(jj);
    if (g_.kind() != DiffusionSpec::Kind::zero) ito_next += g_.eval(t, xd) * (b_.node(j + 1) - b_.node(j));
    ito_.col(jj + 1) = ito_next;

    // window over I_{j+2-q} .. I_{j+1}; I_l = 0 for l <= 0
    window_ += ito_next;
    if (j + 1 >= q_ + 1) window_ -= ito_.col(jj + 1 - static_cast<Eigen::Index>(q_));
    m_.col(jj + 1) = drift_ + window_ / static_cast<double>(q_);
    ++next_;
    return m_.col(jj + 1) - m_.col(jj);
}

std::size_t delay_cells_for(int n, double dt) {
    if (n < 1) throw InvalidArgument("n_delay must be >= 1");
    return grid_steps(1.0 / static_cast<double>(n), dt, "1/n");
}

SampledPath build_Mn(const DriftSpec& f, const DiffusionSpec& g, const Set& domain, const SampledPath& x_hist,
                     const SampledPath& b, int n) {
    const std::size_t q = delay_cells_for(n, b.dt());
    if (x_hist.dt() != b.dt() || x_hist.t0() != b.t0() || x_hist.nodes() < b.nodes())
        throw GridMismatch("build_Mn: state history and Brownian path are on different grids");
    MnBuilder builder(f, g, domain, b, Vec(x_hist.node(0)), q);
    for (std::size_t j = 0; j < b.steps(); ++j) builder.step(j, x_hist.values());
    return SampledPath(b.t0(), b.dt(), builder.values());
}

SviPathResult solve_svi_on_path(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                const DiffusionSpec& g, const Vec& x0, const SampledPath& b, int n,
                                const SkorohodOptions& opts) {
    if (!(opts.tol > 0.0)) throw InvalidArgument("solve_svi: tol must be > 0");
    if (b.t0() != 0.0) throw InvalidArgument("solve_svi: Brownian path must start at t = 0");
    if (!phi.domain().contains(x0)) throw InvalidArgument("solve_svi: x0 is not in Dom(phi)");
    const double dt = b.dt();
    const double horizon = std::isnan(opts.horizon) ? b.end() : opts.horizon;
    const std::size_t steps = grid_steps(horizon, dt, "horizon");
    if (steps > b.steps()) throw InvalidArgument("solve_svi: horizon exceeds the Brownian path");
    const std::size_t q = delay_cells_for(n, dt);
    const double eps0 = std::isnan(opts.eps0) ? 0.1 * horizon : opts.eps0;
    const auto ladder = eps_ladder(eps0, opts.max_halvings, dt);

    std::vector<RefinementLevel> history;
    SviPathResult prev;
    for (std::size_t level = 0; level < ladder.size(); ++level) {
        PenalizedConfig cfg;
        cfg.eps = ladder[level];
        cfg.substep_ratio = opts.substep_ratio;
        cfg.horizon = horizon;
        cfg.guard_radius = opts.guard_radius;

        MnBuilder builder(f, g, phi.domain(), b, x0, q);
        auto increment = [&](std::size_t j, const Mat& coarse) { return builder.step(j, coarse); };
        SviPathResult res;
        res.solution = run_penalized(phi, h, x0, dt, steps, cfg, increment);

        // The last eps cells of M^n are never consumed by the solve; finish them for the record.
        Mat coarse(x0.size(), static_cast<Eigen::Index>(steps + 1));
        for (std::size_t i = 0; i <= steps; ++i) coarse.col(static_cast<Eigen::Index>(i)) = res.solution.x_coarse(i);
        for (std::size_t j = builder.built(); j < steps; ++j) builder.step(j, coarse);
        res.mn = SampledPath(0.0, dt, builder.values().leftCols(static_cast<Eigen::Index>(steps + 1)));

        RefinementLevel rec;
        rec.eps = cfg.eps;
        rec.tv_k = res.solution.tv_k;
        rec.gap = level == 0 ? std::numeric_limits<double>::quiet_NaN() : coarse_sup_gap(res.solution, prev.solution);
        history.push_back(rec);

        if (opts.max_halvings == 0 || (level > 0 && rec.gap <= opts.tol)) {
            res.solution.refinement_history = std::move(history);
            return res;
        }
        prev = std::move(res);
    }
    std::string msg = "solve_svi: consecutive-solution gap stayed above tol = " + format_double(opts.tol) + " after " +
                            std::to_string(history.size()) + " levels";
    throw NoConvergence(std::move(msg), std::move(history));
}

SviPathResult solve_svi_path(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                             const DiffusionSpec& g, const Vec& x0, const BrownianDriver& drv, int n,
                             const SkorohodOptions& opts) {
    if (drv.dims != g.noise_dims()) throw InvalidArgument("solve_svi: Brownian dimension does not match g");
    return solve_svi_on_path(phi, h, f, g, x0, brownian_path(drv), n, opts);
}

// ---------------------------------------------------------------------------
// Batches

unsigned batch_threads(unsigned requested) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("OBLIQUE_SKOROHOD_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

MonteCarloSummary monte_carlo(const SviProblem& problem, std::size_t n_paths, std::uint64_t base_seed,
                              const MonteCarloOptions& opts) {
    if (n_paths < 1) throw InvalidArgument("monte_carlo: n_paths must be >= 1");
    std::vector<PathRecord> records(n_paths);
    std::vector<PathFailure> failures(n_paths);

    auto run_one = [&](std::size_t i) {
        PathRecord& rec = records[i];
        rec.seed = base_seed + i;
        BrownianDriver drv = problem.driver;
        drv.seed = rec.seed;
        try {
            const auto res = solve_svi_path(problem.phi, problem.h, problem.f, problem.g, problem.x0, drv, problem.n,
                                            problem.opts);
            const auto& sol = res.solution;
            const auto cols = static_cast<Eigen::Index>(sol.coarse_steps() + 1);
            rec.x.resize(sol.x.dim(), cols);
            rec.k.resize(sol.x.dim(), cols);
            for (Eigen::Index c = 0; c < cols; ++c) {
                rec.x.col(c) = sol.x_coarse(static_cast<std::size_t>(c));
                rec.k.col(c) = sol.k_coarse(static_cast<std::size_t>(c));
            }
            rec.tv_k = sol.tv_k;
            rec.feasibility_defect = sol.diagnostics.feasibility_defect;
            rec.vi_residual = vi_residual(sol, problem.phi).residual;
            rec.ok = true;
        } catch (const Error& e) {
            failures[i] = {rec.seed, e.kind(), e.what()};
        }
    };

    const unsigned workers = std::min<std::size_t>(batch_threads(opts.threads), n_paths);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_paths; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_paths; i = next++) run_one(i);
            });
        for (auto& t : pool) t.join();
    }

    MonteCarloSummary out;
    out.n_paths = n_paths;
    out.dt = problem.driver.dt;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const PathRecord& rec = records[i];
        if (!rec.ok) {
            out.failures.push_back(failures[i]);
            continue;
        }
        if (out.succeeded == 0) {
            out.mean = Mat::Zero(rec.x.rows(), rec.x.cols());
            out.variance = Mat::Zero(rec.x.rows(), rec.x.cols());
        }
        ++out.succeeded;
        // Welford update, in seed order
        const Mat delta = rec.x - out.mean;
        out.mean += delta / static_cast<double>(out.succeeded);
        out.variance += delta.cwiseProduct(rec.x - out.mean);
        out.mean_tv_k += rec.tv_k;
        out.max_feasibility_defect = std::max(out.max_feasibility_defect, rec.feasibility_defect);
        out.max_vi_residual = std::max(out.max_vi_residual, rec.vi_residual);
    }
    if (out.succeeded > 0) {
        out.variance /= static_cast<double>(out.succeeded);
        out.mean_tv_k /= static_cast<double>(out.succeeded);
    }
    if (opts.keep_paths) out.paths = std::move(records);
    return out;
}

}  // namespace oblique
