#include "oblique/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "oblique/diagnostics.hpp"
#include "oblique/errors.hpp"
#include "oblique/format.hpp"

namespace oblique {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw InvalidArgument("scenario: " + where + ": " + what);
}

const json& need(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, "missing field \"" + key + "\"");
    return *it;
}

const json* maybe(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "must be finite");
    return x;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
    const json* v = maybe(obj, key);
    return v ? number(*v, where + "." + key) : fallback;
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<int>();
}

std::string kind_of(const json& obj, const std::string& where) {
    const json& k = need(obj, "kind", where);
    if (!k.is_string()) fail(where + ".kind", "expected a string");
    return k.get<std::string>();
}

Vec vector_of(const json& v, const std::string& where, int dim = -1) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    if (dim >= 0 && static_cast<int>(v.size()) != dim)
        fail(where, "expected " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

Mat matrix_of(const json& v, const std::string& where, int rows, int cols = -1) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
        fail(where, "expected " + std::to_string(rows) + " rows");
    if (cols < 0) {
        if (!v[0].is_array()) fail(where, "rows must be arrays");
        cols = static_cast<int>(v[0].size());
    }
    Mat out(rows, cols);
    for (int r = 0; r < rows; ++r) out.row(r) = vector_of(v[r], where + "[" + std::to_string(r) + "]", cols).transpose();
    return out;
}

Set parse_set(const json& j, int dim, const std::string& where) {
    const std::string kind = kind_of(j, where);
    if (kind == "box") return Set::box(vector_of(need(j, "lo", where), where + ".lo", dim),
                                       vector_of(need(j, "hi", where), where + ".hi", dim));
    if (kind == "ball") return Set::ball(vector_of(need(j, "center", where), where + ".center", dim),
                                         number(need(j, "radius", where), where + ".radius"));
    if (kind == "whole_space") return Set::whole_space(dim);
    if (kind == "halfspace_intersection" || kind == "polyhedron") {
        const json& list = need(j, "halfspaces", where);
        if (!list.is_array()) fail(where + ".halfspaces", "expected an array");
        std::vector<Halfspace> hs;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string w = where + ".halfspaces[" + std::to_string(i) + "]";
            hs.push_back({vector_of(need(list[i], "normal", w), w + ".normal", dim),
                          number(need(list[i], "offset", w), w + ".offset")});
        }
        return Set::halfspace_intersection(dim, std::move(hs));
    }
    fail(where + ".kind", "unknown set kind \"" + kind + "\"");
}

ConvexFunction parse_phi(const json& j, int dim) {
    const std::string where = "phi";
    const std::string kind = kind_of(j, where);
    const json* set = maybe(j, "set");
    Set domain = set ? parse_set(*set, dim, "phi.set") : Set::whole_space(dim);
    if (kind == "indicator") {
        if (!set) fail(where, "an indicator needs \"set\"");
        return ConvexFunction::indicator(std::move(domain));
    }
    if (kind == "quadratic_plus_indicator" || kind == "quadratic") {
        const json* q = maybe(j, "q");
        return ConvexFunction::quadratic_plus_indicator(matrix_of(need(j, "A", where), "phi.A", dim, dim),
                                                        q ? vector_of(*q, "phi.q", dim) : Vec::Zero(dim),
                                                        std::move(domain));
    }
    if (kind == "lipschitz_affine_plus_indicator" || kind == "affine")
        return ConvexFunction::lipschitz_affine_plus_indicator(vector_of(need(j, "a", where), "phi.a", dim),
                                                               number_or(j, "beta", 0.0, where), std::move(domain));
    fail("phi.kind", "unknown kind \"" + kind + "\"");
}

ObliqueField parse_field(const json& j, int dim) {
    const std::string where = "H";
    const std::string kind = kind_of(j, where);
    if (kind == "identity") return ObliqueField::identity(dim);
    const double c = number(need(j, "c", where), "H.c");
    const double b = number_or(j, "b", 0.0, where);
    auto mode = ObliqueField::Construction::checked;
    if (const json* m = maybe(j, "construction")) {
        if (*m == "unchecked") mode = ObliqueField::Construction::unchecked;
        else if (*m != "checked") fail("H.construction", "expected \"checked\" or \"unchecked\"");
    }
    if (kind == "constant") return ObliqueField::constant(matrix_of(need(j, "matrix", where), "H.matrix", dim, dim), c, b, mode);
    if (kind == "diagonal_affine")
        return ObliqueField::diagonal_affine(vector_of(need(j, "base", where), "H.base", dim),
                                             matrix_of(need(j, "slopes", where), "H.slopes", dim, dim), c, b);
    if (kind == "rotation_blend")
        return ObliqueField::rotation_blend(matrix_of(need(j, "A0", where), "H.A0", dim, dim),
                                            matrix_of(need(j, "A1", where), "H.A1", dim, dim),
                                            vector_of(need(j, "direction", where), "H.direction", dim),
                                            number_or(j, "offset", 0.0, where), c, b, mode);
    fail("H.kind", "unknown kind \"" + kind + "\"");
}

DriftSpec parse_drift(const json* j, int dim) {
    if (!j) return DriftSpec::zero(dim);
    const std::string where = "f";
    const std::string kind = kind_of(*j, where);
    if (kind == "zero") return DriftSpec::zero(dim);
    if (kind == "constant") return DriftSpec::constant(vector_of(need(*j, "value", where), "f.value", dim));
    const json* b0 = maybe(*j, "b0");
    const Vec offset = b0 ? vector_of(*b0, "f.b0", dim) : Vec::Zero(dim);
    if (kind == "affine") return DriftSpec::affine(matrix_of(need(*j, "A", where), "f.A", dim, dim), offset);
    if (kind == "time_modulated") {
        const json& p = need(*j, "profile", where);
        TimeProfile prof;
        prof.offset = number_or(p, "offset", 1.0, "f.profile");
        prof.amplitude = number_or(p, "amplitude", 0.0, "f.profile");
        prof.omega = number_or(p, "omega", 0.0, "f.profile");
        return DriftSpec::time_modulated(matrix_of(need(*j, "A", where), "f.A", dim, dim), offset, prof);
    }
    fail("f.kind", "unknown kind \"" + kind + "\"");
}

DiffusionSpec parse_diffusion(const json& j, int dim) {
    const std::string where = "g";
    const std::string kind = kind_of(j, where);
    if (kind == "zero") return DiffusionSpec::zero(dim, maybe(j, "dims") ? integer(j["dims"], "g.dims") : 1);
    if (kind == "constant") return DiffusionSpec::constant(matrix_of(need(j, "matrix", where), "g.matrix", dim));
    if (kind == "affine_in_x")
        return DiffusionSpec::affine_in_x(matrix_of(need(j, "matrix", where), "g.matrix", dim),
                                          number_or(j, "alpha", 1.0, where),
                                          vector_of(need(j, "a", where), "g.a", dim),
                                          number(need(j, "s_max", where), "g.s_max"));
    fail("g.kind", "unknown kind \"" + kind + "\"");
}

// Analytic kinds are sampled on the scenario grid; tabulated kinds keep their own grid.
SampledPath parse_input(const json& j, int dim, double dt, double horizon, const std::filesystem::path& base_dir) {
    const std::string where = "m";
    const std::string kind = kind_of(j, where);
    const std::size_t steps = grid_steps(horizon, dt, "horizon");
    if (kind == "zero") return SampledPath(0.0, dt, Mat::Zero(dim, static_cast<Eigen::Index>(steps + 1)));
    if (kind == "linear") {
        const Vec v = vector_of(need(j, "velocity", where), "m.velocity", dim);
        return SampledPath::sample(0.0, dt, steps, [&](double t) { return Vec(v * t); });
    }
    if (kind == "sinusoid") {
        const Vec a = vector_of(need(j, "amplitude", where), "m.amplitude", dim);
        const double period = number(need(j, "period", where), "m.period");
        if (!(period > 0)) fail("m.period", "must be > 0");
        return SampledPath::sample(0.0, dt, steps,
                                   [&](double t) { return Vec(a * std::sin(2.0 * std::numbers::pi * t / period)); });
    }
    if (kind == "samples") {
        const double sdt = number(need(j, "dt", where), "m.dt");
        const json& vals = need(j, "values", where);
        if (!vals.is_array() || vals.size() < 2) fail("m.values", "expected at least two nodes");
        Mat v(dim, static_cast<Eigen::Index>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const std::string w = "m.values[" + std::to_string(i) + "]";
            if (dim == 1 && vals[i].is_number()) v(0, static_cast<Eigen::Index>(i)) = number(vals[i], w);
            else v.col(static_cast<Eigen::Index>(i)) = vector_of(vals[i], w, dim);
        }
        return SampledPath(0.0, sdt, std::move(v));
    }
    if (kind == "csv") {
        const json& file = need(j, "file", where);
        if (!file.is_string()) fail("m.file", "expected a string");
        std::filesystem::path p = file.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        SampledPath path = load_path_csv(p.string());
        if (path.dim() != dim) fail("m.file", "has " + std::to_string(path.dim()) + " columns, expected " + std::to_string(dim));
        return path;
    }
    fail("m.kind", "unknown kind \"" + kind + "\"");
}

// Largest n' <= n with 1/n' a whole number of grid cells, so the delay only grows.
int snap_delay(int n, double dt) {
    for (int k = n; k >= 1; --k) {
        const double cells = 1.0 / (k * dt);
        if (std::abs(cells - std::round(cells)) <= 1e-9 * cells && std::round(cells) >= 1) return k;
    }
    throw GridMismatch("scenario: n_delay: no delay 1/n with n <= " + std::to_string(n) + " is a multiple of dt");
}

}  // namespace

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) fail("top level", "expected an object");
    json snapped = json::object();

    const Vec x0 = vector_of(need(doc, "x0", "top level"), "x0");
    const int dim = static_cast<int>(x0.size());
    if (dim < 1) fail("x0", "must not be empty");
    if (const json* d = maybe(doc, "dimension"); d && integer(*d, "dimension") != dim)
        fail("dimension", "does not match the length of x0");

    const json& phi_j = need(doc, "phi", "top level");
    ConvexFunction phi = parse_phi(phi_j, dim);
    if (!phi.domain().contains(x0)) fail("x0", "lies outside Dom(phi)");
    std::optional<double> r0, h0;
    std::optional<Vec> u0;
    if (const json* v = maybe(phi_j, "r0")) {
        r0 = number(*v, "phi.r0");
        if (!(*r0 > 0)) fail("phi.r0", "must be > 0");
    }
    if (const json* v = maybe(phi_j, "h0")) h0 = number(*v, "phi.h0");
    if (const json* v = maybe(phi_j, "u0")) u0 = vector_of(*v, "phi.u0", dim);
    else if (const json* w = maybe(doc, "u0")) u0 = vector_of(*w, "u0", dim);

    ObliqueField h = parse_field(need(doc, "H", "top level"), dim);
    DriftSpec f = parse_drift(maybe(doc, "f"), dim);
    std::optional<DiffusionSpec> g;
    if (const json* v = maybe(doc, "g")) g = parse_diffusion(*v, dim);

    const json* m_j = maybe(doc, "m");
    const json* b_j = maybe(doc, "brownian");
    if (!m_j && !b_j) fail("top level", "needs \"m\" (deterministic) or \"brownian\" (stochastic)");

    // grid step: explicit, else the Brownian grid, else a tabulated input's grid
    double dt = 0.0;
    if (const json* v = maybe(doc, "dt")) dt = number(*v, "dt");
    else if (b_j && maybe(*b_j, "dt")) dt = number((*b_j)["dt"], "brownian.dt");
    else if (m_j && maybe(*m_j, "dt")) dt = number((*m_j)["dt"], "m.dt");
    else fail("dt", "missing and not implied by \"brownian\" or \"m\"");
    if (!(dt > 0)) fail("dt", "must be > 0");
    if (b_j && maybe(*b_j, "dt") && number((*b_j)["dt"], "brownian.dt") != dt)
        fail("brownian.dt", "differs from the scenario dt");

    double requested_t = 1.0;
    if (const json* v = maybe(doc, "horizon")) requested_t = number(*v, "horizon");
    else if (b_j && maybe(*b_j, "horizon")) requested_t = number((*b_j)["horizon"], "brownian.horizon");
    if (!(requested_t > 0)) fail("horizon", "must be > 0");
    const double horizon = static_cast<double>(grid_steps_ceil(requested_t, dt)) * dt;
    snapped["horizon"] = {{"requested", requested_t}, {"used", horizon}};
    const std::size_t steps = grid_steps(horizon, dt, "horizon");

    std::optional<SampledPath> m;
    if (m_j) {
        SampledPath raw = parse_input(*m_j, dim, dt, horizon, base_dir);
        if (raw.node(0).norm() != 0.0) fail("m", "m(0) must be 0");
        if (std::abs(raw.t0()) > 1e-12) fail("m", "must start at t = 0");
        if (raw.end() < horizon - 1e-9 * dt) fail("m", "ends at " + format_double(raw.end()) + " before the horizon");
        const bool resample = raw.dt() != dt || raw.steps() != steps;
        if (resample && raw.dt() != dt) snapped["m_resampled_from_dt"] = raw.dt();
        m = resample ? SampledPath::sample(0.0, dt, steps, [&](double t) { return raw.at(std::min(t, raw.end())); })
                     : std::move(raw);
    }

    std::optional<BrownianDriver> brownian;
    std::optional<int> n_delay;
    if (b_j) {
        BrownianDriver drv;
        drv.dt = dt;
        drv.horizon = horizon;
        if (const json* s = maybe(*b_j, "seed")) drv.seed = s->get<std::uint64_t>();
        else if (const json* t = maybe(doc, "seed")) drv.seed = t->get<std::uint64_t>();
        drv.dims = maybe(*b_j, "dims") ? integer((*b_j)["dims"], "brownian.dims") : (g ? g->noise_dims() : 1);
        if (drv.dims < 1) fail("brownian.dims", "must be >= 1");
        if (g && g->noise_dims() != drv.dims) fail("brownian.dims", "does not match the columns of g");
        brownian = drv;
        const int requested_n = integer(need(doc, "n_delay", "top level"), "n_delay");
        if (requested_n < 1) fail("n_delay", "must be >= 1");
        n_delay = snap_delay(requested_n, dt);
        snapped["n_delay"] = {{"requested", requested_n}, {"used", *n_delay}};
    }

    SkorohodOptions opts;
    opts.horizon = horizon;
    double tol_vi = 1e-4;
    const json* tol_j = maybe(doc, "tolerances");
    const json empty = json::object();
    const json& tj = tol_j ? *tol_j : empty;
    opts.tol = number_or(tj, "tol", 1e-3, "tolerances");
    tol_vi = number_or(tj, "tol_vi", tol_vi, "tolerances");
    const double eps0 = number_or(tj, "eps0", 0.1 * horizon, "tolerances");
    if (const json* v = maybe(tj, "max_halvings")) opts.max_halvings = integer(*v, "tolerances.max_halvings");
    if (const json* v = maybe(tj, "substep_ratio")) opts.substep_ratio = integer(*v, "tolerances.substep_ratio");
    opts.guard_radius = number_or(tj, "guard_radius", opts.guard_radius, "tolerances");
    if (!(opts.tol > 0)) fail("tolerances.tol", "must be > 0");
    if (!(tol_vi > 0)) fail("tolerances.tol_vi", "must be > 0");
    if (opts.max_halvings < 0) fail("tolerances.max_halvings", "must be >= 0");
    if (opts.substep_ratio < 1) fail("tolerances.substep_ratio", "must be >= 1");
    if (!(eps0 >= dt)) fail("tolerances.eps0", "must be >= dt");
    opts.eps0 = eps_ladder(eps0, 0, dt).front();
    snapped["eps0"] = {{"requested", eps0}, {"used", opts.eps0}};
    snapped["eps_ladder"] = eps_ladder(opts.eps0, opts.max_halvings, dt);

    if (r0 && !u0) {
        Vec w = check_geometry(phi.domain(), *r0, h0).interior_witness;
        if (w.size() == dim) u0 = std::move(w);
    }

    return Scenario{dim,         std::move(phi), r0,       h0,          std::move(u0), std::move(h),
                    std::move(f), std::move(g),  std::move(m), brownian, n_delay,      x0,
                    horizon,     dt,             opts,     tol_vi,      doc,           std::move(snapped)};
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidArgument("scenario: cannot open " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("scenario: " + file.string() + ": " + e.what());
    }
    return parse_scenario(doc, file.parent_path());
}

const SampledPath& require_m(const Scenario& s) {
    if (!s.m) throw InvalidArgument("scenario: deterministic runs need \"m\"");
    return *s.m;
}

SviProblem make_svi_problem(const Scenario& s) {
    if (!s.brownian || !s.n_delay) throw InvalidArgument("scenario: stochastic runs need \"brownian\" and \"n_delay\"");
    DiffusionSpec g = s.g ? *s.g : DiffusionSpec::zero(s.dim, s.brownian->dims);
    return SviProblem{s.phi, s.h, s.f, std::move(g), s.x0, *s.brownian, *s.n_delay, s.opts};
}

std::vector<Vec> domain_probes(const Set& domain, int count, std::uint64_t seed) {
    const Vec w = domain.witness();
    std::vector<Vec> out = default_test_points(domain, w);
    const int d = domain.dim();
    Vec lo, hi;
    if (domain.kind() == Set::Kind::box) {
        lo = domain.lo();
        hi = domain.hi();
    } else if (domain.kind() == Set::Kind::ball) {
        lo = domain.center().array() - domain.radius();
        hi = domain.center().array() + domain.radius();
    } else {
        lo = w.array() - 2.0;
        hi = w.array() + 2.0;
    }
    std::uint64_t counter = 0;
    for (int i = 0; i < count; ++i) {
        Vec z(d);
        for (int c = 0; c < d; ++c) z(c) = lo(c) + (hi(c) - lo(c)) * uniform_unit(seed, counter++);
        out.push_back(domain.project(z));
    }
    return out;
}

}  // namespace oblique
