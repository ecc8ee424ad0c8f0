#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oblique/diagnostics.hpp"
#include "oblique/errors.hpp"
#include "oblique/format.hpp"
#include "oblique/scenario.hpp"

namespace oblique::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
    std::string scenario;
    std::string out_dir = ".";
    std::size_t paths = 0;
    bool dump_paths = false;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json history_json(const std::vector<RefinementLevel>& history) {
    json a = json::array();
    for (const auto& l : history) a.push_back({{"eps", l.eps}, {"gap", number_or_null(l.gap)}, {"tv_k", l.tv_k}});
    return a;
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + file.string());
    out << text;
    if (!out) throw InvalidArgument("write failed for " + file.string());
}

void write_json(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

// t, x_1..x_d, k_1..k_d on the input grid.
std::string solution_csv(const SkorohodSolution& sol) {
    const int d = sol.x.dim();
    std::string s = "t";
    for (int i = 1; i <= d; ++i) s += ",x_" + std::to_string(i);
    for (int i = 1; i <= d; ++i) s += ",k_" + std::to_string(i);
    s += '\n';
    const double dt = sol.x.dt() * static_cast<double>(sol.stride);
    for (std::size_t i = 0; i <= sol.coarse_steps(); ++i) {
        s += format_double(static_cast<double>(i) * dt);
        const Vec x = sol.x_coarse(i), k = sol.k_coarse(i);
        for (int c = 0; c < d; ++c) s += "," + format_double(x(c));
        for (int c = 0; c < d; ++c) s += "," + format_double(k(c));
        s += '\n';
    }
    return s;
}

std::string record_csv(const PathRecord& r, double dt) {
    const auto d = static_cast<int>(r.x.rows());
    std::string s = "t";
    for (int i = 1; i <= d; ++i) s += ",x_" + std::to_string(i);
    for (int i = 1; i <= d; ++i) s += ",k_" + std::to_string(i);
    s += '\n';
    for (Eigen::Index i = 0; i < r.x.cols(); ++i) {
        s += format_double(static_cast<double>(i) * dt);
        for (int c = 0; c < d; ++c) s += "," + format_double(r.x(c, i));
        for (int c = 0; c < d; ++c) s += "," + format_double(r.k(c, i));
        s += '\n';
    }
    return s;
}

json header(const std::string& mode, const Scenario& sc, const Flags& flags) {
    json j;
    j["mode"] = mode;
    j["version"] = OBLIQUE_VERSION;
    j["generator"] = std::string(kGeneratorId);
    j["scenario_file"] = flags.scenario;
    j["config"] = sc.config;
    j["snapped"] = sc.snapped;
    json overrides = json::object();
    if (flags.tol) overrides["tol"] = *flags.tol;
    if (flags.seed) overrides["seed"] = *flags.seed;
    if (flags.paths) overrides["paths"] = flags.paths;
    j["overrides"] = overrides;
    j["resolved"] = {{"dt", sc.dt},
                     {"horizon", sc.horizon},
                     {"tol", sc.opts.tol},
                     {"tol_vi", sc.tol_vi},
                     {"eps0", sc.opts.eps0},
                     {"max_halvings", sc.opts.max_halvings},
                     {"substep_ratio", sc.opts.substep_ratio},
                     {"system", system_tag(sc.phi, sc.h)}};
    return j;
}

json diagnostics_json(const SkorohodSolution& sol, const Scenario& sc) {
    json d;
    d["feasibility_defect"] = sol.diagnostics.feasibility_defect;
    d["max_penalty_gradient"] = sol.diagnostics.max_penalty_gradient;
    d["identity_residual"] = sol.diagnostics.identity_residual;
    d["substeps"] = sol.diagnostics.substeps;

    ViOptions vo;
    if (sc.u0) vo.u0 = sc.u0;
    const ViReport vi = vi_residual(sol, sc.phi, vo);
    const double vi_tol = sc.tol_vi * (1.0 + sol.tv_k);
    d["vi"] = {{"residual", vi.residual},
               {"tolerance", vi_tol},
               {"pass", vi.residual <= vi_tol},
               {"worst_window", {vi.worst_window.s, vi.worst_window.t}},
               {"worst_test_fn", vi.worst_test_fn},
               {"evaluations", vi.evaluations}};

    if (sc.r0 && sc.u0) {
        try {
            const AnnexBReport ab = annexB_bound(sol, sc.phi, *sc.u0, *sc.r0);
            d["boundary_bound"] = {{"lhs", ab.lhs},       {"rhs", ab.rhs},           {"margin", ab.margin},
                                   {"phi_sharp", ab.phi_sharp}, {"tolerance", ab.tolerance}, {"pass", ab.pass},
                                   {"u0", vec_json(*sc.u0)}, {"r0", *sc.r0}};
        } catch (const InvalidArgument& e) {
            d["boundary_bound"] = {{"skipped", e.what()}};
        }
    } else {
        d["boundary_bound"] = {{"skipped", "no r0 declared"}};
    }

    if (sol.refinement_history.size() >= 2) {
        const AprioriReport ap = apriori_monitor(sol.refinement_history);
        d["apriori"] = {{"tv_ratio", ap.tv_ratio}, {"stabilized", ap.stabilized}};
    } else {
        d["apriori"] = {{"skipped", "fewer than two refinement levels"}};
    }
    return d;
}

json solution_json(const SkorohodSolution& sol, const Scenario& sc) {
    json j;
    j["tv_k"] = sol.tv_k;
    j["eps"] = sol.eps;
    j["stride"] = sol.stride;
    j["refinement_history"] = history_json(sol.refinement_history);
    j["diagnostics"] = diagnostics_json(sol, sc);
    const std::size_t last = sol.coarse_steps();
    j["final"] = {{"t", sc.horizon}, {"x", vec_json(sol.x_coarse(last))}, {"k", vec_json(sol.k_coarse(last))}};
    return j;
}

void apply_overrides(Scenario& sc, const Flags& flags) {
    if (flags.tol) {
        if (!(*flags.tol > 0)) throw InvalidArgument("--tol must be > 0");
        sc.opts.tol = *flags.tol;
    }
    if (flags.seed && sc.brownian) sc.brownian->seed = *flags.seed;
}

void say(std::ostream& out, const Flags& flags, const std::string& line) {
    if (!flags.quiet) out << line << '\n';
}

int cmd_validate(const Scenario& sc, const Flags& flags, std::ostream& out) {
    json rep = header("validate", sc, flags);
    bool pass = true;

    const auto probes = domain_probes(sc.phi.domain(), 200);
    const ValidationReport fr = validate_field(sc.h, probes);
    json field = {{"pass", fr.pass},
                  {"max_symmetry_defect", fr.max_symmetry_defect},
                  {"min_eigenvalue", fr.min_eigenvalue},
                  {"max_eigenvalue", fr.max_eigenvalue},
                  {"lipschitz_h", fr.lipschitz_h},
                  {"lipschitz_h_inv", fr.lipschitz_h_inv},
                  {"declared_c", fr.declared_c},
                  {"declared_b", fr.declared_b},
                  {"message", fr.message}};
    if (fr.violating_pair) field["violating_pair"] = {fr.violating_pair->first, fr.violating_pair->second};
    rep["field"] = field;
    pass = pass && fr.pass;

    if (sc.r0) {
        const GeometryReport gr = check_geometry(sc.phi.domain(), *sc.r0, sc.h0);
        rep["geometry"] = {{"pass", gr.pass},
                           {"r0", gr.r0},
                           {"h0", gr.h0},
                           {"h0_computed", gr.h0_computed},
                           {"probe_max_distance", gr.probe_max_distance},
                           {"probes", gr.probes},
                           {"interior_witness", vec_json(gr.interior_witness)},
                           {"message", gr.message}};
        pass = pass && gr.pass;
    } else {
        rep["geometry"] = {{"skipped", "no r0 declared"}};
    }

    std::vector<double> times;
    for (int i = 0; i <= 8; ++i) times.push_back(sc.horizon * i / 8.0);
    const std::string drift = check_drift_bound(sc.f, sc.phi.domain(), times, probes);
    rep["drift"] = {{"pass", drift.empty()}, {"message", drift}};
    pass = pass && drift.empty();

    rep["convex"] = {{"describe", sc.phi.describe()}, {"lipschitz_L", number_or_null(sc.phi.lipschitz_L())},
                     {"x0_in_domain", true}};
    rep["pass"] = pass;

    const std::string text = rep.dump(2) + "\n";
    if (!flags.quiet) out << text;
    fs::create_directories(flags.out_dir);
    write_text(fs::path(flags.out_dir) / "validate.json", text);
    return pass ? ok : validation_failure;
}

int cmd_solve_det(const Scenario& sc, const Flags& flags, std::ostream& out) {
    const SkorohodSolution sol = solve_skorohod(sc.phi, sc.h, sc.f, require_m(sc), sc.x0, sc.opts);
    json j = header("solve-det", sc, flags);
    j.update(solution_json(sol, sc));
    fs::create_directories(flags.out_dir);
    write_text(fs::path(flags.out_dir) / "solution.csv", solution_csv(sol));
    write_json(fs::path(flags.out_dir) / "summary.json", j);
    say(out, flags, "solve-det: tv_k " + format_double(sol.tv_k) + ", eps " + format_double(sol.eps) + ", " +
                        std::to_string(sol.refinement_history.size()) + " levels");
    return ok;
}

int cmd_solve_svi(const Scenario& sc, const Flags& flags, std::ostream& out) {
    const SviProblem prob = make_svi_problem(sc);
    fs::create_directories(flags.out_dir);
    json j = header("solve-svi", sc, flags);
    j["n_delay"] = prob.n;
    j["seed"] = prob.driver.seed;

    if (flags.paths == 0) {
        const SviPathResult res = solve_svi_path(prob.phi, prob.h, prob.f, prob.g, prob.x0, prob.driver, prob.n, prob.opts);
        j.update(solution_json(res.solution, sc));
        j["mn_sup"] = res.mn.sup_norm();
        write_text(fs::path(flags.out_dir) / "solution.csv", solution_csv(res.solution));
        write_json(fs::path(flags.out_dir) / "summary.json", j);
        say(out, flags, "solve-svi: seed " + std::to_string(prob.driver.seed) + ", tv_k " + format_double(res.solution.tv_k));
        return ok;
    }

    MonteCarloOptions mo;
    mo.keep_paths = flags.dump_paths;
    const MonteCarloSummary mc = monte_carlo(prob, flags.paths, prob.driver.seed, mo);
    j["batch"] = {{"n_paths", mc.n_paths},
                  {"succeeded", mc.succeeded},
                  {"base_seed", prob.driver.seed},
                  {"mean_tv_k", mc.mean_tv_k},
                  {"max_feasibility_defect", mc.max_feasibility_defect},
                  {"max_vi_residual", mc.max_vi_residual}};
    json failures = json::array();
    for (const auto& f : mc.failures) failures.push_back({{"seed", f.seed}, {"kind", f.kind}, {"message", f.message}});
    j["batch"]["failures"] = failures;

    if (mc.succeeded > 0) {
        const Eigen::Index last = mc.mean.cols() - 1;
        j["batch"]["mean_final"] = vec_json(mc.mean.col(last));
        j["batch"]["variance_final"] = vec_json(mc.variance.col(last));
        const int d = static_cast<int>(mc.mean.rows());
        std::string s = "t";
        for (int i = 1; i <= d; ++i) s += ",mean_x_" + std::to_string(i);
        for (int i = 1; i <= d; ++i) s += ",var_x_" + std::to_string(i);
        s += '\n';
        for (Eigen::Index i = 0; i <= last; ++i) {
            s += format_double(static_cast<double>(i) * mc.dt);
            for (int c = 0; c < d; ++c) s += "," + format_double(mc.mean(c, i));
            for (int c = 0; c < d; ++c) s += "," + format_double(mc.variance(c, i));
            s += '\n';
        }
        write_text(fs::path(flags.out_dir) / "mean.csv", s);
    }
    if (flags.dump_paths) {
        const fs::path dir = fs::path(flags.out_dir) / "paths";
        fs::create_directories(dir);
        for (const auto& r : mc.paths)
            if (r.ok) write_text(dir / ("path_" + std::to_string(r.seed) + ".csv"), record_csv(r, mc.dt));
    }
    write_json(fs::path(flags.out_dir) / "summary.json", j);
    say(out, flags, "solve-svi: " + std::to_string(mc.succeeded) + "/" + std::to_string(mc.n_paths) + " paths, mean tv_k " +
                        format_double(mc.mean_tv_k));
    return mc.failures.empty() ? ok : solver_failure;
}

int cmd_converge(const Scenario& sc, const Flags& flags, std::ostream& out) {
    const SkorohodSolution sol = refinement_ladder(sc.phi, sc.h, sc.f, require_m(sc), sc.x0, sc.opts);
    json j = header("converge", sc, flags);
    j.update(solution_json(sol, sc));
    json slope = nullptr;
    std::string note;
    try {
        if (auto s = convergence_slope(sol.refinement_history)) slope = *s;
        else note = "a gap is exactly zero: converged within the ladder";
    } catch (const InvalidArgument& e) {
        note = e.what();
    }
    j["convergence_slope"] = slope;
    if (!note.empty()) j["convergence_note"] = note;
    fs::create_directories(flags.out_dir);
    write_text(fs::path(flags.out_dir) / "solution.csv", solution_csv(sol));
    write_json(fs::path(flags.out_dir) / "summary.json", j);
    say(out, flags, "converge: slope " + (slope.is_null() ? std::string("n/a") : format_double(slope.get<double>())) +
                        " over " + std::to_string(sol.refinement_history.size()) + " levels");
    return ok;
}

void emit_error(std::ostream& err, const Error& e) {
    json j = {{"error", e.kind()}, {"message", e.what()}};
    if (const auto* nc = dynamic_cast<const NoConvergence*>(&e)) j["history"] = history_json(nc->history());
    if (const auto* sb = dynamic_cast<const StabilityBreach*>(&e)) {
        j["time"] = sb->time();
        j["norm"] = sb->norm();
    }
    err << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Oblique Skorohod problems and stochastic variational inequalities"};
    app.require_subcommand(1);
    Flags flags;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", flags.scenario, "Scenario JSON file")->required();
        sub->add_option("--out", flags.out_dir, "Output directory");
        sub->add_option("--tol", tol, "Override tolerances.tol");
        sub->add_option("--seed", seed, "Override the Brownian seed");
        sub->add_flag("--quiet", flags.quiet, "No progress output");
    };
    auto* validate = app.add_subcommand("validate", "Validate field, domain geometry and drift without solving");
    auto* det = app.add_subcommand("solve-det", "Deterministic solve with diagnostics");
    auto* svi = app.add_subcommand("solve-svi", "Stochastic solve on one path or a Monte Carlo batch");
    auto* conv = app.add_subcommand("converge", "Full refinement ladder and convergence slope");
    for (auto* s : {validate, det, svi, conv}) add_common(s);
    svi->add_option("--paths", flags.paths, "Number of Monte Carlo paths (seeds seed..seed+N-1)");
    svi->add_flag("--dump-paths", flags.dump_paths, "Write one CSV per path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
        return validation_failure;
    }
    flags.tol = tol;
    flags.seed = seed;

    // Anything raised before the solve starts is a validation failure.
    std::optional<Scenario> sc;
    try {
        sc.emplace(load_scenario(flags.scenario));
        apply_overrides(*sc, flags);
        if (validate->parsed()) return cmd_validate(*sc, flags, out);
    } catch (const Error& e) {
        emit_error(err, e);
        return validation_failure;
    } catch (const std::exception& e) {
        err << json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
        return validation_failure;
    }

    try {
        if (det->parsed()) return cmd_solve_det(*sc, flags, out);
        if (svi->parsed()) return cmd_solve_svi(*sc, flags, out);
        return cmd_converge(*sc, flags, out);
    } catch (const NoConvergence& e) {
        emit_error(err, e);
        return solver_failure;
    } catch (const StabilityBreach& e) {
        emit_error(err, e);
        return solver_failure;
    } catch (const ProjectionError& e) {
        emit_error(err, e);
        return solver_failure;
    } catch (const Error& e) {
        emit_error(err, e);
        return validation_failure;
    } catch (const std::exception& e) {
        err << json{{"error", "io"}, {"message", e.what()}}.dump() << '\n';
        return validation_failure;
    }
}

}  // namespace oblique::cli
