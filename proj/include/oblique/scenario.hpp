#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "oblique/sde.hpp"

namespace oblique {

/// A parsed and validated scenario file. Declarations that need snapping
/// to the grid (horizon, eps0, the delay 1/n) are stored snapped; the
/// `snapped` object records what was requested and what is used.
struct Scenario {
    int dim = 0;
    ConvexFunction phi;
    std::optional<double> r0;  // declared interiority radius of D
    std::optional<double> h0;
    std::optional<Vec> u0;  // interior point for the boundary diagnostics
    ObliqueField h;
    DriftSpec f;
    std::optional<DiffusionSpec> g;
    std::optional<SampledPath> m;             // on the scenario grid, horizon long
    std::optional<BrownianDriver> brownian;   // horizon and dt filled in
    std::optional<int> n_delay;
    Vec x0;
    double horizon = 0.0;
    double dt = 0.0;
    SkorohodOptions opts;
    double tol_vi = 1e-4;
    nlohmann::json config;   // the input as read
    nlohmann::json snapped;  // requested vs used values
};

/// Parses a scenario object. Relative CSV paths resolve against `base_dir`.
/// Throws InvalidArgument (or GridMismatch) with a message naming the field.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

Scenario load_scenario(const std::filesystem::path& file);

/// The deterministic input; throws InvalidArgument when "m" is absent.
const SampledPath& require_m(const Scenario& s);

/// The stochastic ingredients; throws InvalidArgument when "brownian" or "n_delay" is absent.
SviProblem make_svi_problem(const Scenario& s);

/// Probe cloud for field validation: D's witness, the default test points and
/// `count` pseudo-random points of D (of a cube around the witness when D is unbounded).
std::vector<Vec> domain_probes(const Set& domain, int count, std::uint64_t seed = 0x9e3779b9);

}  // namespace oblique
