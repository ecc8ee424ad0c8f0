#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oblique/det_solver.hpp"

namespace oblique {

/// Identity of the Gaussian generator, recorded in every stochastic output.
inline constexpr std::string_view kGeneratorId = "splitmix64-counter/box-muller v1";

/// Standard normal draw number `counter` of the stream `seed`. Counter based:
/// any draw can be produced without generating the ones before it.
double standard_normal(std::uint64_t seed, std::uint64_t counter);

/// Uniform draw in [0, 1) from the same counter-based stream family.
double uniform_unit(std::uint64_t seed, std::uint64_t counter);

struct BrownianDriver {
    std::uint64_t seed = 0;
    double dt = 1e-3;
    int dims = 1;
    double horizon = 1.0;
};

/// B on the grid i dt with B(0) = 0; increment i of coordinate c uses draw
/// i * dims + c of the seed's stream.
SampledPath brownian_path(const BrownianDriver& drv);

/// Diffusion coefficient g(t, x), a d x k matrix.
///  - zero
///  - constant G
///  - affine_in_x: s(x) G with s(x) = clamp(alpha + <a, x>, -s_max, s_max)
class DiffusionSpec {
public:
    enum class Kind { zero, constant, affine_in_x };

    static DiffusionSpec zero(int dim, int noise_dims);
    static DiffusionSpec constant(Mat g);
    static DiffusionSpec affine_in_x(Mat g, double alpha, Vec a, double s_max);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return static_cast<int>(g_.rows()); }
    int noise_dims() const noexcept { return static_cast<int>(g_.cols()); }

    Mat eval(double t, const Vec& x) const;
    /// g#(t) = sup_{x in D} ||g(t, x)|| (spectral norm).
    double bound(double t, const Set& domain) const;
    /// l(t) = ||G|| |a|.
    double lipschitz(double t) const;

    std::string describe() const;

private:
    DiffusionSpec(Kind kind, Mat g) : kind_(kind), g_(std::move(g)) {}

    Kind kind_;
    Mat g_;
    double alpha_ = 1.0;
    Vec a_;
    double s_max_ = 0.0;
    double g_norm_ = 0.0;
};

/// Incremental construction of
///   M(t) = int_0^t f(s, pi_D X(s - delay)) ds + (1/delay) int_{t-delay}^{t} I(s) ds,
///   I(s) = int_0^s g(r, pi_D X(r - delay)) dB(r),
/// on the grid of B. The Ito sum uses left endpoints, the drift a left
/// rectangle rule, and the window average the right-endpoint rectangle rule
/// over the delay/dt cells with I = 0 before time 0. X is frozen at x0 for
/// negative times.
class MnBuilder {
public:
    MnBuilder(const DriftSpec& f, const DiffusionSpec& g, const Set& domain, const SampledPath& b, const Vec& x0,
              std::size_t delay_cells);

    /// Returns M(t_{j+1}) - M(t_j). Calls must come in order j = 0, 1, ...;
    /// `states` holds X at grid nodes 0..j (later columns are not read).
    Vec step(std::size_t j, const Mat& states);

    std::size_t built() const noexcept { return next_; }
    /// d x (N+1) node values; only the first built() + 1 columns are set.
    const Mat& values() const noexcept { return m_; }

private:
    const DriftSpec& f_;
    const DiffusionSpec& g_;
    const Set& domain_;
    const SampledPath& b_;
    Vec x0_;
    std::size_t q_;
    std::size_t next_ = 0;
    Mat ito_;      // I at grid nodes
    Vec drift_;    // accumulated drift integral
    Vec window_;   // running sum of the last q values of I
    Mat m_;
};

/// Number of grid cells in 1/n; throws GridMismatch when 1/n is not a multiple of dt.
std::size_t delay_cells_for(int n, double dt);

/// M^n from a given state history on the grid of B.
SampledPath build_Mn(const DriftSpec& f, const DiffusionSpec& g, const Set& domain, const SampledPath& x_hist,
                     const SampledPath& b, int n);

struct SviPathResult {
    SkorohodSolution solution;
    SampledPath mn;  // M^n on the input grid for the final eps
};

/// Pathwise solve on a given Brownian path: for each eps of the ladder one
/// causal pass builds M^n cell by cell while the penalized scheme consumes it.
/// M^n is used as is (it is already a window average) and not mollified again.
SviPathResult solve_svi_on_path(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                                const DiffusionSpec& g, const Vec& x0, const SampledPath& b, int n,
                                const SkorohodOptions& opts = {});

SviPathResult solve_svi_path(const ConvexFunction& phi, const ObliqueField& h, const DriftSpec& f,
                             const DiffusionSpec& g, const Vec& x0, const BrownianDriver& drv, int n,
                             const SkorohodOptions& opts = {});

struct SviProblem {
    ConvexFunction phi;
    ObliqueField h;
    DriftSpec f;
    DiffusionSpec g;
    Vec x0;
    BrownianDriver driver;  // seed is replaced per path
    int n = 1;
    SkorohodOptions opts;
};

struct PathFailure {
    std::uint64_t seed = 0;
    std::string kind;
    std::string message;
};

struct PathRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    Mat x;  // input-grid nodes, d x (N+1)
    Mat k;
    double tv_k = 0.0;
    double feasibility_defect = 0.0;
    double vi_residual = 0.0;
};

struct MonteCarloSummary {
    std::size_t n_paths = 0;
    std::size_t succeeded = 0;
    double dt = 0.0;
    Mat mean;      // node-wise over successful paths
    Mat variance;  // population variance (divisor = successful paths)
    double mean_tv_k = 0.0;
    double max_feasibility_defect = 0.0;
    double max_vi_residual = 0.0;
    std::vector<PathFailure> failures;
    std::vector<PathRecord> paths;  // in seed order, filled when keep_paths
};

struct MonteCarloOptions {
    unsigned threads = 0;  // 0: OBLIQUE_SKOROHOD_THREADS or hardware concurrency
    bool keep_paths = false;
};

/// Worker count: the request if nonzero, capped by OBLIQUE_SKOROHOD_THREADS.
unsigned batch_threads(unsigned requested);

/// Runs seeds base_seed .. base_seed + n_paths - 1, merging in seed order.
/// Per-path errors are collected, not rethrown.
MonteCarloSummary monte_carlo(const SviProblem& problem, std::size_t n_paths, std::uint64_t base_seed,
                              const MonteCarloOptions& opts = {});

}  // namespace oblique
