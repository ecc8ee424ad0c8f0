#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "oblique/linalg.hpp"

namespace oblique {

/// How a path is read at times before its first node.
enum class Extension {
    zero,    // p(s) = 0
    frozen,  // p(s) = p(t0)
};

/// Continuous path sampled on the uniform grid t_i = t0 + i dt, i = 0..N,
/// read between nodes by linear interpolation.
class SampledPath {
public:
    SampledPath() = default;
    /// `values` is d x (N+1), one column per node. Requires N >= 1, dt > 0,
    /// and finite entries.
    SampledPath(double t0, double dt, Mat values);

    /// Samples `fn` on [t0, t0 + steps dt].
    static SampledPath sample(double t0, double dt, std::size_t steps, const std::function<Vec(double)>& fn);

    int dim() const noexcept { return static_cast<int>(values_.rows()); }
    /// Number of grid cells N (nodes are N + 1).
    std::size_t steps() const noexcept { return static_cast<std::size_t>(values_.cols()) - 1; }
    std::size_t nodes() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    double end() const noexcept { return t0_ + static_cast<double>(steps()) * dt_; }
    double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) * dt_; }

    auto node(std::size_t i) const { return values_.col(static_cast<Eigen::Index>(i)); }
    const Mat& values() const noexcept { return values_; }

    /// Value at time t. Before t0 the extension rule applies; after the end
    /// InvalidArgument is thrown (beyond a 1e-9 dt slack).
    Vec at(double t, Extension ext = Extension::zero) const;

    /// sup_i |p(t_i)|.
    double sup_norm() const;

private:
    double t0_ = 0.0;
    double dt_ = 1.0;
    Mat values_;
};

/// Sum of increment norms over the grid nodes in [from, to], with the
/// endpoints read by interpolation. Exact for piecewise-linear paths.
double total_variation(const SampledPath& p, double from, double to);
inline double total_variation(const SampledPath& p) { return total_variation(p, p.t0(), p.end()); }

/// max |p(t_i) - p(t_j)| over node pairs with |t_i - t_j| <= delta.
double modulus_of_continuity(const SampledPath& p, double delta);

/// mu_p(delta) = delta + modulus_of_continuity(p, delta).
double mu_of(const SampledPath& p, double delta);

struct Mollified {
    SampledPath path;
    double eps = 0.0;        // window actually used (a grid multiple)
    bool snapped = false;    // true when the requested window was rounded up
};

/// Trailing window average m_eps(t) = (1/eps) int_{t-eps}^{t} m(s) ds by the
/// trapezoidal rule on the grid, with m(s) = 0 before t0. The window is
/// rounded up to the next multiple of dt; eps < dt is rejected.
Mollified mollify(const SampledPath& m, double eps);

/// Forward differences (p_{i+1} - p_i) / dt with the last value repeated.
SampledPath derivative(const SampledPath& p);

/// Pointwise difference a - b on a shared grid.
SampledPath difference(const SampledPath& a, const SampledPath& b);

/// Reads a path from CSV text with header "t,v1,...,vd" and a strictly
/// increasing uniform time column.
SampledPath read_path_csv(const std::string& text);
SampledPath load_path_csv(const std::string& file);

/// Number of grid steps in `duration`, provided it is an integer multiple of
/// dt (relative slack 1e-9); throws GridMismatch otherwise.
std::size_t grid_steps(double duration, double dt, const char* what);

/// Smallest multiple of dt that is >= duration (same slack as grid_steps).
std::size_t grid_steps_ceil(double duration, double dt);

}  // namespace oblique
