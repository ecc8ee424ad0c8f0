#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oblique {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable tag used in CLI error objects.
    virtual const char* kind() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
};

/// A delay, window or horizon is not an integer multiple of the grid step.
class GridMismatch : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "grid_mismatch"; }
};

/// An inner iteration (polyhedral projection, constrained prox) missed its tolerance.
class ProjectionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "projection_nonconvergence"; }
};

/// The penalized state left the guard ball; the scenario is mis-scaled.
class StabilityBreach : public Error {
public:
    StabilityBreach(const std::string& what, double time, double norm)
        : Error(what), time_(time), norm_(norm) {}
    const char* kind() const noexcept override { return "stability_breach"; }
    double time() const noexcept { return time_; }
    double norm() const noexcept { return norm_; }

private:
    double time_;
    double norm_;
};

struct RefinementLevel {
    double eps = 0.0;
    double gap = 0.0;  // sup-node gap to the previous level; NaN on the first level
    double tv_k = 0.0;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, std::vector<RefinementLevel> history)
        : Error(what), history_(std::move(history)) {}
    const char* kind() const noexcept override { return "no_convergence"; }
    const std::vector<RefinementLevel>& history() const noexcept { return history_; }

private:
    std::vector<RefinementLevel> history_;
};

/// Internal invariant broken (e.g. a catalog field produced a singular matrix).
class InternalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "internal_error"; }
};

}  // namespace oblique
