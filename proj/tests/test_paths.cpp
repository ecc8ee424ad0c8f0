#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oblique/errors.hpp"
#include "oblique/paths.hpp"
#include "support/catalog.hpp"

using namespace oblique;
using namespace oblique::testing;

namespace {

SampledPath scalar_path(double t0, double dt, std::initializer_list<double> xs) {
    Mat v(1, static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(0, i++) = x;
    return SampledPath(t0, dt, v);
}

SampledPath random_walk(Sampler& s, int d, std::size_t steps, double dt) {
    Mat v(d, static_cast<Eigen::Index>(steps + 1));
    v.col(0).setZero();
    for (std::size_t i = 1; i <= steps; ++i)
        v.col(static_cast<Eigen::Index>(i)) = v.col(static_cast<Eigen::Index>(i - 1)) + s.cube(d, std::sqrt(dt));
    return SampledPath(0.0, dt, v);
}

// Midpoint quadrature of (1/eps) int_{t-eps}^{t} f(s) ds with f = 0 for s < 0.
double window_average(const std::function<double(double)>& f, double t, double eps, int pieces = 100'000) {
    double acc = 0;
    const double h = eps / pieces;
    for (int i = 0; i < pieces; ++i) {
        const double s = t - eps + (i + 0.5) * h;
        acc += s < 0 ? 0.0 : f(s);
    }
    return acc * h / eps;
}

}  // namespace

TEST_CASE("construction and evaluation") {
    const auto p = scalar_path(0.0, 0.5, {0, 1, 0.5});
    CHECK(p.steps() == 2);
    CHECK(p.end() == 1.0);
    CHECK(p.at(0.25)(0) == doctest::Approx(0.5));
    CHECK(p.at(-1.0, Extension::zero)(0) == 0.0);
    const auto q = scalar_path(0.0, 1.0, {3, 4});
    CHECK(q.at(-1.0, Extension::frozen)(0) == 3.0);
    CHECK(q.at(-1.0, Extension::zero)(0) == 0.0);
    CHECK_THROWS_AS(q.at(1.5), InvalidArgument);
    CHECK_THROWS_AS(SampledPath(0.0, 1.0, Mat::Zero(1, 1)), InvalidArgument);
    CHECK_THROWS_AS(SampledPath(0.0, 0.0, Mat::Zero(1, 2)), InvalidArgument);
    CHECK_THROWS_AS(scalar_path(0.0, 1.0, {0, std::nan("")}), InvalidArgument);
}

TEST_CASE("total_variation") {
    CHECK(total_variation(scalar_path(0, 1, {0, 1, 0.5})) == doctest::Approx(1.5));
    CHECK(total_variation(scalar_path(0, 1, {2, 2, 2, 2})) == 0.0);
    CHECK(total_variation(scalar_path(0, 1, {1, 2, 4, 9})) == doctest::Approx(8.0));
    // interpolated endpoints
    CHECK(total_variation(scalar_path(0, 1, {0, 1, 0.5}), 0.5, 1.5) == doctest::Approx(0.75));
    const auto p = scalar_path(0, 1, {0, 1, 0.5});
    CHECK_THROWS_AS(total_variation(p, 1.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(total_variation(p, -0.5, 1.0), InvalidArgument);
    CHECK_THROWS_AS(total_variation(p, 0.0, 3.0), InvalidArgument);

    SUBCASE("additive over adjacent intervals") {
        Sampler s(9);
        for (int trial = 0; trial < 200; ++trial) {
            const auto w = random_walk(s, 2, 64, 1.0 / 64);
            double a = s.uniform(0, 1), c = s.uniform(0, 1);
            if (a > c) std::swap(a, c);
            const double b = s.uniform(a, c);
            CHECK(std::abs(total_variation(w, a, b) + total_variation(w, b, c) - total_variation(w, a, c)) <= 1e-12);
        }
    }
}

TEST_CASE("modulus_of_continuity") {
    const auto lin = SampledPath::sample(0, 0.01, 100, [](double t) { return vec({3 * t, 4 * t}); });
    CHECK(modulus_of_continuity(lin, 0.1) == doctest::Approx(0.5));
    CHECK(modulus_of_continuity(scalar_path(0, 1, {5, 5, 5}), 1.0) == 0.0);
    CHECK(modulus_of_continuity(scalar_path(0, 1, {0, 1, 0}), 1.0) == 1.0);
    CHECK(mu_of(scalar_path(0, 1, {0, 1, 0}), 1.0) == 2.0);
    CHECK_THROWS_AS(modulus_of_continuity(lin, 0.0), InvalidArgument);

    SUBCASE("nondecreasing in delta") {
        Sampler s(12);
        const auto w = random_walk(s, 1, 200, 0.005);
        double prev = 0;
        for (double d = 0.001; d <= 1.0; d += 0.013) {
            const double m = modulus_of_continuity(w, d);
            CHECK(m >= prev);
            prev = m;
        }
    }
}

TEST_CASE("mollify") {
    const double dt = 1.0 / 64;
    SUBCASE("constant after zero is preserved once the window clears t = 0") {
        const auto c = SampledPath::sample(0, dt, 128, [](double) { return vec({2.5}); });
        const auto m = mollify(c, 0.25);
        for (std::size_t i = 16; i <= 128; ++i) CHECK(m.path.node(i)(0) == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("ramp matches fine quadrature of the exact window integral") {
        const auto ramp = SampledPath::sample(0, dt, 128, [](double t) { return vec({t}); });
        const double eps = 0.25;
        const auto m = mollify(ramp, eps);
        CHECK(m.eps == eps);
        CHECK_FALSE(m.snapped);
        for (std::size_t i = 0; i <= 128; ++i) {
            const double t = ramp.time(i);
            const double oracle = window_average([](double s) { return s; }, t, eps);
            CHECK(m.path.node(i)(0) == doctest::Approx(oracle).epsilon(1e-9));
            if (t >= eps) CHECK(m.path.node(i)(0) == doctest::Approx(t - eps / 2).epsilon(1e-13));
        }
        // and its derivative is one away from the start-up window
        const auto d = derivative(m.path);
        for (std::size_t i = 16; i < 128; ++i) CHECK(d.node(i)(0) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("a one-step window does not increase the sup norm") {
        Sampler s(2);
        const auto w = random_walk(s, 2, 128, dt);
        CHECK(mollify(w, dt).path.sup_norm() <= w.sup_norm() + 1e-15);
    }
    SUBCASE("windows are snapped up to the grid and too-short ones are rejected") {
        const auto ramp = SampledPath::sample(0, dt, 128, [](double t) { return vec({t}); });
        const auto m = mollify(ramp, 0.1);
        CHECK(m.snapped);
        CHECK(m.eps == doctest::Approx(7 * dt));
        CHECK_THROWS_AS(mollify(ramp, dt / 2), InvalidArgument);
    }
    SUBCASE("translation invariance on interior nodes") {
        auto f = [](double t) { return vec({std::sin(3 * t) + t * t}); };
        const auto a = SampledPath::sample(0.0, dt, 128, f);
        Mat shifted_vals(1, 129 + 32);
        shifted_vals.setZero();
        for (Eigen::Index i = 0; i <= 128; ++i) shifted_vals(0, i + 32) = a.node(static_cast<std::size_t>(i))(0);
        const SampledPath b(-0.5, dt, shifted_vals);  // same signal, zero-padded half a unit earlier
        const auto ma = mollify(a, 0.25), mb = mollify(b, 0.25);
        for (std::size_t i = 16; i <= 128; ++i) CHECK(std::abs(ma.path.node(i)(0) - mb.path.node(i + 32)(0)) <= 1e-13);
    }
    SUBCASE("sup distance to the input is bounded by the modulus over the window") {
        Sampler s(31);
        for (int trial = 0; trial < 50; ++trial) {
            const auto w = random_walk(s, 2, 128, dt);
            for (double eps : {dt, 4 * dt, 0.25}) {
                const auto m = mollify(w, eps);
                CHECK(difference(m.path, w).sup_norm() <= modulus_of_continuity(w, eps) + 1e-12);
            }
        }
    }
}

TEST_CASE("derivative") {
    const auto lin = SampledPath::sample(0, 0.1, 10, [](double t) { return vec({2 * t, -t}); });
    const auto d = derivative(lin);
    for (std::size_t i = 0; i <= 10; ++i) {
        CHECK(d.node(i)(0) == doctest::Approx(2.0));
        CHECK(d.node(i)(1) == doctest::Approx(-1.0));
    }
    CHECK(derivative(scalar_path(0, 1, {1, 1, 1})).sup_norm() == 0.0);
}

TEST_CASE("csv input") {
    const auto p = read_path_csv("t,v1,v2\n0,0,0\n0.5,1,2\n1,3,4\n");
    CHECK(p.dim() == 2);
    CHECK(p.dt() == 0.5);
    CHECK(p.node(2)(1) == 4.0);
    CHECK_THROWS_AS(read_path_csv("t,v1\n0,0\n0.5,1\n2,3\n"), InvalidArgument);
    CHECK_THROWS_AS(read_path_csv("time,v1\n0,0\n1,1\n"), InvalidArgument);
    CHECK_THROWS_AS(read_path_csv("t,v1\n0,0\n"), InvalidArgument);
}

TEST_CASE("grid helpers") {
    CHECK(grid_steps(1.0, 1.0 / 64, "horizon") == 64);
    CHECK(grid_steps(0.1, 0.01, "eps") == 10);
    CHECK_THROWS_AS(grid_steps(0.1, 1.0 / 64, "eps"), GridMismatch);
    CHECK(grid_steps_ceil(0.1, 1.0 / 64) == 7);
    CHECK(grid_steps_ceil(0.125, 1.0 / 64) == 8);
}
