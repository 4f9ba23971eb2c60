// coupled Dyson equation solver, density reconstruction, support edges
#include <doctest.h>

#include <cmath>
#include <complex>

#include "bsg/mde.hpp"
#include "bsg/model.hpp"

using namespace bsg;

namespace {

ModelParams pure22() { return derive_params(parse_mixture("pure 2 2"), 0.5); }
ModelParams pure33() { return derive_params(parse_mixture("pure 3 3"), 0.5); }

double max_residual(const ModelParams& p, const FieldPoint& u, const StieltjesPair& s) {
    const auto c = mde_coeffs(p, u);
    const Complex r1 = 1.0 + (s.z - c.a1 + c.b1 * s.m1 + c.c1 * s.m2) * s.m1;
    const Complex r2 = 1.0 + (s.z - c.a2 + c.b2 * s.m2 + c.c2 * s.m1) * s.m2;
    return std::max(std::abs(r1), std::abs(r2));
}

}  // namespace

TEST_CASE("coefficients, pure (2,2) at gamma 1/2") {
    const auto c = mde_coeffs(pure22(), {-1.5, 0.0, 0.0});
    // a_i = (alpha_i u_i - xi_i' u0)/weight with alpha_i = 0
    CHECK(c.a1 == doctest::Approx(2.0 * 1.5 / 0.5).epsilon(1e-14));
    CHECK(c.a2 == doctest::Approx(2.0 * 1.5 / 0.5).epsilon(1e-14));
    CHECK(c.b1 == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(c.b2 == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(c.c1 == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(c.c2 == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("solve_point at z = i collapses to 0.25i") {
    const auto p = pure22();
    const auto s = solve_point(p, {0.0, 0.0, 0.0}, Complex(0.0, 1.0));
    CHECK(std::abs(s.m1 - Complex(0.0, 0.25)) < 1e-12);
    CHECK(std::abs(s.m2 - Complex(0.0, 0.25)) < 1e-12);
    CHECK(s.residual1 <= kMdeResidualTol);
    CHECK(s.residual2 <= kMdeResidualTol);
    CHECK(stieltjes_transform(s, p) == Complex(s.m1));
}

TEST_CASE("pure-model outputs ignore u1, u2 exactly") {
    const auto p = pure22();
    for (double u0 : {0.0, -1.3, 0.8}) {
        const Complex z(0.3, 0.05);
        const auto a = solve_point(p, {u0, 0.0, 0.0}, z);
        const auto b = solve_point(p, {u0, 5.0, -7.0}, z);
        CHECK(a.m1 == b.m1);  // bitwise: identical iteration path
        CHECK(a.m2 == b.m2);
    }
}

TEST_CASE("solve_point matches the explicit quadratic root") {
    const auto p = pure22();
    const Complex z(0.1, 0.01);
    const auto s = solve_point(p, {0.0, 0.0, 0.0}, z);
    // symmetric solution: 12 m^2 + z m + 1 = 0, branch with Im m > 0
    const Complex disc = std::sqrt(z * z - 48.0);
    Complex root = (-z + disc) / 24.0;
    if (root.imag() <= 0.0) root = (-z - disc) / 24.0;
    CHECK(std::abs(s.m1 - root) < 1e-10);
    CHECK(std::abs(s.m2 - root) < 1e-10);
    CHECK(s.m1.imag() > 0.0);
}

TEST_CASE("Herglotz property and residual invariant across z and u") {
    const auto p22 = pure22();
    const auto mix = derive_params(
        parse_mixture("term 2 2 0.70710678118654752; term 2 3 0.70710678118654752"), 0.35);
    for (const auto* m : {&p22, &mix}) {
        for (double re : {-8.0, -1.0, 0.0, 2.5, 9.0}) {
            for (double im : {1e-6, 1e-3, 0.5, 2.0}) {
                for (double u0 : {0.0, -1.7, 1.1}) {
                    const FieldPoint u{u0, 0.4, -0.2};
                    const auto s = solve_point(*m, u, Complex(re, im));
                    CHECK(s.m1.imag() > 0.0);
                    CHECK(s.m2.imag() > 0.0);
                    CHECK(max_residual(*m, u, s) <= kMdeResidualTol);
                }
            }
        }
    }
}

TEST_CASE("invalid z rejected") {
    const auto p = pure22();
    CHECK_THROWS_AS(solve_point(p, {}, Complex(0.0, 0.0)), SolverError);
    CHECK_THROWS_AS(solve_point(p, {}, Complex(1.0, -0.1)), SolverError);
}

TEST_CASE("stieltjes_transform arithmetic") {
    ModelParams p;
    p.gamma = 0.25;
    StieltjesPair s;
    s.m1 = Complex(0.1, 0.2);
    s.m2 = Complex(-0.3, 0.4);
    const Complex out = stieltjes_transform(s, p);
    CHECK(std::abs(out - Complex(-0.2, 0.35)) < 1e-15);
}

TEST_CASE("density of pure (2,2) at u=0 is the semicircle of radius 4 sqrt 3") {
    const auto p = pure22();
    const double edge = 4.0 * std::sqrt(3.0);
    const auto d = density(p, {0.0, 0.0, 0.0}, {-8.0, 8.0}, 2048);
    CHECK(d.mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(d.left_edge == doctest::Approx(-edge).epsilon(1e-4));
    CHECK(d.right_edge == doctest::Approx(edge).epsilon(1e-4));
    // closed-form agreement: 1e-4 away from the edges, 1e-2 within 0.05 of one
    for (size_t i = 0; i < d.grid.size(); ++i) {
        const double lam = d.grid[i];
        const double ref =
            std::sqrt(std::max(48.0 - lam * lam, 0.0)) / (24.0 * M_PI);
        const double dist = std::min(std::abs(lam - edge), std::abs(lam + edge));
        CHECK(std::abs(d.values[i] - ref) < (dist < 0.05 ? 1e-2 : 1e-4));
        CHECK(d.values[i] >= 0.0);
    }
}

TEST_CASE("density at u0=-2 is the same semicircle shifted by 8") {
    const auto p = pure22();
    const auto d = density(p, {-2.0, 0.0, 0.0}, {0.0, 16.0}, 2048);
    CHECK(d.left_edge == doctest::Approx(8.0 - 4.0 * std::sqrt(3.0)).epsilon(1e-4));
    CHECK(d.right_edge == doctest::Approx(8.0 + 4.0 * std::sqrt(3.0)).epsilon(1e-4));
    CHECK(d.mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("density(-u) is the reflection of density(u)") {
    const auto p = derive_params(
        parse_mixture("term 2 2 0.70710678118654752; term 3 2 0.70710678118654752"), 0.45);
    const FieldPoint u{-0.8, 0.3, -0.5};
    const int n = 1024;
    const auto dpos = density(p, u, {-16.0, 16.0}, n);
    const auto dneg = density(p, u.negated(), {-16.0, 16.0}, n);
    double sup = 0.0;
    for (int i = 0; i < n; ++i)
        sup = std::max(sup, std::abs(dpos.values[i] - dneg.values[n - 1 - i]));
    CHECK(sup < 1e-6);
    CHECK(dneg.left_edge == doctest::Approx(-dpos.right_edge).epsilon(1e-5));
    CHECK(dneg.right_edge == doctest::Approx(-dpos.left_edge).epsilon(1e-5));
}

TEST_CASE("parallel density equals the serial reference") {
    const auto p = pure33();
    const FieldPoint u{-0.5, 0.0, 0.0};
    const auto fast = density(p, u, {-12.0, 14.0}, 1024);
    const auto slow = density_reference(p, u, {-12.0, 14.0}, 1024);
    double sup = 0.0;
    for (size_t i = 0; i < fast.values.size(); ++i)
        sup = std::max(sup, std::abs(fast.values[i] - slow.values[i]));
    CHECK(sup < 1e-9);
    CHECK(fast.mass == doctest::Approx(slow.mass).epsilon(1e-9));
}

TEST_CASE("density is deterministic across repeated evaluation") {
    const auto p = pure22();
    const auto a = density(p, {0.3, 0.0, 0.0}, {-9.0, 8.0}, 512);
    const auto b = density(p, {0.3, 0.0, 0.0}, {-9.0, 8.0}, 512);
    for (size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("support_edges values") {
    const auto p = pure22();
    const double edge = 4.0 * std::sqrt(3.0);
    {
        const auto [l, r] = support_edges(p, {0.0, 0.0, 0.0});
        CHECK(l == doctest::Approx(-edge).epsilon(1e-4));
        CHECK(r == doctest::Approx(edge).epsilon(1e-4));
    }
    {
        const auto [l, r] = support_edges(p, {-std::sqrt(3.0), 0.0, 0.0});
        CHECK(std::abs(l) < 1e-4);
        (void)r;
    }
    {
        const auto [l, r] = support_edges(pure33(), {0.0, 0.0, 0.0});
        CHECK(l == doctest::Approx(-2.0 * std::sqrt(30.0)).epsilon(1e-4));
        CHECK(r == doctest::Approx(2.0 * std::sqrt(30.0)).epsilon(1e-4));
    }
}

TEST_CASE("support bound contains the detected support") {
    const auto p22 = pure22();
    for (double u0 : {0.0, -2.0, 1.5}) {
        const FieldPoint u{u0, 0.0, 0.0};
        // the bound is tight for pure (2,2); the default window pads it by 1
        const double k = support_bound(p22, u);
        const auto [l, r] = support_edges(p22, u);
        CHECK(l >= -k - 1e-4);
        CHECK(r <= k + 1e-4);
    }
}

TEST_CASE("window-too-small is an error") {
    const auto p = pure22();
    CHECK_THROWS_AS(density(p, {0.0, 0.0, 0.0}, {-2.0, 2.0}, 512), SolverError);
}

TEST_CASE("resolution floor enforced") {
    const auto p = pure22();
    CHECK_THROWS(density(p, {0.0, 0.0, 0.0}, {-8.0, 8.0}, 32));
}

TEST_CASE("density_auto window always covers the support") {
    const auto mix = derive_params(
        parse_mixture("term 2 2 0.57735026918962576; term 2 3 0.57735026918962576; "
                      "term 4 2 0.57735026918962576"),
        0.6);
    const auto d = density_auto(mix, {-1.2, 0.7, -0.4}, 1024);
    CHECK(d.mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(d.left_edge < d.right_edge);
    CHECK(d.grid.front() < d.left_edge);
    CHECK(d.grid.back() > d.right_edge);
}
