#include <cmath>
#include <sstream>

#include "doctest.h"
#include "tightkit/error.hpp"
#include "tightkit/forms.hpp"

using namespace tightkit;

TEST_CASE("torus forms at the outer equator") {
    const auto fd = fundamental_data(Surface::torus(2.0, 1.0), {0.0, 0.0});
    CHECK(fd.E == doctest::Approx(1.0));
    CHECK(fd.F == doctest::Approx(0.0));
    CHECK(fd.G == doctest::Approx(9.0));
    CHECK(fd.L == doctest::Approx(1.0));
    CHECK(fd.M == doctest::Approx(0.0));
    CHECK(fd.N == doctest::Approx(3.0));
    CHECK(fd.K == doctest::Approx(1.0 / 3.0));
    CHECK(fd.H == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("torus curvature on the inner equator and Christoffels at the top") {
    const auto in = fundamental_data(Surface::torus(2.0, 1.0), {kPi, 0.3});
    CHECK(in.N == doctest::Approx(-1.0));
    CHECK(in.K == doctest::Approx(-1.0));
    const auto top = fundamental_data(Surface::torus(2.0, 1.0), {kPi / 2, 1.0});
    CHECK(top.christoffels.g122 == doctest::Approx(2.0));
    CHECK(top.christoffels.g212 == doctest::Approx(-0.5));
    CHECK(top.coeffs.alpha == doctest::Approx(-2.0));
}

TEST_CASE("flipping orientation negates the second form only") {
    const Surface t = Surface::torus(3.0, 1.0);
    const auto a = fundamental_data(t, {0.7, 1.1});
    const auto b = fundamental_data(t.flipped(), {0.7, 1.1});
    CHECK(b.E == doctest::Approx(a.E));
    CHECK(b.L == doctest::Approx(-a.L));
    CHECK(b.N == doctest::Approx(-a.N));
    CHECK(b.K == doctest::Approx(a.K));
    CHECK(b.H == doctest::Approx(-a.H));
}

TEST_CASE("sphere curvature") {
    const double rho = 2.5;
    for (double u : {-1.0, 0.0, 0.4, 1.2}) {
        const auto fd = fundamental_data(Surface::sphere(rho), {u, 2.0});
        CHECK(std::abs(fd.K - 1.0 / (rho * rho)) < 1e-12);
        CHECK(std::abs(fd.k1 - fd.k2) < 1e-9);
    }
    CHECK_THROWS_AS(eval_jet(Surface::sphere(1.0), {2.0, 0.0}), DomainError);
}

TEST_CASE("Gauss and Codazzi residuals are small on analytic surfaces") {
    const double h = 1e-3;
    for (const Surface& s : {Surface::torus(2.0, 1.0), Surface::sphere(1.3),
                             Surface::perturbed_torus(2.0, 0.8, 0.1),
                             Surface::flattened_torus(2.0, 1.0)}) {
        for (ParamPoint p : {ParamPoint{0.3, 0.2}, ParamPoint{1.1, 4.0}, ParamPoint{-0.9, 2.5}}) {
            const auto r = codazzi_residuals(s, p, h);
            CHECK(r.max_abs() < 1e-5);
        }
    }
}

TEST_CASE("residuals shrink quadratically with the step") {
    const Surface s = Surface::perturbed_torus(2.0, 0.8, 0.1);
    const ParamPoint p{0.4, 0.9};
    const double r1 = codazzi_residuals(s, p, 1e-2).max_abs();
    const double r2 = codazzi_residuals(s, p, 5e-3).max_abs();
    CHECK(r1 / r2 > 3.5);
}

TEST_CASE("sampled grid reproduces the analytic torus") {
    const Surface t = Surface::torus(2.0, 1.0);
    const Surface g = Surface::sampled(sample_surface(t, 128, 128));
    const auto a = fundamental_data(t, {0.5, 1.0});
    const auto b = fundamental_data(g, {0.5, 1.0});
    CHECK(std::abs(a.K - b.K) < 1e-6);
    CHECK(std::abs(a.N - b.N) < 1e-6);
}

TEST_CASE("grid text round trip") {
    const auto grid = sample_surface(Surface::torus(2.0, 1.0), 8, 10);
    std::stringstream ss;
    write_sampled_grid(ss, *grid);
    const auto back = read_sampled_grid(ss);
    REQUIRE(back->nu == 8);
    REQUIRE(back->nv == 10);
    CHECK(back->periodic_u);
    CHECK(std::abs(back->at(3, 4).z - grid->at(3, 4).z) < 1e-12);
}

TEST_CASE("prescribed annulus satisfies the first Codazzi equation on the curve") {
    const auto ann = PrescribedForms::annulus();
    for (double x : {0.0, 1.0, 2.5, 4.0}) {
        const auto r = codazzi_residuals(ann, {x, 0.0}, 1e-4);
        CHECK(std::abs(r.codazzi1) < 1e-6);
        const auto s = ann.sample({x, 0.0});
        CHECK(s.L == doctest::Approx(0.0));
        CHECK((ann.sample({x, 1e-4}).L - ann.sample({x, -1e-4}).L) / 2e-4 ==
              doctest::Approx(0.5 * (1.0 + std::sin(x))).epsilon(1e-6));
    }
}

TEST_CASE("degenerate metric is reported") {
    FormSample s;
    s.E = 1.0;
    s.F = 1.0;
    s.G = 1.0;
    CHECK_THROWS_AS(fundamental_data(s), DegenerateMetric);
}

TEST_CASE("principal directions of the torus are the coordinate directions") {
    const auto fd = fundamental_data(Surface::torus(2.0, 1.0), {0.0, 0.0});
    const auto pf = principal_frame(fd);
    REQUIRE(pf.dir1);
    CHECK(pf.k1 == doctest::Approx(1.0));
    CHECK(std::abs((*pf.dir1)[1]) < 1e-12);
    CHECK(std::abs((*pf.dir2)[0]) < 1e-12);
}
