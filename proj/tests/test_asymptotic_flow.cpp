#include "doctest.h"

#include <cmath>
#include <random>

#include "tightkit/asymptotic.hpp"
#include "tightkit/error.hpp"
#include "tightkit/invariant.hpp"
#include "tightkit/regions.hpp"
#include "tightkit/return_map.hpp"

using namespace tightkit;

namespace {

// |v(3pi/2) - v(pi/2)| along an asymptotic curve of the (2,1) torus, from
// dv/du = r / sqrt(-rho cos u) with rho = R + r cos u, to 18 digits.
constexpr double kCrossingDv = 4.31303129499928561;

double cross(const std::array<double, 2>& a, const std::array<double, 2>& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace

TEST_CASE("asymptotic directions by curvature sign") {
    const Surface tor = Surface::torus(2, 1);
    const auto hyp = asymptotic_directions(fundamental_data(tor, {kPi, 0.3}));
    REQUIRE(hyp.count == 2);
    for (const auto& d : hyp.dir) CHECK(std::abs(std::abs(d[1] / d[0]) - 1.0) < 1e-12);
    CHECK(hyp.dir[0][1] / hyp.dir[0][0] * (hyp.dir[1][1] / hyp.dir[1][0]) < 0.0);

    CHECK(asymptotic_directions(fundamental_data(tor, {kPi / 2, 1.0})).count == 1);
    CHECK(asymptotic_directions(fundamental_data(tor, {0.0, 0.0})).count == 0);
    CHECK(asymptotic_directions(fundamental_data(Surface::sphere(), {0.4, 1.0})).count == 0);
    CHECK_THROWS_AS(asymptotic_directions(fundamental_data(Surface::plane(), {0.1, 0.2})), PreconditionError);
}

TEST_CASE("asymptotic directions are null and unit") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uu(kPi / 2 + 1e-3, 3 * kPi / 2 - 1e-3), vv(0.0, kTwoPi);
    const Surface tor = Surface::torus(2, 1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const FundamentalData fd = fundamental_data(tor, {uu(rng), vv(rng)});
        const double scale = std::sqrt(fd.L * fd.L + 2 * fd.M * fd.M + fd.N * fd.N);
        const auto dirs = asymptotic_directions(fd);
        REQUIRE(dirs.count == 2);
        for (const auto& d : dirs.dir) {
            worst = std::max(worst, std::abs(second_form(fd, d[0], d[1])) / scale);
            CHECK(std::abs(first_form(fd, d[0], d[1]) - 1.0) < 1e-12);
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("orientation flip swaps the families") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uu(kPi / 2 + 1e-2, 3 * kPi / 2 - 1e-2), vv(0.0, kTwoPi);
    const Surface a = Surface::perturbed_torus(2, 1, 0.05);
    const Surface b = a.flipped();
    for (int i = 0; i < 100; ++i) {
        const ParamPoint p{uu(rng), vv(rng)};
        const FundamentalData fa = fundamental_data(a, p), fb = fundamental_data(b, p);
        if (!(fa.K < -1e-3)) continue;
        for (int s : {+1, -1}) {
            const auto da = family_direction(fa, s);
            const auto db = family_direction(fb, -s);
            CHECK(std::abs(cross(da, db)) < 1e-10);
        }
    }
}

TEST_CASE("torus asymptotic curve crosses S- between the parabolic circles") {
    const Surface tor = Surface::torus(2, 1);
    TraceDiagnostics diag;
    const TracedCurve c = trace_with_diagnostics(SurfaceForms(tor), {kPi, 0.0}, +1, {}, diag);
    REQUIRE_FALSE(c.closed);
    REQUIRE(diag.head.parabolic);
    REQUIRE(diag.tail.parabolic);
    const double u_lo = std::min(c.front().p.u, c.back().p.u);
    const double u_hi = std::max(c.front().p.u, c.back().p.u);
    CHECK(std::abs(u_lo - kPi / 2) < 1e-8);
    CHECK(std::abs(u_hi - 3 * kPi / 2) < 1e-8);
    CHECK(std::abs(std::abs(c.back().p.v - c.front().p.v) - kCrossingDv) < 1e-8);
    CHECK(diag.head.tangency_angle < 1e-6);
    CHECK(diag.tail.tangency_angle < 1e-6);
}

TEST_CASE("trace from a parabolic point and from S+") {
    const Surface tor = Surface::torus(2, 1);
    const TracedCurve c = trace(tor, {kPi / 2, 1.0}, -1);
    CHECK(std::abs(std::abs(c.back().p.v - c.front().p.v) - kCrossingDv) < 1e-6);
    CHECK_THROWS_AS(trace(tor, {0.0, 0.0}, +1), PreconditionError);
}

TEST_CASE("annulus: closed asymptotic curve and spiralling neighbours") {
    const auto ann = PrescribedForms::annulus();
    const TracedCurve c = trace(ann, {0.0, 0.0}, -1);
    CHECK(c.closed);
    CHECK(c.winding == std::array<int, 2>{1, 0});
    for (const auto& s : c.samples) CHECK(std::abs(s.p.v) < 1e-8);

    TraceDiagnostics diag;
    trace_with_diagnostics(ann, {0.0, 0.01}, -1, {}, diag);
    REQUIRE(diag.spiral_limit.has_value());
    CHECK(std::abs(*diag.spiral_limit) < 1e-4);
}

TEST_CASE("rigidity invariant on the annulus chart") {
    const auto ann = PrescribedForms::annulus();
    const InvariantRecord r = rigidity_invariant(ann);
    CHECK(r.intrinsic == doctest::Approx(-kPi).epsilon(1e-8));
    CHECK(r.coordinate == doctest::Approx(-kPi).epsilon(1e-6));
    CHECK(r.relation_sign == 1.0);
    CHECK(r.discrepancy < 1e-6);

    const InvariantRecord m = rigidity_invariant(ann.mirrored());
    CHECK(m.intrinsic == doctest::Approx(kPi).epsilon(1e-8));
    CHECK(m.relation_sign == -1.0);
    CHECK(m.discrepancy < 1e-6);

    const InvariantRecord f = rigidity_invariant(PrescribedForms::flat_annulus());
    CHECK(std::abs(f.intrinsic) < 1e-12);
    CHECK(std::abs(f.coordinate) < 1e-12);

    CHECK_THROWS_AS(rigidity_invariant(ann, InvariantControls{0.2}), PreconditionError);
}

TEST_CASE("rigidity invariant along a traced closed curve") {
    const auto ann = PrescribedForms::annulus();
    const TracedCurve c = trace(ann, {0.0, 0.0}, -1);
    const InvariantRecord r = rigidity_invariant(ann, c);
    CHECK(r.intrinsic == doctest::Approx(-kPi).epsilon(1e-7));
    CHECK(r.discrepancy < 1e-6);

    const std::size_t i = c.samples.size() / 3;
    const CurveFrame f = curve_frame(ann, c, i);
    CHECK(f.kg == doctest::Approx(-(1.0 + std::sin(c.samples[i].p.u)) / 2.0).epsilon(1e-6));
}

TEST_CASE("geodesic curvature of a torus parallel") {
    const Surface tor = Surface::torus(2, 1);
    for (double u : {0.3, 1.0, 2.5, 4.0}) {
        const double rho = 2.0 + std::cos(u);
        TracedCurve c;
        const int n = 400;
        for (int k = 0; k <= n; ++k) {
            const double v = kTwoPi * k / n;
            c.samples.push_back({{u, v}, 0.0, 1.0 / rho, rho * v});
        }
        c.closed = true;
        c.winding = {0, 1};
        const CurveFrame f = curve_frame(tor, c, 17);
        CHECK(f.kg == doctest::Approx(-std::sin(u) / rho).epsilon(1e-9));
    }
}

TEST_CASE("return map: torus band has no closed asymptotic curves") {
    const Surface tor = Surface::torus(2, 1);
    const auto reg = decompose_regions(tor);
    for (int fam : {+1, -1}) {
        const auto d = cylinder_decomposition(tor, reg, 0, fam);
        CHECK(d.closed_curves.empty());
        REQUIRE(d.regions.size() == 1);
        CHECK(d.regions[0].exits);
        CHECK_FALSE(d.degenerate);
    }
}

TEST_CASE("return map: annulus has one isolated hyperbolic closed curve") {
    const auto ann = PrescribedForms::annulus();
    const auto d = cylinder_decomposition(chart_from_forms(ann, -1, false, -0.3, 0.3));
    REQUIRE(d.closed_curves.size() == 1);
    const FixedPoint& fp = d.closed_curves[0];
    CHECK(std::abs(fp.t) < 1e-10);
    CHECK(fp.multiplier == doctest::Approx(std::exp(kPi / 2)).epsilon(1e-5));
    CHECK(std::isinf(fp.nearest));
    CHECK_FALSE(d.unresolved_cluster);
    REQUIRE(d.regions.size() == 2);
    CHECK(d.regions[0].drift == -1);
    CHECK(d.regions[1].drift == +1);
}

TEST_CASE("return map: flat annulus is degenerate") {
    const auto d = cylinder_decomposition(chart_from_forms(PrescribedForms::flat_annulus(), -1, false, -0.3, 0.3));
    CHECK(d.degenerate);
    CHECK(d.closed_curves.empty());
}

TEST_CASE("return map: synthetic fields with one and two cycles") {
    const auto one = cylinder_decomposition(AnnularChart{synthetic_cycles({0.3}), 0.0, kTwoPi, -1.0, 1.0});
    REQUIRE(one.closed_curves.size() == 1);
    CHECK(one.closed_curves[0].t == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(one.closed_curves[0].multiplier < 1.0);
    REQUIRE(one.regions.size() == 2);
    CHECK(one.regions[0].drift == +1);
    CHECK(one.regions[1].drift == -1);

    const auto two = cylinder_decomposition(AnnularChart{synthetic_cycles({-0.4, 0.35}), 0.0, kTwoPi, -1.0, 1.0});
    REQUIRE(two.closed_curves.size() == 2);
    CHECK(two.closed_curves[0].t == doctest::Approx(-0.4).epsilon(1e-10));
    CHECK(two.closed_curves[1].t == doctest::Approx(0.35).epsilon(1e-10));
    CHECK(two.closed_curves[0].multiplier == doctest::Approx(std::exp(0.75 * kTwoPi)).epsilon(1e-4));
    CHECK(two.closed_curves[1].multiplier == doctest::Approx(std::exp(-0.75 * kTwoPi)).epsilon(1e-4));
    REQUIRE(two.regions.size() == 3);
    CHECK(two.regions[0].drift == -1);
    CHECK(two.regions[1].drift == +1);
    CHECK(two.regions[2].drift == -1);
}
