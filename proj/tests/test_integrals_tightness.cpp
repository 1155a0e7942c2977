#include <cmath>

#include "doctest.h"
#include "tightkit/error.hpp"
#include "tightkit/regions.hpp"

using namespace tightkit;

namespace {

// Torus of revolution whose tube radius oscillates along the profile; it has
// several bands of negative curvature.
std::shared_ptr<SampledGrid> banded_torus_grid(int nu, int nv) {
    auto g = std::make_shared<SampledGrid>();
    g->nu = nu;
    g->nv = nv;
    g->periodic_u = g->periodic_v = true;
    g->du = kTwoPi / nu;
    g->dv = kTwoPi / nv;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double u = i * g->du, v = j * g->dv;
            const double rr = 1.0 + 0.2 * std::cos(3.0 * u);
            const double rho = 3.0 + rr * std::cos(u);
            g->nodes.push_back({rho * std::cos(v), rho * std::sin(v), rr * std::sin(u)});
        }
    return g;
}

const Integrand kCurv = [](const FundamentalData& fd) { return fd.K; };

}  // namespace

TEST_CASE("sphere total curvature is 4 pi") {
    QuadratureSpec q;
    q.tol = 1e-8;
    const auto est = surface_integral(Surface::sphere(1.0), kCurv, Region::all(), q);
    CHECK(std::abs(est.value - 4.0 * kPi) < 1e-8);
}

TEST_CASE("torus positive and absolute curvature") {
    const Surface t = Surface::torus(2.0, 1.0);
    const auto pos = surface_integral(t, kCurv, Region::positive());
    CHECK(std::abs(pos.value - 4.0 * kPi) < 1e-6);
    const auto abs = surface_integral(t, [](const FundamentalData& fd) { return std::abs(fd.K); },
                                      Region::all());
    CHECK(std::abs(abs.value - 8.0 * kPi) < 1e-6);
}

TEST_CASE("tightness report on closed families") {
    const auto t = tightness_report(Surface::torus(2.0, 1.0));
    CHECK(t.tight);
    CHECK(std::abs(t.gauss_bonnet_defect) < 1e-8);
    CHECK(std::abs(t.total_absolute_curvature - t.lower_bound) < 1e-6);

    const auto s = tightness_report(Surface::sphere(1.0));
    CHECK(s.tight);
    CHECK(std::abs(s.total_absolute_curvature - 4.0 * kPi) < 1e-8);

    const auto p = tightness_report(Surface::perturbed_torus(2.0, 0.8, 0.2));
    CHECK_FALSE(p.tight);
    CHECK(p.total_absolute_curvature > p.lower_bound + 1.0);
}

TEST_CASE("Gauss-Bonnet on every closed built-in family") {
    for (const Surface& s : {Surface::sphere(1.7), Surface::torus(3.0, 1.2),
                             Surface::perturbed_torus(2.0, 0.8, 0.1),
                             Surface::flattened_torus(2.0, 1.0)}) {
        CHECK(std::abs(tightness_report(s).gauss_bonnet_defect) < 1e-6);
    }
}

TEST_CASE("refinement shrinks the error estimate") {
    const Surface s = Surface::perturbed_torus(2.0, 0.8, 0.1);
    double prev = 1e300;
    for (int n : {16, 32, 64}) {
        QuadratureSpec q;
        q.nu = q.nv = n;
        const auto r = tightness_report(s, q);
        CHECK(r.error_estimate < prev);
        prev = r.error_estimate;
    }
}

TEST_CASE("areas add up") {
    const auto r = tightness_report(Surface::perturbed_torus(2.0, 0.8, 0.1));
    CHECK(std::abs(r.area_positive + r.area_negative - r.area_total) < 1e-9 * r.area_total);
    const auto t = tightness_report(Surface::torus(2.0, 1.0));
    CHECK(t.area_total == doctest::Approx(8.0 * kPi * kPi));
    CHECK(t.area_positive == doctest::Approx(4.0 * kPi * (kPi + 1.0)));
}

TEST_CASE("custom region predicate") {
    const auto est = surface_integral(
        Surface::sphere(1.0), [](const FundamentalData&) { return 1.0; },
        Region::custom([](const FundamentalData& fd) { return fd.H > 0.0; }));
    CHECK(est.value == doctest::Approx(4.0 * kPi));
}

TEST_CASE("non-convergence and bad resolution are reported") {
    QuadratureSpec q;
    q.nu = q.nv = 16;
    q.max_resolution = 16;
    q.tol = 1e-300;
    CHECK_THROWS_AS(surface_integral(Surface::perturbed_torus(2.0, 0.8, 0.3), kCurv,
                                     Region::positive(), q),
                    ConvergenceError);
    q.nu = 8;
    CHECK_THROWS_AS(tightness_report(Surface::torus(), q), PreconditionError);
}

TEST_CASE("torus decomposes into one cylinder bounded by two parabolic circles") {
    const auto d = decompose_regions(Surface::torus(2.0, 1.0));
    REQUIRE(d.negative_components.size() == 1);
    REQUIRE(d.parabolic_curves.size() == 2);
    CHECK(d.negative_components[0].boundary_curves.size() == 2);
    for (const auto& pc : d.parabolic_curves) {
        CHECK(pc.closable);
        CHECK(pc.monotone_sign_change);
        CHECK(pc.min_abs_H == doctest::Approx(0.5));
        CHECK(pc.curve.winding[1] == 1);
        for (const auto& smp : pc.curve.samples)
            CHECK(std::abs(std::remainder(smp.p.u - kPi / 2, kPi)) < 1e-10);
    }
}

TEST_CASE("parabolic circles stay put under refinement") {
    for (int n : {32, 64, 128}) {
        const auto d = decompose_regions(Surface::torus(2.0, 1.0), {n, n});
        REQUIRE(d.parabolic_curves.size() == 2);
        double dev = 0.0;
        for (const auto& pc : d.parabolic_curves)
            for (const auto& smp : pc.curve.samples)
                dev = std::max(dev, std::abs(std::remainder(smp.p.u - kPi / 2, kPi)));
        CHECK(dev < 1e-10);
    }
}

TEST_CASE("sphere has no negative region") {
    const auto d = decompose_regions(Surface::sphere(1.0), {64, 64});
    CHECK(d.negative_components.empty());
    CHECK(d.parabolic_curves.empty());
}

TEST_CASE("sampled grids: every negative band is a cylinder") {
    const auto torus = decompose_regions(Surface::sampled(sample_surface(Surface::torus(2.0, 1.0), 128, 64)),
                                         {128, 64});
    REQUIRE(torus.negative_components.size() == 1);
    CHECK(torus.negative_components[0].boundary_curves.size() == 2);

    const auto banded = decompose_regions(Surface::sampled(banded_torus_grid(192, 96)), {128, 64});
    CHECK(banded.negative_components.size() == 4);
    for (const auto& c : banded.negative_components) CHECK(c.boundary_curves.size() == 2);
}
