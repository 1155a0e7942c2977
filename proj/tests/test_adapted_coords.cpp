#include "doctest.h"

#include <cmath>
#include <sstream>

#include "tightkit/asymptotic.hpp"
#include "tightkit/chart.hpp"
#include "tightkit/error.hpp"
#include "tightkit/regions.hpp"
#include "tightkit/vanishing.hpp"

using namespace tightkit;

namespace {

PrescribedForms sheared_patch(double kappa) {
    PrescribedForms::Fields f;
    f.E = [](double, double) { return 1.0; };
    f.F = [](double, double) { return 0.0; };
    f.G = [](double, double) { return 1.0; };
    f.L = [kappa](double, double) { return kappa * kappa; };
    f.M = [kappa](double, double) { return kappa; };
    f.N = [](double, double) { return 1.0; };
    return PrescribedForms(f, Domain{{-1.0, 1.0, false}, {-1.0, 1.0, false}}, "sheared-patch");
}

ParamPoint perturbed_parabolic_point(const Surface& s) {
    const auto reg = decompose_regions(s);
    REQUIRE(!reg.parabolic_curves.empty());
    return reg.parabolic_curves[0].curve.samples[5].p;
}

// Annulus chart on the side where the prescribed signs hold.
Chart annulus_chart(const PrescribedForms& src, int family) {
    const TracedCurve g = trace(src, {0.0, 0.0}, family);
    REQUIRE(g.closed);
    AdaptedControls ac;
    ac.side = g.front().du > 0 ? -1 : 1;
    return asymptotic_adapted_chart(src, g, ac);
}

double max_curvature_mismatch(const Chart& c) {
    double worst = 0.0;
    for (int i = 0; i < c.nx; ++i)
        for (int j = 0; j < c.nt; ++j) {
            const ChartForms f = chart_forms(c, i, j);
            const double K = (f.L * f.N - f.M * f.M) / (f.E * f.G - f.F * f.F);
            const double H = (f.E * f.N - 2 * f.F * f.M + f.G * f.L) / (2 * (f.E * f.G - f.F * f.F));
            const double scale = std::max(1.0, std::abs(f.native.K));
            worst = std::max(worst, std::abs(K - f.native.K) / scale);
            worst = std::max(worst, std::abs(std::abs(H) - std::abs(f.native.H)) / std::max(1.0, std::abs(f.native.H)));
        }
    return worst;
}

}  // namespace

TEST_CASE("m-zero chart on the torus is the identity") {
    const Chart c = m_zero_chart(Surface::torus(2, 1), {kPi / 2, 0.0});
    CHECK(c.kind == ChartKind::MZero);
    CHECK(c.along_axis == 1);
    double err = 0.0;
    for (int i = 0; i < c.nx; ++i)
        for (int j = 0; j < c.nt; ++j) {
            err = std::max(err, std::abs(c.node(i, j).u - (kPi / 2 + c.t_at(j))));
            err = std::max(err, std::abs(c.node(i, j).v - c.x_at(i)));
        }
    CHECK(err < 1e-12);
    CHECK(c.certificate.max_abs_M < 1e-10 * c.certificate.form_scale);
    CHECK(c.certificate.min_jacobian > 0.0);
    for (int i = 0; i < c.nx; i += 10)
        for (int j = 0; j < c.nt; j += 10) {
            const ChartForms f = chart_forms(c, i, j);
            CHECK(std::abs(f.E - f.native.G) < 1e-9);
            CHECK(std::abs(f.G - f.native.E) < 1e-9);
            CHECK(std::abs(f.L - f.native.N) < 1e-9);
            CHECK(std::abs(f.N - f.native.L) < 1e-9);
        }
}

TEST_CASE("m-zero chart on a sheared flat patch has straight characteristics") {
    const double kappa = 0.3;
    auto src = std::make_shared<PrescribedForms>(sheared_patch(kappa));
    const Chart c = m_zero_chart(src, {0.0, 0.0});
    REQUIRE(c.along_axis == 0);
    double err = 0.0;
    for (int i = 0; i < c.nx; ++i)
        for (int j = 0; j < c.nt; ++j) {
            const ParamPoint p = c.node(i, j);
            err = std::max(err, std::abs(p.u - c.x_at(i)));
            err = std::max(err, std::abs(c.t_at(j) - (p.v + kappa * p.u)));
        }
    CHECK(err < 1e-12);
    CHECK(c.certificate.max_abs_M < 1e-10);
}

TEST_CASE("m-zero chart on the perturbed torus") {
    const Surface s = Surface::perturbed_torus(2, 1, 0.05);
    const ParamPoint q = perturbed_parabolic_point(s);
    MZeroControls mc;
    mc.width = 0.1;
    const Chart c = m_zero_chart(s, q, mc);
    CHECK(c.t_hi - c.t_lo == doctest::Approx(0.1));
    CHECK(c.certificate.max_abs_M < 1e-5);
    CHECK(c.certificate.min_jacobian > 0.0);
    CHECK(max_curvature_mismatch(c) < 1e-6);

    const Certificate again = chart_certificate(c);
    CHECK(again.max_abs_M == doctest::Approx(c.certificate.max_abs_M).epsilon(1e-12));

    for (double x : {-0.03, 0.0, 0.02})
        for (double t : {-0.04, 0.01, 0.03}) {
            const ParamPoint p = c.to_surface(c.x_at(c.nx / 2) + x, t);
            const auto back = c.to_chart(p);
            REQUIRE(back.has_value());
            CHECK(std::abs(back->u - (c.x_at(c.nx / 2) + x)) < 1e-10);
            CHECK(std::abs(back->v - t) < 1e-10);
        }

    Chart bad = c;
    bad.node(c.nx / 2, c.nt / 2).v += 1e-3;
    CHECK_THROWS_AS(chart_certificate(bad), CertificateError);
}

TEST_CASE("m-zero chart rejects non-parabolic points") {
    CHECK_THROWS_AS(m_zero_chart(Surface::torus(2, 1), {0.0, 0.0}), PreconditionError);
    CHECK_THROWS_AS(m_zero_chart(Surface::sphere(1), {0.3, 0.2}), PreconditionError);
}

TEST_CASE("vanishing orders across parabolic curves") {
    const VanishingOrder tor = vanishing_order(Surface::torus(2, 1), {kPi / 2, 0.0});
    CHECK(tor.b == 1);
    CHECK(tor.r == 0);
    CHECK(tor.l_order == 1);
    CHECK(tor.consistent);

    const VanishingOrder flat = vanishing_order(Surface::flattened_torus(2, 1), {kPi / 2, 0.0});
    CHECK(flat.b == 3);
    CHECK(flat.r == 1);
    CHECK(flat.l_order == 2);
    CHECK(flat.consistent);
    CHECK(std::abs(flat.K_taylor[1]) < 1e-8);
    CHECK(std::abs(flat.K_taylor[2]) < 1e-8);

    const Surface pt = Surface::perturbed_torus(2, 1, 0.05);
    const VanishingOrder per = vanishing_order(pt, perturbed_parabolic_point(pt));
    CHECK(per.b == 1);
    CHECK(per.consistent);

    CHECK_THROWS_AS(vanishing_order(Surface::sphere(1), {0.3, 0.2}), PreconditionError);
}

TEST_CASE("adapted chart on the prescribed annulus has the negative-L pattern") {
    const PrescribedForms ann = PrescribedForms::annulus();
    const Chart c = annulus_chart(ann, -1);
    const Certificate& k = c.certificate;
    CHECK(c.kind == ChartKind::AsymptoticAdapted);
    CHECK(k.pattern == SignPattern::NegativeL);
    CHECK(k.max_abs_L_on_curve < 1e-8);
    CHECK(k.L_off_sign == -1);
    CHECK(k.dtL_origin < 0.0);
    CHECK(k.N_sign == 1);
    CHECK(k.min_abs_M > 0.0);
    CHECK(k.prelim_N_positive);
    CHECK(k.prelim_M_negative);
    CHECK(k.curvature_line_sign == 1);
    CHECK(k.return_offset < 0.0);
    CHECK(k.sigma_min > -1.0);
    CHECK(k.sigma_max < 1.0);
    CHECK(k.closure_residual < 1e-10);
    CHECK(k.wrap_mismatch < 1e-8);
    CHECK(k.min_jacobian > 0.0);
    CHECK(c.x_hi - c.x_lo == doctest::Approx(kTwoPi).epsilon(1e-9));
    CHECK(max_curvature_mismatch(c) < 1e-6);

    // The curve is t = 0 of the native annulus.
    for (int i = 0; i <= c.nx; ++i) CHECK(std::abs(c.node(i, 0).v) < 1e-10);

    // x = 0 sits at the largest |L_t| along the curve, and the integral of
    // L_t / M over the curve is the rigidity invariant.
    auto lt = [&](int i) {
        double L[5];
        for (int j = 0; j < 5; ++j) L[j] = chart_forms(c, i, j).L;
        return (-25 * L[0] + 48 * L[1] - 36 * L[2] + 16 * L[3] - 3 * L[4]) / (12 * c.ht());
    };
    const double l0 = std::abs(lt(0));
    double invariant = 0.0;
    for (int i = 0; i < c.nx; ++i) {
        CHECK(std::abs(lt(i)) <= l0 * (1 + 1e-5));
        invariant += lt(i) / chart_forms(c, i, 0).M * c.hx();
    }
    CHECK(std::abs(std::abs(invariant) - kPi) < 1e-5);

    CHECK_NOTHROW(chart_certificate(c));
}

TEST_CASE("adapted chart on mirrored data has the positive-L pattern") {
    const PrescribedForms mir = PrescribedForms::annulus().mirrored();
    const Chart c = annulus_chart(mir, +1);
    const Certificate& k = c.certificate;
    CHECK(k.pattern == SignPattern::PositiveL);
    CHECK(k.max_abs_L_on_curve < 1e-8);
    CHECK(k.L_off_sign == 1);
    CHECK(k.dtL_origin > 0.0);
    CHECK(k.N_sign == -1);
    CHECK(k.prelim_M_negative);
    CHECK(k.x_flipped);
    CHECK(k.wrap_mismatch < 1e-8);
    CHECK_NOTHROW(chart_certificate(c));

    const Chart a = annulus_chart(PrescribedForms::annulus(), -1);
    CHECK(k.dtL_origin == doctest::Approx(-a.certificate.dtL_origin).epsilon(1e-6));
}

TEST_CASE("adapted chart on the far side of the annulus") {
    const PrescribedForms ann = PrescribedForms::annulus();
    const TracedCurve g = trace(ann, {0.0, 0.0}, -1);
    AdaptedControls ac;
    ac.side = g.front().du > 0 ? 1 : -1;
    const Chart c = asymptotic_adapted_chart(ann, g, ac);
    CHECK(c.certificate.pattern == SignPattern::PositiveL);
    CHECK(c.certificate.curvature_line_sign == -1);
    CHECK(c.certificate.return_offset > 0.0);
    CHECK(c.certificate.closure_residual < 1e-10);
    CHECK_NOTHROW(chart_certificate(c));
}

TEST_CASE("Y sigma quadratic law") {
    const std::vector<double> sigmas{-1.0, -0.5, 0.0, 0.5, 1.0};
    for (const PrescribedForms& src : {PrescribedForms::annulus(), PrescribedForms::annulus().mirrored()}) {
        const Chart c = annulus_chart(src, src.describe() == "prescribed-annulus" ? -1 : +1);
        const YSigmaCheck y = y_sigma_law(c, sigmas, 200);
        CHECK(y.nodes == 200);
        CHECK(y.max_law_deviation < 1e-8);
        CHECK(y.max_null_residual < 1e-8);
        CHECK(y.max_ratio_spread < 1e-8);
    }
}

TEST_CASE("adapted chart preconditions") {
    const PrescribedForms ann = PrescribedForms::annulus();
    TracedCurve open = trace(ann, {0.0, 0.0}, -1);
    open.closed = false;
    CHECK_THROWS_AS(asymptotic_adapted_chart(ann, open, {}), PreconditionError);

    // Flat annulus: the invariant vanishes.
    PrescribedForms::Fields f = ann.fields();
    f.E = [](double, double) { return 1.0; };
    f.L = [](double, double) { return 0.0; };
    const PrescribedForms flat(f, ann.domain(), "flat-annulus");
    const TracedCurve g = trace(flat, {0.0, 0.0}, -1);
    REQUIRE(g.closed);
    CHECK_THROWS_AS(asymptotic_adapted_chart(flat, g, {}), PreconditionError);
}

TEST_CASE("chart export round trip") {
    auto src = std::make_shared<PrescribedForms>(PrescribedForms::annulus());
    const TracedCurve g = trace(*src, {0.0, 0.0}, -1);
    AdaptedControls ac;
    ac.side = g.front().du > 0 ? -1 : 1;
    const Chart c = asymptotic_adapted_chart(src, g, ac);
    std::stringstream json, csv;
    write_chart(c, json, csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x,t,u,v");
    csv.seekg(0);
    const Chart r = read_chart(json, csv, src);
    CHECK(r.kind == c.kind);
    CHECK(r.nx == c.nx);
    CHECK(r.nt == c.nt);
    CHECK(r.x_hi == c.x_hi);
    CHECK(r.certificate.pattern == c.certificate.pattern);
    REQUIRE(r.nodes.size() == c.nodes.size());
    double err = 0.0;
    for (std::size_t k = 0; k < c.nodes.size(); ++k)
        err = std::max({err, std::abs(r.nodes[k].u - c.nodes[k].u), std::abs(r.nodes[k].v - c.nodes[k].v)});
    CHECK(err == 0.0);
    CHECK_NOTHROW(chart_certificate(r));
}
