#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tightkit/asymptotic.hpp"
#include "tightkit/chart.hpp"
#include "tightkit/codazzi.hpp"
#include "tightkit/error.hpp"
#include "tightkit/forms.hpp"
#include "tightkit/integrals.hpp"
#include "tightkit/invariant.hpp"
#include "tightkit/regions.hpp"
#include "tightkit/return_map.hpp"

using namespace tightkit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SystemGrid grid(double x_lo, double x_hi, double t_lo, double t_hi, int nx, int nt, bool periodic = false) {
    SystemGrid g;
    g.x_lo = x_lo, g.x_hi = x_hi, g.t_lo = t_lo, g.t_hi = t_hi, g.nx = nx, g.nt = nt, g.periodic_x = periodic;
    return g;
}

SystemField wave_field() {
    return assemble([](double, double) { return BaseForms{1.0, 0.0, 1.0, -1.0, 0.0, 1.0, std::nullopt}; },
                    grid(-0.2, 1.2, 0.0, 0.8, 29, 17), "wave");
}

SystemField desk_field() {
    return assemble(
        [](double, double t) {
            BaseForms b{1.0, 0.0, 1.0, -t, 0.0, 1.0, std::nullopt};
            b.k = CodazziCoefficients{0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
            return b;
        },
        grid(-1.0, 1.0, 0.0, 1.0, 33, 33), "desk");
}

SystemField torus_strip() {
    auto src = std::make_shared<SurfaceForms>(Surface::torus(2, 1));
    return assemble(sampler(src, true), grid(0.0, kTwoPi, kPi / 2 + 0.05, kPi - 0.05, 96, 41, true), "torus-strip");
}

PrescribedForms reflected_annulus() { return PrescribedForms::annulus(0.5).reflected_t(); }

SystemField annulus_field(const PrescribedForms& p) {
    return assemble(sampler(std::make_shared<PrescribedForms>(p)), grid(0.0, kTwoPi, 0.0, 0.25, 128, 17, true),
                    p.describe());
}

Chart annulus_chart() {
    auto src = std::make_shared<PrescribedForms>(PrescribedForms::annulus());
    const TracedCurve g = trace(*src, {0.0, 0.0}, -1);
    if (!g.closed) throw ConvergenceError("annulus curve did not close");
    AdaptedControls ac;
    ac.side = g.front().du > 0 ? -1 : 1;
    return asymptotic_adapted_chart(src, g, ac);
}

SolverControls linear() {
    SolverControls c;
    c.quasilinear = false;
    return c;
}

Outcome tightness() {
    const auto t0 = std::chrono::steady_clock::now();
    QuadratureSpec q;
    q.nu = q.nv = 512;
    const TightnessReport r = tightness_report(Surface::torus(2, 1), q);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double e_pos = std::abs(r.positive_curvature - 4.0 * kPi);
    const double e_abs = std::abs(r.total_absolute_curvature - 8.0 * kPi);
    const double gb = std::abs(r.gauss_bonnet_defect);
    return {e_pos < 1e-6 && secs < 10.0 && e_abs < 1e-6 && gb < 1e-8,
            fmt("|int_S+ K - 4pi| = %.1e, |int |K| - 8pi| = %.1e, Gauss-Bonnet defect %.1e, %.2f s", e_pos, e_abs, gb,
                secs)};
}

Outcome gauss_codazzi_residuals() {
    const Surface tor = Surface::torus(2, 1);
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uu(kPi / 2, 3 * kPi / 2), vv(0.0, kTwoPi);
    double worst = 1e300, worst_res = 0.0;
    int points = 0;
    while (points < 100) {
        const ParamPoint p{uu(rng), vv(rng)};
        if (!(fundamental_data(tor, p).K < 0.0)) continue;
        ++points;
        std::vector<double> r;
        for (double h : {1e-2, 1e-3, 1e-4}) r.push_back(codazzi_residuals(tor, p, h).max_abs());
        worst = std::min({worst, std::log10(r[0] / r[1]), std::log10(r[1] / r[2])});
        worst_res = std::max(worst_res, r[2]);
    }
    return {worst >= 1.9, fmt("min slope %.3f over %d S- points, max residual at h=1e-4 %.1e", worst, points, worst_res)};
}

Outcome asymptotic_tracing() {
    // dv/du = sqrt(-L/N) with L = r = 1, N = (R + r cos u) cos u on the torus.
    boost::math::quadrature::tanh_sinh<double> ts;
    const double oracle = ts.integrate([](double u) { return 1.0 / std::sqrt(-(2.0 + std::cos(u)) * std::cos(u)); },
                                       kPi / 2, 3 * kPi / 2);
    const Surface tor = Surface::torus(2, 1);
    const SurfaceForms src(tor);
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> uu(kPi / 2 + 0.05, 3 * kPi / 2 - 0.05), vv(0.0, kTwoPi);
    double dv_err = 0.0, tangency = 0.0, ends = 0.0;
    bool crossed = true;
    for (int k = 0; k < 10; ++k) {
        TraceDiagnostics diag;
        const TracedCurve c = trace_with_diagnostics(src, {uu(rng), vv(rng)}, k % 2 ? -1 : 1, {}, diag);
        crossed = crossed && !c.closed && diag.head.parabolic && diag.tail.parabolic;
        const double lo = std::min(c.front().p.u, c.back().p.u), hi = std::max(c.front().p.u, c.back().p.u);
        ends = std::max({ends, std::abs(lo - kPi / 2), std::abs(hi - 3 * kPi / 2)});
        dv_err = std::max(dv_err, std::abs(std::abs(c.back().p.v - c.front().p.v) - oracle));
        tangency = std::max({tangency, diag.head.tangency_angle, diag.tail.tangency_angle});
    }
    const RegionDecomposition reg = decompose_regions(tor);
    std::size_t closed = 0;
    for (int fam : {+1, -1}) closed += cylinder_decomposition(tor, reg, 0, fam).closed_curves.size();
    return {crossed && ends < 1e-6 && dv_err < 1e-5 && tangency < 1e-3 && closed == 0,
            fmt("10 traces cross S- (end offset %.1e), |dv - oracle| = %.1e, tangency %.1e rad, closed curves %zu",
                ends, dv_err, tangency, closed)};
}

Outcome invariant_identity() {
    const InvariantRecord r = rigidity_invariant(PrescribedForms::annulus());
    const InvariantRecord m = rigidity_invariant(PrescribedForms::annulus().mirrored());
    const InvariantRecord f = rigidity_invariant(PrescribedForms::flat_annulus());
    const bool ok = std::abs(r.coordinate + kPi) < 1e-6 && std::abs(r.intrinsic + kPi) < 1e-6 && r.discrepancy < 1e-6 &&
                    std::abs(m.intrinsic - kPi) < 1e-6 && m.discrepancy < 1e-6 && std::abs(f.coordinate) < 1e-12 &&
                    std::abs(f.intrinsic) < 1e-12;
    return {ok, fmt("coordinate %.9f, intrinsic %.9f (mirrored %.9f), discrepancy %.1e; flat %.1e = %.1e", r.coordinate,
                    r.intrinsic, m.intrinsic, std::max(r.discrepancy, m.discrepancy), f.coordinate, f.intrinsic)};
}

Outcome y_sigma() {
    const YSigmaCheck y = y_sigma_law(annulus_chart(), {-1.0, -0.5, 0.0, 0.5, 1.0}, 200);
    return {y.nodes == 200 && y.max_ratio_spread < 1e-8 && y.max_null_residual < 1e-8 && y.max_law_deviation < 1e-8,
            fmt("%d nodes, ratio spread %.1e, null residual %.1e, law deviation %.1e", y.nodes, y.max_ratio_spread,
                y.max_null_residual, y.max_law_deviation)};
}

Outcome symmetrizer_certificates() {
    const SystemField desk = desk_field();
    const Symmetrizer d = build_symmetrizer(desk, SymmetrizerKind::Boundary);
    const Symmetrizer fk = build_symmetrizer(annulus_field(reflected_annulus()), SymmetrizerKind::ClosedCurveF);
    const SystemField mirror = annulus_field(reflected_annulus().mirrored());
    const Symmetrizer m = build_symmetrizer(mirror, SymmetrizerKind::ClosedCurve);
    Symmetrizer unflipped = m;
    unflipped.system_sign = 1;
    const bool fails_unflipped = !positivity_certificate(mirror, unflipped, m.delta).passed;
    const bool ok = d.report.passed && d.report.min_eigenvalue > 0.0 && std::isfinite(d.lambda_bar) &&
                    fk.report.passed && std::abs(fk.f[0] - 0.5) < 1e-9 && m.report.passed && m.system_sign == -1 &&
                    fails_unflipped;
    return {ok, fmt("desk lambda_bar %g min-eig %.3g; f-kind f %.9f min-eig %.3g; mirrored sign %d min-eig %.3g "
                    "(unflipped fails: %s)",
                    d.lambda_bar, d.report.min_eigenvalue, fk.f[0], fk.report.min_eigenvalue, m.system_sign,
                    m.report.min_eigenvalue, fails_unflipped ? "yes" : "no")};
}

Outcome solver_correctness() {
    // d'Alembert: v = sin x cos t, w = cos x sin t.
    const SystemField wave = wave_field();
    auto sup_error = [](const CodazziState& s) {
        double e = 0.0;
        for (const auto& tri : s.triangles)
            for (int k = 0; k < 3; ++k) {
                const StateNode &a = s.nodes[tri[k]], &b = s.nodes[tri[(k + 1) % 3]];
                const double x = 0.5 * (a.x + b.x), t = 0.5 * (a.t + b.t);
                if (t > 0.4 || std::abs(x - 0.5) > 0.45 - t) continue;
                e = std::max({e, std::abs(0.5 * (a.v + b.v) - std::sin(x) * std::cos(t)),
                              std::abs(0.5 * (a.w + b.w) - std::cos(x) * std::sin(t))});
            }
        return e;
    };
    std::vector<double> err;
    for (int n : {64, 128, 256}) {
        CauchyData d;
        d.n = n + 1;
        d.U = [](double x) { return std::array<double, 2>{std::sin(x), 0.0}; };
        err.push_back(sup_error(solve(wave, d, linear())));
    }
    const double slope = std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));

    // Zero data on the corpus, Cauchy and Goursat, both modes.
    auto cauchy = [](double t0, double lo, double hi, int n, bool periodic, int levels) {
        CauchyData c;
        c.t0 = t0, c.x_lo = lo, c.x_hi = hi, c.n = n, c.periodic = periodic, c.max_levels = levels;
        return c;
    };
    auto goursat = [](double x, double t, double plus, double minus) {
        GoursatData g;
        g.corner = {x, t};
        g.length_plus = plus, g.length_minus = minus;
        g.n_plus = g.n_minus = 24;
        return g;
    };
    struct Case {
        SystemField field;
        CauchyData c;
        GoursatData g;
    };
    const std::vector<Case> corpus{
        {wave, cauchy(0.0, 0.0, 1.0, 65, false, -1), goursat(0.5, 0.1, 0.3, 0.3)},
        {desk_field(), cauchy(0.2, -0.4, 0.4, 65, false, -1), goursat(0.0, 0.2, 0.3, 0.3)},
        {torus_strip(), cauchy(kPi / 2 + 0.3, 0.0, 1.0, 65, false, -1), goursat(1.0, kPi / 2 + 0.3, 0.2, 0.2)},
        {annulus_field(reflected_annulus()), cauchy(0.05, 0.0, kTwoPi, 128, true, 40), goursat(1.0, 0.05, 0.3, 0.05)},
        {annulus_field(reflected_annulus().mirrored()), cauchy(0.05, 0.0, kTwoPi, 128, true, 40),
         goursat(1.0, 0.05, 0.3, 0.05)},
        {assemble(annulus_chart()), cauchy(0.05, 0.0, kTwoPi, 128, true, 40), goursat(1.0, 0.05, 0.05, 0.3)},
    };
    double zero = 0.0;
    bool ran = true;
    for (const Case& c : corpus)
        for (bool quasi : {true, false}) {
            SolverControls ctl;
            ctl.quasilinear = quasi;
            const CodazziState a = solve(c.field, c.c, ctl), b = solve(c.field, c.g, ctl);
            ran = ran && a.levels > 0 && b.levels > 0;
            zero = std::max({zero, a.max_abs_U(), b.max_abs_U()});
        }

    // Energy identity residual against the mesh, linear mode.
    const SystemField desk = desk_field(), torus = torus_strip();
    const Symmetrizer ds = build_symmetrizer(desk, SymmetrizerKind::Boundary), ti = identity_symmetrizer(torus);
    std::vector<double> rd, rt;
    for (int n : {32, 64, 128}) {
        CauchyData d;
        d.t0 = 0.3, d.x_lo = -0.25, d.x_hi = 0.25, d.n = n + 1;
        d.U = [](double x) { return std::array<double, 2>{1e-3 * std::sin(7 * x + 1), 1e-3 * std::cos(5 * x)}; };
        rd.push_back(energy_audit(desk, ds, solve(desk, d, linear())).relative_residual);
        d.t0 = kPi / 2 + 0.3, d.x_lo = 0.0, d.x_hi = 1.0;
        rt.push_back(energy_audit(torus, ti, solve(torus, d, linear())).relative_residual);
    }
    double energy_order = 1e300;
    for (int k = 0; k < 2; ++k)
        energy_order = std::min({energy_order, std::log2(rd[k] / rd[k + 1]), std::log2(rt[k] / rt[k + 1])});

    return {slope >= 1.9 && ran && zero < 1e-12 && energy_order >= 1.9,
            fmt("d'Alembert slope %.3f (error %.1e); zero data max|U| %.1e on %zu fields; energy residual order %.3f",
                slope, err[2], zero, corpus.size(), energy_order)};
}

Outcome energy_decay() {
    const SystemField f = desk_field();
    const Symmetrizer s = build_symmetrizer(f, SymmetrizerKind::Boundary);
    AuditControls ac;
    ac.q = 0.5 * s.report.min_eigenvalue;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(-1e-3, 1e-3);
    double worst = 1e300;
    int held = 0;
    for (int k = 0; k < 20; ++k) {
        const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng), a4 = amp(rng);
        CauchyData d;
        d.t0 = 0.3, d.x_lo = -0.25, d.x_hi = 0.25, d.n = 65;
        d.U = [=](double x) {
            return std::array<double, 2>{a1 * std::sin(7 * x + 1) + a2 * std::cos(3 * x), a3 * std::cos(5 * x) + a4};
        };
        const EnergyLedger e = energy_audit(f, s, solve(f, d), ac);
        if (e.margin > 0.0 && e.min_eigenvalue > 0.0) ++held;
        worst = std::min(worst, e.margin / e.interior);
    }
    return {s.report.passed && held == 20,
            fmt("q = %.3g, margin > 0 in %d/20 perturbations, worst relative margin %.3f", ac.q, held, worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"tightness", tightness},
        {"gauss-codazzi-residuals", gauss_codazzi_residuals},
        {"asymptotic-tracing", asymptotic_tracing},
        {"invariant-identity", invariant_identity},
        {"y-sigma-law", y_sigma},
        {"symmetrizer-certificates", symmetrizer_certificates},
        {"solver-correctness", solver_correctness},
        {"energy-decay", energy_decay},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
