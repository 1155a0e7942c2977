#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "report_internal.hpp"
#include "tightkit/asymptotic.hpp"
#include "tightkit/chart.hpp"
#include "tightkit/codazzi.hpp"
#include "tightkit/error.hpp"
#include "tightkit/integrals.hpp"
#include "tightkit/invariant.hpp"
#include "tightkit/regions.hpp"
#include "tightkit/report.hpp"
#include "tightkit/return_map.hpp"

namespace tightkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int decimals = 5) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v));
    return (v < 0.0 ? "−" : "") + std::string(buf);
}

// Shortest exact form with an unpadded exponent: 1e-6, 2.5e-3, 0.5.
std::string compact(double v) {
    if (v >= 1e-2 && v < 1e4) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }
    for (int d = 0; d < 6; ++d) {
        const std::string s = format_sci(v, d);
        if (std::stod(s) == v || d == 5) return s;
    }
    return format_sci(v, 5);
}

json point(ParamPoint p) { return json::array({p.u, p.v}); }

struct OrbitStart {
    ParamPoint start;
    int family = 0;
    double multiplier = 0.0;
};

struct Context {
    const RunConfig& cfg;
    detail::SourceBundle src;
    fs::path out;
    std::optional<RegionDecomposition> regions;
    std::vector<OrbitStart> orbits;
    std::vector<TracedCurve> closed_curves;
    std::optional<Chart> chart;

    double tol(double task_default) const { return cfg.tol.value_or(task_default); }
    json provenance() const {
        return {{"seed", cfg.seed}, {"source", src.forms->describe()}, {"family", cfg.surface.family}};
    }
};

// Writes one task's files and records their hashes.
class Writer {
public:
    Writer(Context& ctx, TaskRecord& rec) : ctx_(ctx), rec_(rec) { fs::create_directories(ctx.out / rec.name); }

    void text(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const std::string rel = rec_.name + "/" + name;
        const fs::path p = ctx_.out / rel;
        {
            std::ofstream f(p, std::ios::binary);
            if (!f) throw ArtifactError("cannot write '" + p.string() + "'");
            body(f);
        }
        rec_.artifacts.push_back({rel, sha256_file(p.string()), static_cast<std::uint64_t>(fs::file_size(p))});
    }
    void record(const std::string& name, const json& j) {
        text(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

private:
    Context& ctx_;
    TaskRecord& rec_;
};

void check(TaskRecord& rec, std::string name, std::string headline, double value, bool pass, std::string target = "") {
    rec.checks.push_back({std::move(name), std::move(headline), value, pass, std::move(target)});
}

void write_curve(std::ostream& o, const TracedCurve& c) {
    char buf[160];
    o << "u,v,du,dv,s\n";
    for (const auto& s : c.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.p.u, s.p.v, s.du, s.dv, s.s);
        o << buf;
    }
}

void task_analyze(Context& ctx, TaskRecord& rec) {
    if (!ctx.src.surface) throw PreconditionError("analyze needs a closed surface family");
    QuadratureSpec q;
    q.nu = q.nv = ctx.cfg.quadrature_n;
    q.tol = ctx.tol(ctx.cfg.quadrature_tol);
    const TightnessReport r = tightness_report(*ctx.src.surface, q);
    Writer w(ctx, rec);
    json j = ctx.provenance();
    j["tightness"] = {{"tight", r.tight},
                      {"positive_curvature", r.positive_curvature},
                      {"total_absolute_curvature", r.total_absolute_curvature},
                      {"total_curvature", r.total_curvature},
                      {"gauss_bonnet_defect", r.gauss_bonnet_defect},
                      {"lower_bound", r.lower_bound},
                      {"error_estimate", r.error_estimate},
                      {"area_positive", r.area_positive},
                      {"area_negative", r.area_negative},
                      {"area_total", r.area_total},
                      {"euler_characteristic", r.euler_characteristic},
                      {"nu", r.nu},
                      {"nv", r.nv},
                      {"tol", r.tol}};
    w.record("tightness.json", j);

    const double tol = q.tol, gb_tol = ctx.tol(1e-8);
    check(rec, "tightness", "∫_{S+}K dA = " + fixed(r.positive_curvature), r.positive_curvature,
          std::abs(r.positive_curvature - 4.0 * kPi) < tol, "4π ± " + compact(tol));
    check(rec, "total-curvature", "∫|K| dA = " + fixed(r.total_absolute_curvature), r.total_absolute_curvature,
          std::abs(r.total_absolute_curvature - r.lower_bound) < tol,
          "2π(4−χ) = " + fixed(r.lower_bound) + " ± " + compact(tol));
    check(rec, "gauss-bonnet", "defect = " + format_sci(r.gauss_bonnet_defect), r.gauss_bonnet_defect,
          std::abs(r.gauss_bonnet_defect) < gb_tol, "< " + compact(gb_tol));
}

void task_decompose(Context& ctx, TaskRecord& rec) {
    Writer w(ctx, rec);
    json j = ctx.provenance();
    json curves = json::array(), comps = json::array(), cyl = json::array(), closed = json::array();
    bool closable = true, resolved = true;
    auto add_cylinder = [&](const CylinderDecomposition& d, int component, int family, bool swap, double x0) {
        json regs = json::array();
        for (const auto& r : d.regions) regs.push_back({{"t_lo", r.t_lo}, {"t_hi", r.t_hi}, {"drift", r.drift}, {"exits", r.exits}});
        cyl.push_back({{"component", component},
                       {"family", family},
                       {"status", "ok"},
                       {"degenerate", d.degenerate},
                       {"unresolved_cluster", d.unresolved_cluster},
                       {"regions", regs}});
        resolved = resolved && !d.unresolved_cluster;
        for (const auto& fp : d.closed_curves) {
            const ParamPoint start = swap ? ParamPoint{fp.t, x0} : ParamPoint{x0, fp.t};
            ctx.orbits.push_back({start, family, fp.multiplier});
            closed.push_back({{"component", component},
                              {"family", family},
                              {"t", fp.t},
                              {"start", point(start)},
                              {"multiplier", fp.multiplier},
                              {"residual", fp.residual}});
        }
    };
    if (ctx.src.surface) {
        DecomposeControls dc;
        dc.nu = dc.nv = ctx.cfg.decompose_n;
        ctx.regions = decompose_regions(*ctx.src.surface, dc);
        const RegionDecomposition& reg = *ctx.regions;
        for (const auto& c : reg.parabolic_curves) {
            const std::string file = "parabolic_" + std::to_string(c.id) + ".csv";
            curves.push_back({{"id", c.id},
                              {"closable", c.closable},
                              {"closed", c.curve.closed},
                              {"samples", c.curve.samples.size()},
                              {"min_abs_H", c.min_abs_H},
                              {"monotone_sign_change", c.monotone_sign_change},
                              {"adjacent_components", c.adjacent_components},
                              {"file", file}});
            closable = closable && c.closable;
            w.text(file, [&](std::ostream& o) { write_curve(o, c.curve); });
        }
        for (std::size_t k = 0; k < reg.negative_components.size(); ++k) {
            const auto& c = reg.negative_components[k];
            comps.push_back({{"id", c.id}, {"boundary_curves", c.boundary_curves}, {"area", c.area}, {"nodes", c.node_count}});
            for (int fam : {+1, -1}) {
                try {
                    add_cylinder(cylinder_decomposition(*ctx.src.surface, reg, static_cast<int>(k), fam), c.id, fam, true,
                                 ctx.src.surface->domain().v.lo);
                } catch (const PreconditionError& e) {
                    cyl.push_back({{"component", c.id}, {"family", fam}, {"status", "unsupported"}, {"reason", e.what()}});
                }
            }
        }
        j["warnings"] = reg.warnings;
        j["euler_characteristic"] = reg.euler_characteristic;
    } else {
        const double h = 0.6 * ctx.cfg.surface.t_extent;
        for (int fam : {+1, -1})
            add_cylinder(cylinder_decomposition(chart_from_forms(*ctx.src.forms, fam, false, -h, h)), 0, fam, false,
                         ctx.src.forms->domain().u.lo);
    }
    j["parabolic_curves"] = curves;
    j["negative_components"] = comps;
    j["cylinders"] = cyl;
    j["closed_asymptotic_curves"] = closed;
    w.record("regions.json", j);

    check(rec, "parabolic", "curves = " + std::to_string(curves.size()), static_cast<double>(curves.size()), closable);
    check(rec, "closed-curves", "closed asymptotic curves = " + std::to_string(ctx.orbits.size()),
          static_cast<double>(ctx.orbits.size()), resolved);
}

void task_trace(Context& ctx, TaskRecord& rec) {
    const FormSource& src = *ctx.src.forms;
    const Domain dom = src.domain();
    std::mt19937_64 rng(ctx.cfg.seed);
    auto axis_sample = [&](const Axis& a) {
        const double inset = a.periodic ? 0.0 : 0.05 * a.length();
        return std::uniform_real_distribution<double>(a.lo + inset, a.hi - inset)(rng);
    };
    struct Job {
        ParamPoint start;
        int family;
        bool orbit;
    };
    std::vector<Job> jobs;
    for (int k = 0, tries = 0; k < ctx.cfg.trace_count && tries < 100000; ++tries) {
        const ParamPoint p{axis_sample(dom.u), axis_sample(dom.v)};
        if (fundamental_data(src, p).K < -1e-3) jobs.push_back({p, k % 2 == 0 ? +1 : -1, false}), ++k;
    }
    for (const auto& o : ctx.orbits) jobs.push_back({o.start, o.family, true});

    Writer w(ctx, rec);
    json list = json::array();
    double worst = 0.0;
    int failures = 0, parabolic_ends = 0, orbits_closed = 0, orbits = 0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const Job& job = jobs[k];
        json r = {{"start", point(job.start)}, {"family", job.family}, {"orbit", job.orbit}};
        try {
            TraceDiagnostics diag;
            const TracedCurve c = trace_with_diagnostics(src, job.start, job.family, {}, diag);
            const std::string file = "trace_" + std::to_string(k) + ".csv";
            w.text(file, [&](std::ostream& o) { write_curve(o, c); });
            r["file"] = file;
            r["closed"] = c.closed;
            r["termination"] = c.termination;
            r["winding"] = c.winding;
            r["length"] = c.length();
            r["front"] = point(c.front().p);
            r["back"] = point(c.back().p);
            r["du"] = c.back().p.u - c.front().p.u;
            r["dv"] = c.back().p.v - c.front().p.v;
            for (const auto& [name, end] : {std::pair{"head", diag.head}, std::pair{"tail", diag.tail}}) {
                r[name] = {{"parabolic", end.parabolic}, {"tangency_angle", end.tangency_angle}};
                if (end.parabolic) worst = std::max(worst, end.tangency_angle), ++parabolic_ends;
            }
            if (diag.spiral_limit) r["spiral_limit"] = *diag.spiral_limit;
            if (job.orbit) {
                ++orbits;
                if (c.closed) ++orbits_closed, ctx.closed_curves.push_back(c);
            }
        } catch (const Error& e) {
            r["error"] = e.what();
            ++failures;
            if (job.orbit) ++orbits;
        }
        list.push_back(r);
    }
    json j = ctx.provenance();
    j["traces"] = list;
    w.record("traces.json", j);

    const double tol = ctx.tol(ctx.cfg.trace_tangency_tol);
    check(rec, "trace",
          "traces = " + std::to_string(jobs.size() - failures) + "/" + std::to_string(jobs.size()) +
              (parabolic_ends > 0 ? ", max tangency = " + format_sci(worst) + " rad" : ", no parabolic ends"),
          worst, failures == 0 && worst < tol, "< " + compact(tol) + " rad");
    if (orbits > 0)
        check(rec, "closed-traces", "closed = " + std::to_string(orbits_closed) + "/" + std::to_string(orbits),
              orbits_closed, orbits_closed == orbits);
}

json invariant_json(const InvariantRecord& r) {
    return {{"intrinsic", r.intrinsic},     {"coordinate", r.coordinate}, {"relation_sign", r.relation_sign},
            {"discrepancy", r.discrepancy}, {"orientation", r.orientation}, {"samples", r.samples}};
}

void task_invariant(Context& ctx, TaskRecord& rec) {
    InvariantControls ic;
    ic.samples = ctx.cfg.invariant_samples;
    const double tol = ctx.tol(ctx.cfg.invariant_tol);
    json j = ctx.provenance();
    auto row = [&](const std::string& name, const InvariantRecord& r) {
        check(rec, name,
              "coordinate = " + fixed(r.coordinate) + ", intrinsic = " + fixed(r.intrinsic) +
                  ", discrepancy = " + format_sci(r.discrepancy),
              r.discrepancy, r.discrepancy < tol, "< " + compact(tol));
    };
    if (ctx.src.prescribed) {
        const InvariantRecord r = rigidity_invariant(*ctx.src.prescribed, ic);
        j["annulus"] = invariant_json(r);
        row("invariant", r);
    }
    json curves = json::array();
    for (std::size_t k = 0; k < ctx.closed_curves.size(); ++k) {
        const InvariantRecord r = rigidity_invariant(*ctx.src.forms, ctx.closed_curves[k], ic);
        curves.push_back(invariant_json(r));
        row("invariant-curve", r);
    }
    j["closed_curves"] = curves;
    if (rec.checks.empty()) check(rec, "invariant", "closed curves = 0", 0.0, true);
    Writer(ctx, rec).record("invariant.json", j);
}

void task_chart(Context& ctx, TaskRecord& rec) {
    const double tol = ctx.tol(ctx.cfg.chart_tol);
    json extra;
    if (!ctx.closed_curves.empty()) {
        const TracedCurve& g = ctx.closed_curves.front();
        AdaptedControls ac;
        ac.side = g.front().du > 0 ? -1 : 1;
        ac.width = ctx.cfg.chart_width;
        ac.nx = ctx.cfg.chart_nx;
        ac.nt = ctx.cfg.chart_nt;
        ctx.chart = asymptotic_adapted_chart(ctx.src.forms, g, ac);
        const YSigmaCheck y = y_sigma_law(*ctx.chart, {-1.0, -0.5, 0.0, 0.5, 1.0}, 200);
        extra = {{"nodes", y.nodes},
                 {"max_law_deviation", y.max_law_deviation},
                 {"max_null_residual", y.max_null_residual},
                 {"max_ratio_spread", y.max_ratio_spread}};
        check(rec, "chart", "Y_σ spread = " + format_sci(y.max_ratio_spread), y.max_ratio_spread,
              y.max_ratio_spread < tol && y.max_null_residual < tol, "< " + compact(tol));
    } else if (ctx.src.surface && ctx.regions && !ctx.regions->parabolic_curves.empty()) {
        MZeroControls mc;
        mc.width = ctx.cfg.chart_width;
        ctx.chart = m_zero_chart(*ctx.src.surface, ctx.regions->parabolic_curves.front().curve.front().p, mc);
        const Certificate& c = ctx.chart->certificate;
        const double rel = c.form_scale > 0.0 ? c.max_abs_M / c.form_scale : c.max_abs_M;
        check(rec, "chart", "max|M|/|II| = " + format_sci(rel), rel, rel < tol && c.min_jacobian > 0.0,
              "< " + compact(tol));
    } else {
        throw PreconditionError("no closed asymptotic curve or parabolic curve to build a chart on");
    }
    const Certificate cert = chart_certificate(*ctx.chart);
    Writer w(ctx, rec);
    std::ostringstream header, nodes;
    write_chart(*ctx.chart, header, nodes);
    json j = ctx.provenance();
    j["chart"] = json::parse(header.str());
    j["pattern"] = to_string(cert.pattern);
    if (!extra.is_null()) j["y_sigma"] = extra;
    w.record("chart.json", j);
    w.text("chart_nodes.csv", [&](std::ostream& o) { o << nodes.str(); });
}

// Band of a surface of revolution between two parabolic parallels, x = v and t = u.
std::optional<SystemField> band_field(const Context& ctx) {
    if (!ctx.src.surface || !ctx.regions) return std::nullopt;
    const RegionDecomposition& reg = *ctx.regions;
    for (const auto& comp : reg.negative_components) {
        std::vector<double> us;
        for (int id : comp.boundary_curves) {
            for (const auto& pc : reg.parabolic_curves) {
                if (pc.id != id) continue;
                double lo = 1e300, hi = -1e300;
                for (const auto& s : pc.curve.samples) lo = std::min(lo, s.p.u), hi = std::max(hi, s.p.u);
                if (hi - lo < 1e-8) us.push_back(0.5 * (lo + hi));
            }
        }
        if (us.size() != 2 || us.size() != comp.boundary_curves.size()) continue;
        double a = std::min(us[0], us[1]), b = std::max(us[0], us[1]);
        if (fundamental_data(*ctx.src.forms, {0.5 * (a + b), 0.0}).K >= 0.0) std::swap(a, b), b += kTwoPi;
        SystemGrid g;
        g.x_lo = ctx.src.surface->domain().v.lo;
        g.x_hi = ctx.src.surface->domain().v.hi;
        g.periodic_x = ctx.src.surface->domain().v.periodic;
        g.t_lo = a + ctx.cfg.codazzi_margin;
        g.t_hi = b - ctx.cfg.codazzi_margin;
        g.nx = ctx.cfg.codazzi_nx;
        g.nt = ctx.cfg.codazzi_nt;
        if (!(g.t_hi > g.t_lo)) continue;
        return assemble(sampler(ctx.src.forms, true), g, ctx.src.forms->describe() + " band");
    }
    return std::nullopt;
}

json symmetrizer_json(const Symmetrizer& s) {
    const PositivityReport& r = s.report;
    return {{"kind", to_string(s.kind)},
            {"system_sign", s.system_sign},
            {"lambda_bar", s.lambda_bar},
            {"lambda0", s.lambda0},
            {"epsilon", s.epsilon},
            {"bump_center", s.bump_center},
            {"bump_concentration", s.bump_concentration},
            {"f", s.f},
            {"delta", s.delta},
            {"searched", s.searched},
            {"report", {{"passed", r.passed},
                        {"min_eigenvalue", r.min_eigenvalue},
                        {"at", {r.at_x, r.at_t}},
                        {"max_eigenvalue", r.max_eigenvalue},
                        {"min_flux_eigenvalue", r.min_flux_eigenvalue},
                        {"flux_ok", r.flux_ok},
                        {"nodes", r.nodes}}}};
}

void task_codazzi(Context& ctx, TaskRecord& rec) {
    std::optional<SystemField> field;
    const bool closed_chart = ctx.chart && ctx.chart->kind == ChartKind::AsymptoticAdapted;
    if (closed_chart) field = assemble(*ctx.chart);
    else field = band_field(ctx);
    if (!field) throw PreconditionError("no closed-curve chart or hyperbolic band to pose the system on");
    const SystemField& f = *field;
    json j = ctx.provenance();
    j["field"] = {{"source", f.source},
                  {"pattern", to_string(f.pattern)},
                  {"grid",
                   {{"x", {f.grid.x_lo, f.grid.x_hi}},
                    {"t", {f.grid.t_lo, f.grid.t_hi}},
                    {"nx", f.grid.nx},
                    {"nt", f.grid.nt},
                    {"periodic_x", f.grid.periodic_x}}}};

    // Symmetrizer search.
    std::vector<SymmetrizerKind> kinds;
    const std::string& want = ctx.cfg.codazzi_symmetrizer;
    if (want == "auto") {
        if (closed_chart) kinds = {SymmetrizerKind::ClosedCurveF, SymmetrizerKind::ClosedCurve};
        else kinds = {SymmetrizerKind::Boundary};
    } else if (want == "boundary") kinds = {SymmetrizerKind::Boundary};
    else if (want == "closed") kinds = {SymmetrizerKind::ClosedCurve};
    else if (want == "f") kinds = {SymmetrizerKind::ClosedCurveF};
    SymmetrizerControls sc;
    sc.max_doublings = ctx.cfg.codazzi_max_doublings;
    Symmetrizer sym = identity_symmetrizer(f);
    json attempts = json::array();
    if (want != "none" && want != "identity") {
        bool done = false;
        double best = -1e300;
        std::string last;
        for (std::size_t k = 0; k < kinds.size() && !done; ++k) {
            try {
                sym = build_symmetrizer(f, kinds[k], sc);
                attempts.push_back({{"kind", to_string(kinds[k])}, {"status", "certified"}});
                done = true;
            } catch (const SymmetrizerSearchError& e) {
                attempts.push_back({{"kind", to_string(kinds[k])}, {"status", "search-failed"},
                                    {"best_min_eigenvalue", e.best.min_eigenvalue}});
                best = std::max(best, e.best.min_eigenvalue);
                last = e.what();
            } catch (const PreconditionError& e) {
                attempts.push_back({{"kind", to_string(kinds[k])}, {"status", "not-applicable"}, {"reason", e.what()}});
                last = e.what();
            }
        }
        if (done) {
            check(rec, "symmetrizer", "min-eig = " + format_sci(sym.report.min_eigenvalue), sym.report.min_eigenvalue,
                  sym.report.passed);
        } else if (best > -1e300) {
            check(rec, "symmetrizer", "min-eig = " + format_sci(best), best, false);
        } else {
            check(rec, "symmetrizer", "not applicable: " + last, std::nan(""), false);
        }
        sym = done ? sym : identity_symmetrizer(f);
    }
    j["symmetrizer_attempts"] = attempts;
    j["symmetrizer"] = symmetrizer_json(sym);

    // Zero data in both modes.
    const double h = f.grid.t_hi - f.grid.t_lo;
    CauchyData zero;
    zero.t0 = f.grid.t_lo + (closed_chart ? 0.2 : 0.25) * h;
    zero.x_lo = f.grid.x_lo;
    zero.x_hi = f.grid.x_hi;
    zero.periodic = f.grid.periodic_x;
    zero.n = f.grid.nx;
    zero.max_levels = f.grid.periodic_x ? 40 : -1;
    json runs = json::array();
    double zero_max = 0.0;
    for (bool quasi : {true, false}) {
        SolverControls ctl;
        ctl.quasilinear = quasi;
        const CodazziState s = solve(f, zero, ctl);
        zero_max = std::max(zero_max, s.max_abs_U());
        runs.push_back({{"mode", quasi ? "quasilinear" : "linear"},
                        {"levels", s.levels},
                        {"nodes", s.nodes.size()},
                        {"max_abs_U", s.max_abs_U()},
                        {"stopped_at_collar", s.stopped_at_collar}});
    }
    j["uniqueness"] = runs;
    const double utol = ctx.tol(ctx.cfg.codazzi_tol);
    check(rec, "uniqueness", "max|U| = " + format_sci(zero_max), zero_max, zero_max < utol);

    Writer w(ctx, rec);
    if (ctx.cfg.codazzi_perturbation != 0.0) {
        std::mt19937_64 rng(ctx.cfg.seed);
        std::uniform_real_distribution<double> amp(-ctx.cfg.codazzi_perturbation, ctx.cfg.codazzi_perturbation);
        std::array<double, 4> a{};
        for (double& x : a) x = amp(rng);
        const double period = f.grid.x_hi - f.grid.x_lo;
        CauchyData d = zero;
        d.U = [a, period, lo = f.grid.x_lo](double x) {
            const double s = kTwoPi * (x - lo) / period;
            return std::array<double, 2>{a[0] * std::sin(3 * s + 1) + a[1] * std::cos(s), a[2] * std::cos(2 * s) + a[3]};
        };
        const CodazziState st = solve(f, d);
        w.text("state.csv", [&](std::ostream& o) { write_state_csv(st, o); });

        std::map<int, std::pair<double, int>> rows;
        for (const StateNode& n : st.nodes) {
            auto& r = rows[static_cast<int>(std::lround((n.t - f.grid.t_lo) / f.grid.ht()))];
            r.first = std::max(r.first, std::hypot(n.v, n.w));
            ++r.second;
        }
        json norms = json::array();
        for (const auto& [row, r] : rows) norms.push_back({{"t", f.grid.t_at(row)}, {"max_abs_U", r.first}, {"nodes", r.second}});

        const EnergyLedger e = energy_audit(f, sym, st);
        json bterms = json::array();
        for (const auto& b : e.boundary) bterms.push_back({{"name", b.name}, {"value", b.value}});
        j["perturbation"] = {{"amplitudes", a},
                             {"levels", st.levels},
                             {"max_abs_U", st.max_abs_U()},
                             {"max_gauss_defect", st.max_gauss_defect},
                             {"stopped_at_collar", st.stopped_at_collar},
                             {"norms", norms},
                             {"state", "state.csv"}};
        j["energy"] = {{"interior", e.interior},
                       {"boundary", bterms},
                       {"boundary_total", e.boundary_total},
                       {"residual", e.residual},
                       {"relative_residual", e.relative_residual},
                       {"min_eigenvalue", e.min_eigenvalue}};
        const double etol = ctx.tol(ctx.cfg.codazzi_energy_tol);
        check(rec, "energy", "identity residual = " + format_sci(e.relative_residual), e.relative_residual,
              e.relative_residual < etol, "< " + compact(etol));
    }
    w.record("run.json", j);
}

const std::map<std::string, void (*)(Context&, TaskRecord&)>& task_table() {
    static const std::map<std::string, void (*)(Context&, TaskRecord&)> t{
        {"analyze", task_analyze}, {"decompose", task_decompose}, {"trace", task_trace},
        {"invariant", task_invariant}, {"chart", task_chart},     {"codazzi", task_codazzi}};
    return t;
}

}  // namespace

Manifest run_pipeline(const RunConfig& cfg) {
    Manifest m;
    m.out_dir = cfg.out;
    m.seed = cfg.seed;
    Context ctx{cfg, detail::make_source(cfg.surface), fs::path(cfg.out), {}, {}, {}, {}};
    m.surface = ctx.src.forms->describe();
    fs::create_directories(ctx.out);

    std::map<std::string, bool> ok;
    for (const auto& [name, inserted] : plan_tasks(cfg.tasks)) {
        TaskRecord rec;
        rec.name = name;
        rec.auto_inserted = inserted;
        std::string blocked;
        for (const auto& dep : RunConfig::prerequisites(name))
            if (!ok[dep]) blocked = dep;
        if (!blocked.empty()) {
            rec.status = "skipped";
            rec.error = "prerequisite '" + blocked + "' did not complete";
        } else {
            try {
                task_table().at(name)(ctx, rec);
                rec.status = "pass";
                for (const auto& c : rec.checks)
                    if (!c.pass) rec.status = "fail";
                ok[name] = true;
            } catch (const std::exception& e) {
                rec.status = "error";
                rec.error = e.what();
                ok[name] = false;
            }
        }
        m.tasks.push_back(std::move(rec));
    }
    write_manifest(m, (ctx.out / "manifest.json").string());
    return m;
}

}  // namespace tightkit
