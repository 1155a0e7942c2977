#include "tightkit/return_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "tightkit/asymptotic.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

namespace odeint = boost::numeric::odeint;

namespace {

struct Undefined {};

}  // namespace

AnnularChart chart_from_forms(const FormSource& src, int family, bool swap_axes, double t_lo, double t_hi,
                              double parabolic_threshold) {
    AnnularChart c;
    const Domain dom = src.domain();
    const Axis& xa = swap_axes ? dom.v : dom.u;
    if (!xa.periodic) throw PreconditionError("annular chart needs a periodic x axis");
    c.x0 = xa.lo;
    c.period = xa.length();
    c.t_lo = t_lo;
    c.t_hi = t_hi;
    c.slope = [&src, family, swap_axes, parabolic_threshold](double x, double t) -> std::optional<double> {
        const ParamPoint p = swap_axes ? ParamPoint{t, x} : ParamPoint{x, t};
        const FundamentalData fd = fundamental_data(src, src.domain().reduce(p));
        const double scale = std::sqrt(fd.L * fd.L + 2 * fd.M * fd.M + fd.N * fd.N);
        const double d2 = fd.M * fd.M - fd.L * fd.N;
        if (!(d2 > 0.0) || std::sqrt(d2) < parabolic_threshold * scale) return std::nullopt;
        const auto d = family_direction(fd, family);
        const double dx = swap_axes ? d[1] : d[0];
        const double dt = swap_axes ? d[0] : d[1];
        if (std::abs(dx) < 1e-12 * std::hypot(dx, dt)) return std::nullopt;
        return dt / dx;
    };
    return c;
}

SlopeField synthetic_cycles(std::vector<double> t_stars, double kappa) {
    return [t_stars = std::move(t_stars), kappa](double x, double t) -> std::optional<double> {
        double p = -kappa * (1.0 + 0.5 * std::sin(x));
        for (double ts : t_stars) p *= (t - ts);
        return p;
    };
}

std::optional<double> first_return(const AnnularChart& chart, double t_in, const ReturnMapControls& ctl) {
    using State = std::array<double, 1>;
    auto sys = [&](const State& y, State& dy, double x) {
        const auto s = chart.slope(x, y[0]);
        if (!s) throw Undefined{};
        dy[0] = *s;
    };
    auto stepper = odeint::make_controlled(ctl.abs_tol, ctl.rel_tol, odeint::runge_kutta_dopri5<State>());
    State y{t_in};
    double x = chart.x0;
    const double x_end = chart.x0 + chart.period;
    double dx = chart.period / 64.0;
    const double inset = ctl.edge_inset * (chart.t_hi - chart.t_lo);
    double x_mark = x;
    for (int k = 0; k < 1000000; ++k) {
        // Orbits creeping along a parabolic edge never finish the period.
        if (k % 1000 == 999) {
            if (x - x_mark < 1e-9 * chart.period) return std::nullopt;
            x_mark = x;
        }
        if (x >= x_end) return y[0];
        dx = std::min(dx, x_end - x);
        State yn = y;
        double xn = x;
        try {
            if (stepper.try_step(sys, yn, xn, dx) == odeint::fail) {
                // Step control collapses only at the square-root edge of the region.
                if (dx < 1e-12 * chart.period) return std::nullopt;
                continue;
            }
        } catch (const Undefined&) {
            dx *= 0.5;
            if (dx < 1e-12 * chart.period) return std::nullopt;
            continue;
        }
        if (yn[0] <= chart.t_lo + inset || yn[0] >= chart.t_hi - inset) return std::nullopt;
        y = yn;
        x = xn;
    }
    throw ConvergenceError("return map integration did not finish");
}

AnnularChart reversed(const AnnularChart& chart) {
    AnnularChart r = chart;
    const double mirror = 2.0 * chart.x0 + chart.period;
    r.slope = [inner = chart.slope, mirror](double x, double t) -> std::optional<double> {
        const auto s = inner(mirror - x, t);
        if (!s) return std::nullopt;
        return -*s;
    };
    return r;
}

namespace {

std::vector<ReturnMapSample> sample_map(const AnnularChart& chart, double lo, double hi,
                                        const ReturnMapControls& ctl) {
    std::vector<ReturnMapSample> out;
    const int n = ctl.samples;
    for (int i = 0; i < n; ++i) {
        const double t = lo + (hi - lo) * (i + 0.5) / n;
        const auto o = first_return(chart, t, ctl);
        out.push_back({t, o.value_or(t), 1, !o.has_value()});
    }
    return out;
}

void find_fixed(const AnnularChart& chart, const std::vector<ReturnMapSample>& smp, bool inverse,
                const ReturnMapControls& ctl, std::vector<FixedPoint>& found) {
    auto g = [&](double t) {
        const auto out = first_return(chart, t, ctl);
        if (!out) throw ConvergenceError("orbit exited while refining a fixed point");
        return *out - t;
    };
    auto add = [&](double t, double bracket) {
        for (const auto& fp : found)
            if (std::abs(fp.t - t) < bracket) return;
        FixedPoint fp;
        fp.t = t;
        fp.residual = g(t);
        const double h = 1e-6 * (chart.t_hi - chart.t_lo);
        const double m = 1.0 + (g(t + h) - g(t - h)) / (2 * h);
        fp.multiplier = inverse ? 1.0 / m : m;
        fp.bracket = bracket;
        found.push_back(fp);
    };
    const std::size_t n = smp.size();
    const double width = n > 1 ? smp[1].in - smp[0].in : chart.t_hi - chart.t_lo;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = smp[i];
        if (a.exited) continue;
        const double ga = a.out - a.in;
        if (std::abs(ga) < ctl.fixed_tol) {
            add(a.in, width);
            continue;
        }
        if (i + 1 == n) continue;
        const auto& b = smp[i + 1];
        if (b.exited) continue;
        const double gb = b.out - b.in;
        if (std::abs(gb) < ctl.fixed_tol || ga * gb > 0.0) continue;
        boost::math::tools::eps_tolerance<double> tol(45);
        std::uintmax_t iters = 100;
        const auto br = boost::math::tools::toms748_solve(g, a.in, b.in, ga, gb, tol, iters);
        add(0.5 * (br.first + br.second), width);
    }
}

bool all_fixed(const std::vector<ReturnMapSample>& smp, double tol) {
    int returning = 0, fixed = 0;
    for (const auto& s : smp) {
        if (s.exited) continue;
        ++returning;
        if (std::abs(s.out - s.in) < tol) ++fixed;
    }
    return returning > 1 && fixed == returning;
}

}  // namespace

ReturnMapResult return_map(const AnnularChart& chart, const ReturnMapControls& ctl) {
    ReturnMapResult r;
    const double lo = chart.t_lo + ctl.edge_inset * (chart.t_hi - chart.t_lo);
    const double hi = chart.t_hi - ctl.edge_inset * (chart.t_hi - chart.t_lo);
    const AnnularChart back = reversed(chart);
    r.samples = sample_map(chart, lo, hi, ctl);
    r.backward = sample_map(back, lo, hi, ctl);
    if (all_fixed(r.samples, ctl.fixed_tol) || all_fixed(r.backward, ctl.fixed_tol)) {
        r.degenerate = true;
        return r;
    }
    find_fixed(chart, r.samples, false, ctl, r.fixed_points);
    find_fixed(back, r.backward, true, ctl, r.fixed_points);
    std::sort(r.fixed_points.begin(), r.fixed_points.end(),
              [](const FixedPoint& p, const FixedPoint& q) { return p.t < q.t; });
    for (std::size_t i = 0; i < r.fixed_points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        if (i > 0) best = std::min(best, r.fixed_points[i].t - r.fixed_points[i - 1].t);
        if (i + 1 < r.fixed_points.size()) best = std::min(best, r.fixed_points[i + 1].t - r.fixed_points[i].t);
        r.fixed_points[i].nearest = best;
    }
    return r;
}

CylinderDecomposition cylinder_decomposition(const AnnularChart& chart, const ReturnMapControls& ctl) {
    const ReturnMapResult rm = return_map(chart, ctl);
    CylinderDecomposition d;
    d.degenerate = rm.degenerate;
    d.closed_curves = rm.fixed_points;
    for (const auto& fp : d.closed_curves)
        if (fp.nearest < fp.bracket) d.unresolved_cluster = true;
    std::vector<double> cuts{chart.t_lo};
    for (const auto& fp : d.closed_curves) cuts.push_back(fp.t);
    cuts.push_back(chart.t_hi);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        SubAnnulus sa{cuts[k], cuts[k + 1], 0, false};
        int up = 0, down = 0;
        auto count = [&](const std::vector<ReturnMapSample>& smp, int sense) {
            for (const auto& s : smp) {
                if (s.in <= sa.t_lo || s.in >= sa.t_hi) continue;
                if (s.exited) {
                    sa.exits = true;
                    continue;
                }
                if (std::abs(s.out - s.in) < ctl.fixed_tol) continue;
                ((s.out > s.in) == (sense > 0) ? up : down)++;
            }
        };
        count(rm.samples, +1);
        count(rm.backward, -1);
        if (up > 0 && down == 0) sa.drift = +1;
        if (down > 0 && up == 0) sa.drift = -1;
        d.regions.push_back(sa);
    }
    return d;
}

CylinderDecomposition cylinder_decomposition(const Surface& s, const RegionDecomposition& regions,
                                             int component, int family, const ReturnMapControls& ctl) {
    if (component < 0 || component >= static_cast<int>(regions.negative_components.size()))
        throw PreconditionError("no such S- component");
    const auto& comp = regions.negative_components[component];
    if (comp.boundary_curves.size() != 2) throw PreconditionError("component is not an annulus");
    std::vector<double> level;
    for (int id : comp.boundary_curves) {
        const auto& c = regions.parabolic_curves[id].curve;
        double lo = 1e300, hi = -1e300;
        for (const auto& smp : c.samples) {
            lo = std::min(lo, smp.p.u);
            hi = std::max(hi, smp.p.u);
        }
        if (c.winding[1] == 0 || hi - lo > 1e-6) throw PreconditionError("component is not a u-band");
        level.push_back(0.5 * (lo + hi));
    }
    std::sort(level.begin(), level.end());
    const Domain& dom = s.domain();
    double a = level[0], b = level[1];
    if (!(fundamental_data(s, dom.reduce({0.5 * (a + b), dom.v.lo})).K < 0.0)) {
        std::swap(a, b);
        b += dom.u.length();
    }
    auto forms = std::make_shared<SurfaceForms>(s);
    AnnularChart chart = chart_from_forms(*forms, family, true, a, b);
    chart.slope = [forms, inner = chart.slope](double x, double t) { return inner(x, t); };
    return cylinder_decomposition(chart, ctl);
}

}  // namespace tightkit
