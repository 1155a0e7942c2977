#include "tightkit/asymptotic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "tightkit/error.hpp"

namespace tightkit {

namespace odeint = boost::numeric::odeint;

std::array<double, 2> family_direction(const FundamentalData& fd, int family) {
    const double sigma = family >= 0 ? 1.0 : -1.0;
    const double D = std::sqrt(std::max(0.0, fd.M * fd.M - fd.L * fd.N));
    const std::array<double, 2> a{fd.N, -fd.M + sigma * D};
    const std::array<double, 2> b{-fd.M - sigma * D, fd.L};
    const std::array<double, 2>& v = std::hypot(a[0], a[1]) >= std::hypot(b[0], b[1]) ? a : b;
    const double len2 = first_form(fd, v[0], v[1]);
    if (!(len2 > 0.0)) throw PreconditionError("undefined field: second fundamental form vanishes");
    const double len = std::sqrt(len2);
    return {v[0] / len, v[1] / len};
}

AsymptoticDirections asymptotic_directions(const FundamentalData& fd, double parabolic_tol) {
    const double scale2 = fd.L * fd.L + 2.0 * fd.M * fd.M + fd.N * fd.N;
    if (!(scale2 > 0.0)) throw PreconditionError("undefined field: second fundamental form vanishes");
    const double d2 = fd.M * fd.M - fd.L * fd.N;
    AsymptoticDirections out;
    if (d2 < -parabolic_tol * scale2) return out;
    if (d2 <= parabolic_tol * scale2) {
        out.count = 1;
        out.dir[0] = out.dir[1] = family_direction(fd, +1);
        return out;
    }
    out.count = 2;
    out.dir[0] = family_direction(fd, +1);
    out.dir[1] = family_direction(fd, -1);
    return out;
}

namespace {

using State = std::array<double, 2>;

double d_ratio(const FundamentalData& fd) {
    const double scale = std::sqrt(fd.L * fd.L + 2.0 * fd.M * fd.M + fd.N * fd.N);
    const double d2 = fd.M * fd.M - fd.L * fd.N;
    return d2 >= 0.0 ? std::sqrt(d2) / scale : -std::sqrt(-d2) / scale;
}

double wrap(double d, const Axis& a) {
    if (!a.periodic) return d;
    return d - a.length() * std::round(d / a.length());
}

// Angle between two unoriented lines, measured in the first form.
double line_angle(const FundamentalData& fd, std::array<double, 2> a, std::array<double, 2> b) {
    const double dot = first_form(fd, a[0], a[1], b[0], b[1]);
    const double cross = std::sqrt(fd.detI) * (a[0] * b[1] - a[1] * b[0]);
    return std::atan2(std::abs(cross), std::abs(dot));
}

// Angle, in the first form, between the curve tangent t and the K = 0 level
// line through p.
double tangency_angle(const FormSource& src, ParamPoint p, std::array<double, 2> t) {
    const Domain dom = src.domain();
    const double h = 1e-5;
    auto K = [&](double du, double dv) { return fundamental_data(src, dom.reduce({p.u + du, p.v + dv})).K; };
    const double ku = (K(h, 0) - K(-h, 0)) / (2 * h);
    const double kv = (K(0, h) - K(0, -h)) / (2 * h);
    if (std::hypot(ku, kv) == 0.0) return 0.0;
    return line_angle(fundamental_data(src, dom.reduce(p)), t, {-kv, ku});
}

struct Point {
    double s;
    State x;
    State d;
    double ratio;
};

struct MarchResult {
    std::vector<Point> pts;
    std::string termination;
    bool closed = false;
    TraceEnd end;
    std::optional<double> spiral_limit;
};

class Marcher {
public:
    Marcher(const FormSource& src, int family, const TraceControls& ctl)
        : src_(src), family_(family), ctl_(ctl), dom_(src.domain()) {}

    State field(const State& x, const State& ref) const {
        const FundamentalData fd = fundamental_data(src_, dom_.reduce({x[0], x[1]}));
        std::array<double, 2> d = family_direction(fd, family_);
        if (first_form(fd, d[0], d[1], ref[0], ref[1]) < 0.0) d = {-d[0], -d[1]};
        return d;
    }

    double ratio(const State& x) const { return d_ratio(fundamental_data(src_, dom_.reduce({x[0], x[1]}))); }

    MarchResult run(ParamPoint start, State dir0, bool check_closure) const {
        MarchResult out;
        State x{start.u, start.v};
        State ref = dir0;
        ref = field(x, ref);
        out.pts.push_back({0.0, x, ref, ratio(x)});
        const bool start_near_parabolic = out.pts[0].ratio < 2.0 * ctl_.parabolic_threshold;

        auto stepper = odeint::make_controlled(ctl_.abs_tol, ctl_.rel_tol, odeint::runge_kutta_dopri5<State>());
        double s = 0.0;
        double ds = std::min(ctl_.max_step, 1e-3);
        bool armed = !start_near_parabolic;
        std::vector<double> crossings_u, crossings_v;

        for (int step = 0; step < ctl_.max_steps; ++step) {
            if (s > ctl_.max_length) break;
            State xn = x;
            double sn = s;
            auto sys = [&](const State& y, State& dy, double) { dy = field(y, ref); };
            odeint::controlled_step_result r;
            try {
                r = stepper.try_step(sys, xn, sn, ds);
            } catch (const DomainError&) {
                r = odeint::fail;
                ds *= 0.5;
            }
            if (r == odeint::fail) {
                if (ds < 1e-14) {
                    out.termination = "step underflow";
                    return out;
                }
                continue;
            }
            // Leaving a non-periodic axis ends the curve on the boundary.
            if (!dom_.contains({xn[0], xn[1]}, 1e-12)) {
                out.termination = "left domain";
                clip_to_domain(x, xn, s, sn, ref, out);
                return out;
            }
            const double rn = ratio(xn);
            if (rn < 0.0) {
                // Jumped into K > 0; retry with a shorter step.
                ds = 0.5 * (sn - s);
                continue;
            }
            const State dn = field(xn, ref);
            out.pts.push_back({sn, xn, dn, rn});
            if (check_closure && try_close(out)) return out;
            if (ctl_.detect_spiral && track_returns(out, crossings_u, crossings_v)) return out;
            x = xn;
            s = sn;
            ref = dn;
            ds = std::min(ds, ctl_.max_step);
            if (!armed && rn > 4.0 * ctl_.parabolic_threshold) armed = true;
            if (armed && rn < ctl_.parabolic_threshold) {
                finish_at_parabolic(out);
                return out;
            }
        }
        throw ConvergenceError("asymptotic trace exhausted its budget without classification");
    }

private:
    void clip_to_domain(const State& x0, const State& x1, double s0, double s1, const State& ref,
                        MarchResult& out) const {
        double lam = 1.0;
        const Axis* ax[2] = {&dom_.u, &dom_.v};
        for (int k = 0; k < 2; ++k) {
            if (ax[k]->periodic) continue;
            if (x1[k] > ax[k]->hi) lam = std::min(lam, (ax[k]->hi - x0[k]) / (x1[k] - x0[k]));
            if (x1[k] < ax[k]->lo) lam = std::min(lam, (ax[k]->lo - x0[k]) / (x1[k] - x0[k]));
        }
        const State xb{x0[0] + lam * (x1[0] - x0[0]), x0[1] + lam * (x1[1] - x0[1])};
        out.pts.push_back({s0 + lam * (s1 - s0), xb, field(xb, ref), ratio(xb)});
    }

    // Closure: the last step passes within tolerance of the start (modulo the
    // periods) with a matching direction.
    bool try_close(MarchResult& out) const {
        const auto& p0 = out.pts.front();
        const auto& a = out.pts[out.pts.size() - 2];
        const auto& b = out.pts.back();
        if (b.s < 100.0 * ctl_.closure_position + 1e-3) return false;
        const double h = b.s - a.s;
        const double ou = p0.x[0] + (dom_.u.periodic ? std::round((a.x[0] - p0.x[0]) / dom_.u.length()) * dom_.u.length() : 0.0);
        const double ov = p0.x[1] + (dom_.v.periodic ? std::round((a.x[1] - p0.x[1]) / dom_.v.length()) * dom_.v.length() : 0.0);
        auto herm = [&](double tau, int k) {
            const double t2 = tau * tau, t3 = t2 * tau;
            return (2 * t3 - 3 * t2 + 1) * a.x[k] + (t3 - 2 * t2 + tau) * h * a.d[k] +
                   (-2 * t3 + 3 * t2) * b.x[k] + (t3 - t2) * h * b.d[k];
        };
        auto dist = [&](double tau) { return std::hypot(herm(tau, 0) - ou, herm(tau, 1) - ov); };
        if (std::min(dist(0.0), dist(1.0)) > 2.0 * h + 10.0 * ctl_.closure_position) return false;
        const auto mn = boost::math::tools::brent_find_minima(dist, 0.0, 1.0, 40);
        if (mn.second > ctl_.closure_position) return false;
        const double tau = mn.first;
        const State d{a.d[0] + tau * (b.d[0] - a.d[0]), a.d[1] + tau * (b.d[1] - a.d[1])};
        const FundamentalData fd = fundamental_data(src_, dom_.reduce({ou, ov}));
        if (first_form(fd, d[0], d[1], p0.d[0], p0.d[1]) <= 0.0) return false;
        if (line_angle(fd, d, p0.d) > ctl_.closure_direction) return false;
        Point close{a.s + tau * h, State{ou, ov}, p0.d, p0.ratio};
        out.pts.pop_back();
        out.pts.push_back(close);
        out.closed = true;
        out.termination = "closed";
        return true;
    }

    // Spiral: five successive returns to the transversal through the start,
    // monotone with contracting differences.
    bool track_returns(MarchResult& out, std::vector<double>& cu, std::vector<double>& cv) const {
        const auto& p0 = out.pts.front();
        const auto& a = out.pts[out.pts.size() - 2];
        const auto& b = out.pts.back();
        const Axis* ax[2] = {&dom_.u, &dom_.v};
        std::vector<double>* store[2] = {&cu, &cv};
        for (int k = 0; k < 2; ++k) {
            if (!ax[k]->periodic) continue;
            const double L = ax[k]->length();
            const double fa = std::floor((a.x[k] - p0.x[k]) / L);
            const double fb = std::floor((b.x[k] - p0.x[k]) / L);
            if (fa == fb) continue;
            const double target = p0.x[k] + std::max(fa, fb) * L;
            const double lam = (target - a.x[k]) / (b.x[k] - a.x[k]);
            store[k]->push_back(a.x[1 - k] + lam * (b.x[1 - k] - a.x[1 - k]));
            const auto& c = *store[k];
            if (c.size() < 5) continue;
            const std::size_t n = c.size();
            double d[4];
            for (int q = 0; q < 4; ++q) d[q] = c[n - 4 + q] - c[n - 5 + q];
            bool ok = true;
            for (int q = 0; q < 4 && ok; ++q) ok = d[q] != 0.0 && (d[q] > 0) == (d[0] > 0);
            for (int q = 0; q < 3 && ok; ++q) ok = std::abs(d[q + 1]) < std::abs(d[q]);
            if (!ok) continue;
            // Aitken extrapolation of the last three returns.
            const double den = d[3] - d[2];
            out.spiral_limit = den != 0.0 ? c[n - 1] - d[3] * d[3] / den : c[n - 1];
            out.termination = "spiral";
            return true;
        }
        return false;
    }

    // D vanishes linearly in arclength at a parabolic curve; fit D(s) and the
    // coordinates near the end and extrapolate to the root.
    void finish_at_parabolic(MarchResult& out) const {
        const int m = std::min<int>(8, static_cast<int>(out.pts.size()));
        const std::size_t first = out.pts.size() - m;
        const double s_ref = out.pts.back().s;
        Eigen::MatrixXd A(m, 4);
        Eigen::VectorXd rd(m), ru(m), rv(m);
        for (int q = 0; q < m; ++q) {
            const Point& p = out.pts[first + q];
            const double z = p.s - s_ref;
            A(q, 0) = 1.0;
            A(q, 1) = z;
            A(q, 2) = z * z;
            A(q, 3) = z * z * z;
            rd(q) = p.ratio;
            ru(q) = p.x[0];
            rv(q) = p.x[1];
        }
        const int deg = m >= 6 ? 4 : std::max(2, m - 1);
        const auto qr = A.leftCols(deg).colPivHouseholderQr();
        const Eigen::VectorXd cd = qr.solve(rd);
        const Eigen::VectorXd cu = qr.solve(ru);
        const Eigen::VectorXd cv = qr.solve(rv);
        auto poly = [&](const Eigen::VectorXd& c, double z) {
            double v = 0.0;
            for (int k = deg - 1; k >= 0; --k) v = v * z + c(k);
            return v;
        };
        auto dpoly = [&](const Eigen::VectorXd& c, double z) {
            double v = 0.0;
            for (int k = deg - 1; k >= 1; --k) v = v * z + k * c(k);
            return v;
        };
        // Newton on the fitted D from z = 0.
        double z = 0.0;
        for (int it = 0; it < 30; ++it) {
            const double f = poly(cd, z), df = dpoly(cd, z);
            if (df == 0.0) break;
            const double dz = f / df;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        if (!(z >= 0.0) || z > 10.0 * (s_ref - out.pts[first].s + 1e-12)) z = 0.0;
        const State xe{poly(cu, z), poly(cv, z)};
        State de{dpoly(cu, z), dpoly(cv, z)};
        const FundamentalData fd = fundamental_data(src_, dom_.reduce({xe[0], xe[1]}));
        const double len = std::sqrt(first_form(fd, de[0], de[1]));
        de = {de[0] / len, de[1] / len};
        out.pts.push_back({s_ref + z, xe, de, 0.0});
        out.termination = "parabolic";
        out.end.parabolic = true;
        out.end.tangency_angle = tangency_angle(src_, {xe[0], xe[1]}, de);
    }

    const FormSource& src_;
    int family_;
    const TraceControls& ctl_;
    Domain dom_;
};

TracedCurve assemble(const FormSource& src, const MarchResult* back, const MarchResult& fwd, int family) {
    TracedCurve c;
    c.family = family;
    if (back) {
        for (auto it = back->pts.rbegin(); it != back->pts.rend(); ++it)
            c.samples.push_back({{it->x[0], it->x[1]}, -it->d[0], -it->d[1], -it->s});
        c.samples.pop_back();  // shared start
    }
    for (const Point& p : fwd.pts) c.samples.push_back({{p.x[0], p.x[1]}, p.d[0], p.d[1], p.s});
    const double s0 = c.samples.front().s;
    for (auto& smp : c.samples) smp.s -= s0;
    c.closed = fwd.closed;
    c.termination = back ? back->termination + "|" + fwd.termination : fwd.termination;
    const Domain dom = src.domain();
    const auto& a = c.samples.front().p;
    const auto& b = c.samples.back().p;
    if (c.closed) {
        if (dom.u.periodic) c.winding[0] = static_cast<int>(std::lround((b.u - a.u) / dom.u.length()));
        if (dom.v.periodic) c.winding[1] = static_cast<int>(std::lround((b.v - a.v) / dom.v.length()));
    }
    return c;
}

TracedCurve trace_interior(const FormSource& src, ParamPoint start, int family, const TraceControls& ctl,
                           TraceDiagnostics& diag) {
    const Marcher m(src, family, ctl);
    const FundamentalData fd = fundamental_data(src, src.domain().reduce(start));
    std::array<double, 2> d0 = family_direction(fd, family);
    if (ctl.direction < 0) d0 = {-d0[0], -d0[1]};
    const MarchResult fwd = m.run(start, d0, true);
    diag.tail = fwd.end;
    diag.spiral_limit = fwd.spiral_limit;
    if (!ctl.two_sided || fwd.closed) {
        diag.head = {};
        return assemble(src, nullptr, fwd, family);
    }
    const MarchResult back = m.run(start, {-d0[0], -d0[1]}, false);
    diag.head = back.end;
    if (back.spiral_limit) diag.spiral_limit = back.spiral_limit;
    return assemble(src, &back, fwd, family);
}

}  // namespace

TracedCurve trace_with_diagnostics(const FormSource& src, ParamPoint start, int family,
                                   const TraceControls& ctl, TraceDiagnostics& diag) {
    const Domain dom = src.domain();
    const FundamentalData fd = fundamental_data(src, dom.reduce(start));
    const double r0 = d_ratio(fd);
    if (r0 < -ctl.parabolic_threshold) throw PreconditionError("trace start has K > 0");
    if (r0 >= ctl.parabolic_threshold) return trace_interior(src, start, family, ctl, diag);

    // Start on a parabolic curve: shoot from an offset line just inside S-.
    const double h = 1e-5;
    auto K = [&](ParamPoint p) { return fundamental_data(src, dom.reduce(p)).K; };
    const double ku = (K({start.u + h, start.v}) - K({start.u - h, start.v})) / (2 * h);
    const double kv = (K({start.u, start.v + h}) - K({start.u, start.v - h})) / (2 * h);
    const double g = std::hypot(ku, kv);
    if (g == 0.0) throw PreconditionError("parabolic start with vanishing curvature gradient");
    const State n{-ku / g, -kv / g};  // towards K < 0
    const State t{-n[1], n[0]};
    double delta = 1e-6;
    while (d_ratio(fundamental_data(src, dom.reduce({start.u + delta * n[0], start.v + delta * n[1]}))) <
           6.0 * ctl.parabolic_threshold) {
        delta *= 2.0;
        if (delta > 0.1) throw PreconditionError("no S- side found next to the parabolic start");
    }
    TraceControls local = ctl;
    local.two_sided = true;
    local.detect_spiral = false;
    // Tangential offset of the nearby parabolic endpoint relative to the start.
    auto miss = [&](double tau, TracedCurve* keep) {
        const ParamPoint p{start.u + delta * n[0] + tau * t[0], start.v + delta * n[1] + tau * t[1]};
        TraceDiagnostics dg;
        TracedCurve c = trace_interior(src, p, family, local, dg);
        const auto& e0 = c.samples.front().p;
        const auto& e1 = c.samples.back().p;
        auto off = [&](const ParamPoint& e) {
            return std::hypot(wrap(e.u - start.u, dom.u), wrap(e.v - start.v, dom.v));
        };
        const ParamPoint& e = off(e0) <= off(e1) ? e0 : e1;
        if (keep) *keep = std::move(c);
        return wrap(e.u - start.u, dom.u) * t[0] + wrap(e.v - start.v, dom.v) * t[1];
    };
    double a = 0.0, fa = miss(0.0, nullptr);
    double step = 4.0 * std::sqrt(delta) * (fa > 0 ? -1.0 : 1.0);
    double b = a + step, fb = miss(b, nullptr);
    for (int k = 0; k < 30 && fa * fb > 0.0; ++k) {
        a = b;
        fa = fb;
        b += step;
        fb = miss(b, nullptr);
    }
    if (fa * fb > 0.0) throw ConvergenceError("shooting from the parabolic start did not bracket");
    boost::math::tools::eps_tolerance<double> tol(44);
    std::uintmax_t iters = 60;
    const auto br = boost::math::tools::toms748_solve([&](double z) { return miss(z, nullptr); },
                                                      std::min(a, b), std::max(a, b),
                                                      a < b ? fa : fb, a < b ? fb : fa, tol, iters);
    TracedCurve c;
    miss(0.5 * (br.first + br.second), &c);
    // Put the parabolic start first.
    const auto& e0 = c.samples.front().p;
    const auto& e1 = c.samples.back().p;
    if (std::hypot(wrap(e1.u - start.u, dom.u), wrap(e1.v - start.v, dom.v)) <
        std::hypot(wrap(e0.u - start.u, dom.u), wrap(e0.v - start.v, dom.v))) {
        std::reverse(c.samples.begin(), c.samples.end());
        const double total = c.samples.front().s;
        for (auto& smp : c.samples) {
            smp.s = total - smp.s;
            smp.du = -smp.du;
            smp.dv = -smp.dv;
        }
    }
    const auto& head = c.samples.front();
    diag.head.parabolic = true;
    diag.head.tangency_angle = tangency_angle(src, head.p, {head.du, head.dv});
    const auto& tail = c.samples.back();
    diag.tail.parabolic = c.termination.find("parabolic") != std::string::npos;
    diag.tail.tangency_angle = diag.tail.parabolic ? tangency_angle(src, tail.p, {tail.du, tail.dv}) : 0.0;
    c.termination = "parabolic start|" + c.termination;
    return c;
}

TracedCurve trace(const FormSource& src, ParamPoint start, int family, const TraceControls& ctl) {
    TraceDiagnostics diag;
    return trace_with_diagnostics(src, start, family, ctl, diag);
}

TracedCurve trace(const Surface& s, ParamPoint start, int family, const TraceControls& ctl) {
    return trace(SurfaceForms(s), start, family, ctl);
}

}  // namespace tightkit
