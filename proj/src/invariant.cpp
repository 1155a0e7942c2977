#include "tightkit/invariant.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "tightkit/asymptotic.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

using Vec2 = std::array<double, 2>;

CurveFrame frame_at(const FundamentalData& fd, Vec2 t, Vec2 a) {
    const Christoffel& g = fd.christoffels;
    const double u1 = t[0], v1 = t[1];
    const double sq = std::sqrt(fd.detI);
    CurveFrame f;
    f.kg = sq * (g.g211 * u1 * u1 * u1 + (2.0 * g.g212 - g.g111) * u1 * u1 * v1 +
                 (g.g222 - 2.0 * g.g112) * u1 * v1 * v1 - g.g122 * v1 * v1 * v1 + u1 * a[1] - a[0] * v1);
    f.Z = {-(fd.F * u1 + fd.G * v1) / sq, (fd.E * u1 + fd.F * v1) / sq};
    f.kn = second_form(fd, f.Z[0], f.Z[1]);
    f.K = fd.K;
    f.sqrtE = std::sqrt(fd.E);
    return f;
}

namespace {

FundamentalData at(const FormSource& src, ParamPoint p) {
    return fundamental_data(src, src.domain().reduce(p));
}

Vec2 oriented_field(const FormSource& src, ParamPoint p, int family, Vec2 ref) {
    const FundamentalData fd = at(src, p);
    Vec2 d = family_direction(fd, family);
    if (first_form(fd, d[0], d[1], ref[0], ref[1]) < 0.0) d = {-d[0], -d[1]};
    return d;
}

// Acceleration of an integral curve of the unit asymptotic field.
Vec2 field_acceleration(const FormSource& src, ParamPoint p, int family, Vec2 t, double h = 1e-5) {
    const Vec2 dp = oriented_field(src, {p.u + h * t[0], p.v + h * t[1]}, family, t);
    const Vec2 dm = oriented_field(src, {p.u - h * t[0], p.v - h * t[1]}, family, t);
    return {(dp[0] - dm[0]) / (2 * h), (dp[1] - dm[1]) / (2 * h)};
}

Vec2 unit_normal(const FundamentalData& fd, Vec2 t) {
    const double sq = std::sqrt(fd.detI);
    return {-(fd.F * t[0] + fd.G * t[1]) / sq, (fd.E * t[0] + fd.F * t[1]) / sq};
}

struct Local {
    ParamPoint p;
    Vec2 t, a;
};

// Position, velocity and acceleration at fraction tau of sample interval i.
Local local_at(const FormSource& src, const TracedCurve& c, std::size_t i, double tau) {
    const CurveSample& A = c.samples[i];
    const CurveSample& B = c.samples[i + 1];
    const double h = B.s - A.s;
    const double t2 = tau * tau, t3 = t2 * tau;
    auto herm = [&](double a0, double a1, double b0, double b1) {
        return (2 * t3 - 3 * t2 + 1) * a0 + (t3 - 2 * t2 + tau) * h * a1 + (-2 * t3 + 3 * t2) * b0 +
               (t3 - t2) * h * b1;
    };
    auto dherm = [&](double a0, double a1, double b0, double b1) {
        return ((6 * t2 - 6 * tau) * a0 + (3 * t2 - 4 * tau + 1) * h * a1 + (-6 * t2 + 6 * tau) * b0 +
                (3 * t2 - 2 * tau) * h * b1) / h;
    };
    auto ddherm = [&](double a0, double a1, double b0, double b1) {
        return ((12 * tau - 6) * a0 + (6 * tau - 4) * h * a1 + (-12 * tau + 6) * b0 + (6 * tau - 2) * h * b1) /
               (h * h);
    };
    Local l;
    l.p = {herm(A.p.u, A.du, B.p.u, B.du), herm(A.p.v, A.dv, B.p.v, B.dv)};
    const Vec2 ti{dherm(A.p.u, A.du, B.p.u, B.du), dherm(A.p.v, A.dv, B.p.v, B.dv)};
    if (c.family != 0) {
        l.t = oriented_field(src, l.p, c.family, ti);
        l.a = field_acceleration(src, l.p, c.family, l.t);
    } else {
        const FundamentalData fd = at(src, l.p);
        const double n = std::sqrt(first_form(fd, ti[0], ti[1]));
        l.t = {ti[0] / n, ti[1] / n};
        l.a = {ddherm(A.p.u, A.du, B.p.u, B.du), ddherm(A.p.v, A.dv, B.p.v, B.dv)};
    }
    return l;
}

void require_hyperbolic(const FundamentalData& fd) {
    if (!(fd.K < 0.0)) throw PreconditionError("K >= 0 on the curve");
    if (fd.M == 0.0) throw PreconditionError("M vanishes on the curve");
}

}  // namespace

CurveFrame curve_frame(const FormSource& src, const TracedCurve& c, std::size_t index) {
    if (index >= c.samples.size()) throw PreconditionError("curve sample index out of range");
    const CurveSample& smp = c.samples[index];
    const FundamentalData fd = at(src, smp.p);
    const Vec2 t{smp.du, smp.dv};
    Vec2 a{0.0, 0.0};
    if (c.family != 0) {
        a = field_acceleration(src, smp.p, c.family, t);
    } else if (c.samples.size() >= 3) {
        const std::size_t n = c.samples.size();
        std::size_t i0, i1;
        if (index == 0) {
            i0 = c.closed ? n - 2 : 0;
            i1 = 1;
        } else if (index + 1 == n) {
            i0 = n - 2;
            i1 = c.closed ? 1 : n - 1;
        } else {
            i0 = index - 1;
            i1 = index + 1;
        }
        double ds = c.samples[i1].s - c.samples[i0].s;
        if (c.closed && (index == 0 || index + 1 == n)) ds += c.length();
        a = {(c.samples[i1].du - c.samples[i0].du) / ds, (c.samples[i1].dv - c.samples[i0].dv) / ds};
    }
    return frame_at(fd, t, a);
}

CurveFrame curve_frame(const Surface& s, const TracedCurve& c, std::size_t index) {
    return curve_frame(SurfaceForms(s), c, index);
}

InvariantRecord rigidity_invariant(const FormSource& src, const InvariantControls& ctl) {
    const Domain dom = src.domain();
    if (!dom.u.periodic) throw PreconditionError("annulus chart needs a periodic x axis");
    const int n = ctl.samples;
    const double dx = dom.u.length() / n;
    const double h = ctl.fd_step;
    InvariantRecord r;
    r.samples = n;
    r.orientation = src.orientation_sign();
    double msign = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = dom.u.lo + i * dx;
        const FormSample smp = src.sample({x, ctl.t0});
        const FundamentalData fd = fundamental_data(smp, r.orientation);
        require_hyperbolic(fd);
        const double scale = std::sqrt(fd.L * fd.L + 2 * fd.M * fd.M + fd.N * fd.N);
        if (std::abs(fd.L) > ctl.zero_tol * scale) throw PreconditionError("L does not vanish on the curve");
        const double sm = fd.M > 0.0 ? 1.0 : -1.0;
        if (msign != 0.0 && sm != msign) throw PreconditionError("M changes sign on the curve");
        msign = sm;

        const double Lt = (src.sample({x, ctl.t0 + h}).L - src.sample({x, ctl.t0 - h}).L) / (2 * h);
        r.coordinate += Lt / fd.M * dx;

        // Unit speed along t = t0: u' = E^{-1/2}, u'' = -E_x / (2 E^2).
        const CurveFrame f = frame_at(fd, {1.0 / std::sqrt(fd.E), 0.0}, {-smp.Eu / (2.0 * fd.E * fd.E), 0.0});
        r.intrinsic += f.kg * f.kn / std::sqrt(-fd.K) * std::sqrt(fd.E) * dx;
    }
    r.relation_sign = -msign;
    r.discrepancy = std::abs(r.coordinate - r.relation_sign * r.intrinsic);
    return r;
}

InvariantRecord rigidity_invariant(const FormSource& src, const TracedCurve& c, const InvariantControls& ctl) {
    if (!c.closed || c.samples.size() < 3) throw PreconditionError("invariant needs a closed curve");
    using Rule = boost::math::quadrature::gauss<double, 3>;
    const auto& xs = Rule::abscissa();
    const auto& ws = Rule::weights();
    std::vector<std::pair<double, double>> nodes;  // (tau, weight on [0,1])
    for (std::size_t k = 0; k < xs.size(); ++k) {
        nodes.push_back({0.5 + 0.5 * xs[k], 0.5 * ws[k]});
        if (xs[k] != 0.0) nodes.push_back({0.5 - 0.5 * xs[k], 0.5 * ws[k]});
    }
    const double h = ctl.fd_step;
    InvariantRecord r;
    r.orientation = src.orientation_sign();
    double msign = 0.0;
    for (std::size_t i = 0; i + 1 < c.samples.size(); ++i) {
        const double seg = c.samples[i + 1].s - c.samples[i].s;
        for (auto [tau, w] : nodes) {
            const Local l = local_at(src, c, i, tau);
            const FundamentalData fd = at(src, l.p);
            require_hyperbolic(fd);
            const CurveFrame f = frame_at(fd, l.t, l.a);
            r.intrinsic += f.kg * f.kn / std::sqrt(-fd.K) * w * seg;

            // Tube chart (s, t) -> c(s) + t Z(s).
            auto z_at = [&](double sgn) {
                const ParamPoint q{l.p.u + sgn * h * l.t[0] + 0.5 * h * h * l.a[0],
                                   l.p.v + sgn * h * l.t[1] + 0.5 * h * h * l.a[1]};
                const Vec2 tq{l.t[0] + sgn * h * l.a[0], l.t[1] + sgn * h * l.a[1]};
                return unit_normal(at(src, q), tq);
            };
            const Vec2 zp = z_at(1.0), zm = z_at(-1.0);
            const Vec2 dz{(zp[0] - zm[0]) / (2 * h), (zp[1] - zm[1]) / (2 * h)};
            const Vec2 Z = f.Z;
            auto ltilde = [&](double sgn) {
                const FundamentalData fq = at(src, {l.p.u + sgn * h * Z[0], l.p.v + sgn * h * Z[1]});
                const double a0 = l.t[0] + sgn * h * dz[0], a1 = l.t[1] + sgn * h * dz[1];
                return second_form(fq, a0, a1);
            };
            const double Lt = (ltilde(1.0) - ltilde(-1.0)) / (2 * h);
            const double Mt = second_form(fd, l.t[0], l.t[1], Z[0], Z[1]);
            const double sm = Mt > 0.0 ? 1.0 : -1.0;
            if (msign != 0.0 && sm != msign) throw PreconditionError("M changes sign on the curve");
            msign = sm;
            r.coordinate += Lt / Mt * w * seg;
            ++r.samples;
        }
    }
    r.relation_sign = -msign;
    r.discrepancy = std::abs(r.coordinate - r.relation_sign * r.intrinsic);
    return r;
}

}  // namespace tightkit
