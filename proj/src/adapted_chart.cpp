#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "stencil.hpp"
#include "tightkit/asymptotic.hpp"
#include "tightkit/chart.hpp"
#include "tightkit/error.hpp"
#include "tightkit/invariant.hpp"

namespace tightkit {

namespace odeint = boost::numeric::odeint;
using detail::d1_8;
using detail::lagrange_weights;
using detail::window_start;
using Vec2 = std::array<double, 2>;

namespace {

struct LevelExit {
    double t;
};

// Everything a build needs besides the controls.
struct Setup {
    std::shared_ptr<const FormSource> src;
    Domain dom;
    int family = 0;
    Vec2 shift{0.0, 0.0};  // native displacement after one turn in the input orientation
    double length_guess = 0.0;
};

FundamentalData at(const Setup& s, ParamPoint p) { return fundamental_data(*s.src, s.dom.reduce(p)); }

Vec2 unit(const FundamentalData& fd, Vec2 d) {
    const double n = std::sqrt(first_form(fd, d[0], d[1]));
    return {d[0] / n, d[1] / n};
}

Vec2 left_normal(const FundamentalData& fd, Vec2 t) {
    const double sq = std::sqrt(fd.detI);
    return {-(fd.F * t[0] + fd.G * t[1]) / sq, (fd.E * t[0] + fd.F * t[1]) / sq};
}

using State = std::array<double, 2>;
using Stepper = odeint::runge_kutta_dopri5<State>;

auto controlled() { return odeint::make_controlled(1e-13, 1e-12, Stepper()); }

// Integral curve of a unit line field oriented by continuity from ref.
template <class Field>
void follow(Field&& field, ParamPoint start, Vec2 ref, const std::vector<double>& times,
            std::vector<ParamPoint>& out, std::vector<Vec2>* dirs = nullptr) {
    auto sys = [&](const State& y, State& dy, double) {
        Vec2 d = field(ParamPoint{y[0], y[1]});
        if (d[0] * ref[0] + d[1] * ref[1] < 0.0) d = {-d[0], -d[1]};
        dy = d;
    };
    State y{start.u, start.v};
    auto obs = [&](const State& s, double) {
        Vec2 d = field(ParamPoint{s[0], s[1]});
        if (d[0] * ref[0] + d[1] * ref[1] < 0.0) d = {-d[0], -d[1]};
        ref = d;
        out.push_back({s[0], s[1]});
        if (dirs) dirs->push_back(d);
    };
    const double dt = times.size() > 1 ? (times[1] - times[0]) : 1e-3;
    odeint::integrate_times(controlled(), sys, y, times.begin(), times.end(), dt, obs);
}

// The closed curve resampled at equal arclength from a base point.
struct Resampled {
    std::vector<ParamPoint> p;  // nx + 1 points, the last one turn later
    std::vector<Vec2> t;
    double length = 0.0;
    Vec2 shift{0.0, 0.0};
};

Resampled resample(const Setup& s, ParamPoint base, Vec2 dir, int orient, int nx) {
    auto field = [&](ParamPoint q) {
        const FundamentalData fd = at(s, q);
        return family_direction(fd, s.family);
    };
    const Vec2 shift{orient * s.shift[0], orient * s.shift[1]};
    auto end_at = [&](double len) {
        std::vector<ParamPoint> pts;
        follow(field, base, dir, {0.0, len}, pts);
        return pts.back();
    };
    // Closing length: the along-curve component of the seam offset vanishes.
    auto gap = [&](double len) {
        const ParamPoint e = end_at(len);
        return (e.u - base.u - shift[0]) * dir[0] + (e.v - base.v - shift[1]) * dir[1];
    };
    double lo = 0.99 * s.length_guess, hi = 1.01 * s.length_guess;
    double glo = gap(lo), ghi = gap(hi);
    if (glo * ghi > 0.0) throw ConvergenceError("closed curve does not close near its traced length");
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 100;
    const auto br = boost::math::tools::toms748_solve(gap, lo, hi, glo, ghi, tol, iters);
    Resampled r;
    r.length = 0.5 * (br.first + br.second);
    r.shift = shift;
    std::vector<double> times(nx + 1);
    for (int i = 0; i <= nx; ++i) times[i] = r.length * i / nx;
    std::vector<Vec2> dirs;
    follow(field, base, dir, times, r.p, &dirs);
    for (std::size_t i = 0; i < r.p.size(); ++i) r.t.push_back(unit(at(s, r.p[i]), dirs[i]));
    return r;
}

Vec2 principal(const FundamentalData& fd, int sign) {
    const PrincipalFrame pf = principal_frame(fd);
    const auto& d = sign > 0 ? pf.dir1 : pf.dir2;
    if (!d) throw PreconditionError("umbilic point near the curve");
    return unit(fd, *d);
}

// Preliminary chart: columns are lines of curvature of the given sign leaving
// the curve, parameterised by arclength t~ in [t_lo, t_hi].
struct Prelim {
    int nx = 0, nt = 0, j0 = 0;
    double hx = 0.0, t_lo = 0.0, ht = 0.0;
    Vec2 shift{0.0, 0.0};
    std::vector<ParamPoint> q;  // (nx + 1) * nt
    std::vector<double> M, N, Q;  // nx * nt: forms and -K det I
    int m_sign = 0;               // sign of M on the curve, 0 if mixed
    bool n_has_line_sign = true;

    ParamPoint& node(int i, int j) { return q[static_cast<std::size_t>(i) * nt + j]; }
    ParamPoint wrapped(int i, int j) const {
        const int k = static_cast<int>(std::floor(static_cast<double>(i) / nx));
        const ParamPoint p = q[static_cast<std::size_t>(i - k * nx) * nt + j];
        return {p.u + k * shift[0], p.v + k * shift[1]};
    }
    double interp(const std::vector<double>& f, double x, double t) const {
        constexpr int m = 8;
        const double xi = x / hx, tj = (t - t_lo) / ht;
        const int i0 = static_cast<int>(std::floor(xi)) - (m / 2 - 1);
        const int jj = window_start(tj, m, nt);
        double wx[m], wt[m];
        lagrange_weights(xi - i0, m, wx);
        lagrange_weights(tj - jj, m, wt);
        double r = 0.0;
        for (int a = 0; a < m; ++a) {
            const int i = ((i0 + a) % nx + nx) % nx;
            for (int b = 0; b < m; ++b) r += wx[a] * wt[b] * f[static_cast<std::size_t>(i) * nt + jj + b];
        }
        return r;
    }
    // Position on column i at arclength t.
    ParamPoint column(int i, double t) const {
        constexpr int m = 8;
        const double tj = (t - t_lo) / ht;
        const int jj = window_start(tj, m, nt);
        double wt[m];
        lagrange_weights(tj - jj, m, wt);
        ParamPoint r{0.0, 0.0};
        for (int b = 0; b < m; ++b) {
            const ParamPoint p = q[static_cast<std::size_t>(i) * nt + jj + b];
            r.u += wt[b] * p.u;
            r.v += wt[b] * p.v;
        }
        return r;
    }
};

Prelim preliminary(const Setup& s, const Resampled& g, int line_sign, int side, int orient, double width,
                   const AdaptedControls& ctl) {
    Prelim pr;
    pr.nx = static_cast<int>(g.p.size()) - 1;
    const int k = std::max(1, (ctl.prelim_nt - 1 + 4) / 5);
    pr.nt = 5 * k + 1;
    pr.j0 = k;
    pr.t_lo = -0.5 * width;
    pr.ht = 2.5 * width / (pr.nt - 1);
    pr.hx = g.length / pr.nx;
    pr.shift = g.shift;
    pr.q.resize(static_cast<std::size_t>(pr.nx + 1) * pr.nt);
    std::vector<Vec2> e((pr.nx + 1) * static_cast<std::size_t>(pr.nt));
    auto field = [&](ParamPoint p) { return principal(at(s, p), line_sign); };
    for (int i = 0; i <= pr.nx; ++i) {
        const FundamentalData fd = at(s, g.p[i]);
        const Vec2 T = g.t[i];
        const Vec2 n = left_normal(fd, T);
        const Vec2 Z{side * orient * n[0], side * orient * n[1]};
        Vec2 e0 = field(g.p[i]);
        if (first_form(fd, e0[0], e0[1], Z[0], Z[1]) < 0.0) e0 = {-e0[0], -e0[1]};
        const double sin_angle = std::abs(first_form(fd, e0[0], e0[1], n[0], n[1]));
        if (sin_angle < ctl.transversal_tol) throw PreconditionError("line of curvature tangent to the curve");
        for (int dir : {+1, -1}) {
            std::vector<double> times;
            for (int j = pr.j0; j >= 0 && j < pr.nt; j += dir) times.push_back(std::abs(j - pr.j0) * pr.ht);
            std::vector<ParamPoint> pts;
            std::vector<Vec2> dirs;
            follow(field, g.p[i], dir > 0 ? e0 : Vec2{-e0[0], -e0[1]}, times, pts, &dirs);
            for (std::size_t m = 0; m < pts.size(); ++m) {
                const int j = pr.j0 + dir * static_cast<int>(m);
                pr.node(i, j) = pts[m];
                e[static_cast<std::size_t>(i) * pr.nt + j] = dir > 0 ? dirs[m] : Vec2{-dirs[m][0], -dirs[m][1]};
            }
        }
    }
    const std::size_t cells = static_cast<std::size_t>(pr.nx) * pr.nt;
    pr.M.resize(cells);
    pr.N.resize(cells);
    pr.Q.resize(cells);
    int m_pos = 0, m_neg = 0;
    for (int i = 0; i < pr.nx; ++i)
        for (int j = 0; j < pr.nt; ++j) {
            const ParamPoint p = pr.node(i, j);
            const FundamentalData fd = at(s, p);
            Vec2 dx;
            if (j == pr.j0) {
                dx = g.t[i];
            } else {
                dx = {d1_8([&](int a) { return pr.wrapped(a, j).u; }, i, pr.hx),
                      d1_8([&](int a) { return pr.wrapped(a, j).v; }, i, pr.hx)};
            }
            const Vec2 et = e[static_cast<std::size_t>(i) * pr.nt + j];
            const double L = second_form(fd, dx[0], dx[1]);
            const double M = second_form(fd, dx[0], dx[1], et[0], et[1]);
            const double N = second_form(fd, et[0], et[1]);
            const std::size_t c = static_cast<std::size_t>(i) * pr.nt + j;
            pr.M[c] = M;
            pr.N[c] = N;
            pr.Q[c] = std::max(0.0, M * M - L * N);
            if (N * line_sign <= 0.0) pr.n_has_line_sign = false;
            if (j == pr.j0) (M > 0.0 ? m_pos : m_neg)++;
        }
    pr.m_sign = m_neg == 0 ? 1 : (m_pos == 0 ? -1 : 0);
    return pr;
}

// t-level through (0, d) with tangent Y_sigma; values at x_i, i = 0..nx.
std::vector<double> level(const Prelim& pr, double sigma, double d) {
    const double lo = pr.t_lo + 3 * pr.ht, hi = pr.t_lo + (pr.nt - 4) * pr.ht;
    using S1 = std::array<double, 1>;
    auto sys = [&](const S1& y, S1& dy, double x) {
        if (y[0] < lo || y[0] > hi) throw LevelExit{y[0]};
        const double M = pr.interp(pr.M, x, y[0]);
        const double N = pr.interp(pr.N, x, y[0]);
        const double Q = std::max(0.0, pr.interp(pr.Q, x, y[0]));
        dy[0] = (-M + sigma * std::sqrt(Q)) / N;
    };
    std::vector<double> xs(pr.nx + 1), out;
    for (int i = 0; i <= pr.nx; ++i) xs[i] = i * pr.hx;
    S1 y{d};
    try {
        odeint::integrate_times(odeint::make_controlled(1e-13, 1e-12, odeint::runge_kutta_dopri5<S1>()), sys, y,
                                xs.begin(), xs.end(), pr.hx, [&](const S1& s, double) { out.push_back(s[0]); });
    } catch (const LevelExit& e) {
        out.resize(pr.nx + 1, e.t < lo ? pr.t_lo : pr.t_lo + (pr.nt - 1) * pr.ht);
    }
    return out;
}

double closing_sigma(const Prelim& pr, double d) {
    auto g = [&](double s) { return level(pr, s, d).back() - d; };
    const double g0 = g(-1.0);
    if (g0 == 0.0) return -1.0;
    double a = -1.0, ga = g0;
    for (double s : {-0.5, 0.0, 0.5, 0.9, 0.99, 0.999, 0.999999, -1.5, -2.0, -4.0, -10.0, -100.0}) {
        if (s == -1.5) a = -1.0, ga = g0;
        const double gs = g(s);
        if (gs * g0 <= 0.0) {
            boost::math::tools::eps_tolerance<double> tol(48);
            std::uintmax_t iters = 200;
            const auto br = boost::math::tools::toms748_solve(g, std::min(a, s), std::max(a, s), a < s ? ga : gs,
                                                              a < s ? gs : ga, tol, iters);
            return 0.5 * (br.first + br.second);
        }
        a = s;
        ga = gs;
    }
    throw ConvergenceError("no sigma closes the level");
}

struct Built {
    Chart chart;
    Prelim prelim;
    Resampled curve;
};

Built build(const Setup& s, ParamPoint base, Vec2 dir, int orient, int line_sign, double width,
            const AdaptedControls& ctl, Certificate& rec) {
    Built b;
    b.curve = resample(s, base, dir, orient, ctl.nx);
    b.prelim = preliminary(s, b.curve, line_sign, ctl.side, orient, width, ctl);
    const Prelim& pr = b.prelim;
    if (pr.m_sign >= 0) return b;
    Chart& c = b.chart;
    c.kind = ChartKind::AsymptoticAdapted;
    c.nx = ctl.nx;
    c.nt = ctl.nt;
    c.x_lo = 0.0;
    c.x_hi = b.curve.length;
    c.t_lo = 0.0;
    c.t_hi = width;
    c.periodic_x = true;
    c.period_shift = b.curve.shift;
    c.source = s.src;
    c.nodes.resize(static_cast<std::size_t>(c.columns()) * c.nt);
    rec.sigma_min = std::numeric_limits<double>::infinity();
    rec.sigma_max = -rec.sigma_min;
    rec.closure_residual = 0.0;
    for (int j = 0; j < c.nt; ++j) {
        const double d = c.t_at(j);
        std::vector<double> T(c.nx + 1, 0.0);
        if (j > 0) {
            const double sigma = closing_sigma(pr, d);
            T = level(pr, sigma, d);
            rec.sigma_min = std::min(rec.sigma_min, sigma);
            rec.sigma_max = std::max(rec.sigma_max, sigma);
            rec.closure_residual = std::max(rec.closure_residual, std::abs(T.back() - d));
            const double top = pr.t_lo + (pr.nt - 4) * pr.ht, bottom = pr.t_lo + 3 * pr.ht;
            for (double v : T)
                if (v >= top || v <= bottom) throw PreconditionError("level leaves the preliminary strip");
        }
        for (int i = 0; i <= c.nx; ++i) c.node(i, j) = j == 0 ? b.curve.p[i] : pr.column(i, T[i]);
    }
    return b;
}

}  // namespace

Chart asymptotic_adapted_chart(std::shared_ptr<const FormSource> src, const TracedCurve& gamma,
                               const AdaptedControls& ctl) {
    if (!gamma.closed || gamma.samples.size() < 3) throw PreconditionError("adapted chart needs a closed curve");
    if (gamma.family == 0) throw PreconditionError("adapted chart needs an asymptotic curve");
    if (ctl.side != 1 && ctl.side != -1) throw PreconditionError("side must be +1 or -1");
    const InvariantRecord inv = rigidity_invariant(*src, gamma);
    if (std::abs(inv.intrinsic) <= ctl.invariant_tol)
        throw PreconditionError("rigidity invariant of the curve vanishes");

    Setup s;
    s.src = src;
    s.dom = src->domain();
    s.family = gamma.family;
    s.shift = {gamma.winding[0] * s.dom.u.length(), gamma.winding[1] * s.dom.v.length()};
    s.length_guess = gamma.length();
    ParamPoint base = gamma.front().p;
    Vec2 tangent{gamma.front().du, gamma.front().dv};

    for (double w = ctl.width;; w *= 0.5) {
        const bool last = 0.5 * w < ctl.min_width;
        try {
            Certificate rec;
            rec.kind = ChartKind::AsymptoticAdapted;
            int orient = 1;
            Vec2 dir = tangent;
            auto make = [&](int line_sign, ParamPoint at_base, Vec2 at_dir) {
                Built b = build(s, at_base, at_dir, orient, line_sign, w, ctl, rec);
                if (b.prelim.m_sign == 0) throw PreconditionError("M changes sign on the curve");
                if (b.prelim.m_sign > 0) {
                    // Reverse the curve so that the preliminary M is negative.
                    orient = -orient;
                    at_dir = {-at_dir[0], -at_dir[1]};
                    b = build(s, at_base, at_dir, orient, line_sign, w, ctl, rec);
                }
                dir = at_dir;
                return b;
            };
            Built b = make(+1, base, dir);
            const double d = 0.5 * w;
            const double d_return = level(b.prelim, -1.0, d).back();
            rec.return_offset = d_return - d;
            int line_sign = +1;
            if (d_return > d) {
                line_sign = -1;
                b = make(line_sign, base, dir);
            }
            if (ctl.rebase) {
                std::vector<double> lt(b.chart.nx);
                for (int i = 0; i < b.chart.nx; ++i) {
                    std::vector<double> L(5);
                    for (int j = 0; j < 5; ++j) L[j] = chart_forms(b.chart, i, j).L;
                    lt[i] = std::abs(detail::d1_4([&](int k) { return L[k]; }, 0, 5, b.chart.ht()));
                }
                int best = 0;
                for (int i = 1; i < b.chart.nx; ++i)
                    if (lt[i] > lt[best]) best = i;
                const int n = b.chart.nx;
                const double l0 = lt[(best + n - 1) % n], l1 = lt[best], l2 = lt[(best + 1) % n];
                const double curv = l0 - 2 * l1 + l2;
                const double off = curv != 0.0 ? std::clamp(0.5 * (l0 - l2) / curv, -0.5, 0.5) : 0.0;
                if (best != 0 || std::abs(off) > 1e-3) {
                    const double x = (best + off) * b.chart.hx();
                    const ParamPoint nb = b.chart.to_surface(x, 0.0);
                    const FundamentalData fd = fundamental_data(*src, s.dom.reduce(nb));
                    Vec2 nd = family_direction(fd, s.family);
                    const Vec2 old = b.curve.t[best];
                    if (nd[0] * old[0] + nd[1] * old[1] < 0.0) nd = {-nd[0], -nd[1]};
                    b = build(s, nb, nd, orient, line_sign, w, ctl, rec);
                }
            }
            rec.curvature_line_sign = line_sign;
            rec.prelim_N_positive = b.prelim.n_has_line_sign && line_sign > 0;
            rec.prelim_M_negative = b.prelim.m_sign < 0;
            rec.x_flipped = orient < 0;
            b.chart.certificate = compute_certificate(b.chart, rec);
            if (b.chart.certificate.min_jacobian > 0.0) return b.chart;
            if (last) throw PreconditionError("levels cross in every strip tried");
        } catch (const PreconditionError& e) {
            if (last || std::string(e.what()).find("level leaves") == std::string::npos) throw;
        } catch (const ConvergenceError&) {
            if (last) throw;
        }
    }
}

Chart asymptotic_adapted_chart(const PrescribedForms& src, const TracedCurve& gamma, const AdaptedControls& ctl) {
    return asymptotic_adapted_chart(std::make_shared<PrescribedForms>(src), gamma, ctl);
}

}  // namespace tightkit
