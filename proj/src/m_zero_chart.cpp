#include <cmath>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "tightkit/chart.hpp"
#include "tightkit/error.hpp"
#include "tightkit/vanishing.hpp"

namespace tightkit {

namespace odeint = boost::numeric::odeint;

namespace {

struct Axes {
    int along = 0;
    int across = 1;
    ParamPoint at(double a, double c) const { return along == 0 ? ParamPoint{a, c} : ParamPoint{c, a}; }
    double along_of(ParamPoint p) const { return along == 0 ? p.u : p.v; }
    double across_of(ParamPoint p) const { return along == 0 ? p.v : p.u; }
};

// II components with the native axes relabelled (along, across).
struct Relabelled {
    double Laa, M, Ncc, scale;
};

Relabelled relabel(const FundamentalData& fd, const Axes& ax) {
    const double scale = std::sqrt(fd.L * fd.L + 2 * fd.M * fd.M + fd.N * fd.N);
    return ax.along == 0 ? Relabelled{fd.L, fd.M, fd.N, scale} : Relabelled{fd.N, fd.M, fd.L, scale};
}

Axes pick_axes(const FundamentalData& fd) {
    // The across axis carries the larger diagonal of II, so N stays away from 0.
    return std::abs(fd.L) >= std::abs(fd.N) ? Axes{1, 0} : Axes{0, 1};
}

void require_parabolic(const FundamentalData& fd, double tol) {
    const double scale = fd.L * fd.L + 2 * fd.M * fd.M + fd.N * fd.N;
    if (scale == 0.0) throw PreconditionError("second form vanishes at the base point");
    if (std::abs(fd.L * fd.N - fd.M * fd.M) > tol * scale) throw PreconditionError("base point is not parabolic");
}

Chart build(std::shared_ptr<const FormSource> src, ParamPoint p, const Axes& ax, double width,
            const MZeroControls& ctl) {
    const Domain dom = src->domain();
    auto slope = [&](double a, double c) {
        const FundamentalData fd = fundamental_data(*src, dom.reduce(ax.at(a, c)));
        const Relabelled r = relabel(fd, ax);
        if (std::abs(r.M) <= 1e-14 * r.scale) return 0.0;
        if (std::abs(r.Ncc) <= 1e-12 * r.scale) throw PreconditionError("M/N is not continuable across the strip");
        return -r.M / r.Ncc;
    };
    const int nx = ctl.nx % 2 == 1 ? ctl.nx : ctl.nx + 1;
    Chart c;
    c.kind = ChartKind::MZero;
    c.nx = nx;
    c.nt = ctl.nt;
    c.along_axis = ax.along;
    c.source = src;
    const double a0 = ax.along_of(p), c0 = ax.across_of(p);
    c.x_lo = a0 - 0.5 * width;
    c.x_hi = a0 + 0.5 * width;
    c.t_lo = -0.5 * width;
    c.t_hi = 0.5 * width;
    c.nodes.resize(static_cast<std::size_t>(nx) * c.nt);
    const int mid = nx / 2;
    using State = std::array<double, 1>;
    auto sys = [&](const State& y, State& dy, double a) { dy[0] = slope(a, y[0]); };
    for (int j = 0; j < c.nt; ++j) {
        const double t = c.t_at(j);
        for (int dir : {+1, -1}) {
            std::vector<double> times;
            for (int i = mid; i >= 0 && i < nx; i += dir) times.push_back(c.x_at(i));
            State y{c0 + t};
            int k = mid;
            auto obs = [&](const State& s, double) {
                c.node(k, j) = ax.at(c.x_at(k), s[0]);
                k += dir;
            };
            odeint::integrate_times(odeint::make_controlled(1e-13, 1e-12, odeint::runge_kutta_dopri5<State>()),
                                    sys, y, times.begin(), times.end(), dir * width / nx, obs);
        }
    }
    return c;
}

}  // namespace

Chart m_zero_chart(std::shared_ptr<const FormSource> src, ParamPoint p, const MZeroControls& ctl) {
    const FundamentalData fd = fundamental_data(*src, src->domain().reduce(p));
    require_parabolic(fd, ctl.parabolic_tol);
    const Axes ax = pick_axes(fd);
    for (double w = ctl.width;; w *= 0.5) {
        const bool last = 0.5 * w < ctl.min_width;
        try {
            Chart c = build(src, p, ax, w, ctl);
            c.certificate = compute_certificate(c, Certificate{});
            if (c.certificate.min_jacobian > 0.0) return c;
            if (last) throw PreconditionError("characteristics cross inside every strip tried");
        } catch (const PreconditionError&) {
            if (last) throw;
        }
    }
}

Chart m_zero_chart(const Surface& s, ParamPoint p, const MZeroControls& ctl) {
    return m_zero_chart(std::make_shared<SurfaceForms>(s), p, ctl);
}

namespace {

// Least-squares Taylor coefficients of f on [-delta, delta].
std::vector<double> taylor_fit(const std::function<double(double)>& f, double delta, int degree) {
    const int n = 4 * (degree + 1);
    Eigen::MatrixXd A(n, degree + 1);
    Eigen::VectorXd b(n);
    for (int k = 0; k < n; ++k) {
        const double tau = std::cos(kPi * (k + 0.5) / n);
        for (int d = 0; d <= degree; ++d) A(k, d) = std::pow(tau, d);
        b(k) = f(tau * delta);
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    std::vector<double> out(degree + 1);
    for (int d = 0; d <= degree; ++d) out[d] = c(d) / std::pow(delta, d);
    return out;
}

// First index k >= first whose scaled coefficient is not negligible.
int leading_order(const std::vector<double>& c, double delta, int first, int last) {
    double big = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) big = std::max(big, std::abs(c[k]) * std::pow(delta, k));
    for (int k = first; k <= last && k < static_cast<int>(c.size()); ++k)
        if (std::abs(c[k]) * std::pow(delta, k) > 1e-6 * big) return k;
    return -1;
}

}  // namespace

VanishingOrder vanishing_order(std::shared_ptr<const FormSource> src, ParamPoint q, int max_order,
                               const MZeroControls& ctl) {
    const Chart chart = m_zero_chart(src, q, ctl);
    const Axes ax = chart.along_axis == 0 ? Axes{0, 1} : Axes{1, 0};
    const Domain dom = src->domain();
    const double a0 = ax.along_of(q), c0 = ax.across_of(q);
    const double delta = std::min(0.05, chart.t_hi);
    const int degree = max_order + 3;
    // On x = x_q the chart column is the native across line, d_t = d_across and
    // d_x = d_along - (M/N) d_across, so N_chart = N and L_chart = K det I / N.
    auto data = [&](double t) {
        return fundamental_data(*src, dom.reduce(ax.at(a0, c0 + t)));
    };
    VanishingOrder r;
    r.K_taylor = taylor_fit([&](double t) { return data(t).K; }, delta, degree);
    const auto n = taylor_fit([&](double t) { return relabel(data(t), ax).Ncc; }, delta, degree);
    const auto l = taylor_fit(
        [&](double t) {
            const FundamentalData fd = data(t);
            return fd.K * fd.detI / relabel(fd, ax).Ncc;
        },
        delta, degree);
    r.b = leading_order(r.K_taylor, delta, 1, max_order);
    r.exceeds_max_order = r.b < 0;
    r.r = leading_order(n, delta, 0, max_order);
    r.l_order = leading_order(l, delta, 0, max_order + 1);
    r.consistent = !r.exceeds_max_order && r.r >= 0 && r.r < r.b && (r.l_order < 0 || r.l_order >= r.r + 1);
    r.K_taylor.resize(max_order + 1);
    return r;
}

VanishingOrder vanishing_order(const Surface& s, ParamPoint q, int max_order, const MZeroControls& ctl) {
    return vanishing_order(std::make_shared<SurfaceForms>(s), q, max_order, ctl);
}

}  // namespace tightkit
