#include <algorithm>
#include <cmath>
#include <ostream>

#include "stencil.hpp"
#include "tightkit/codazzi.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

namespace {

constexpr double NodeData::*kNodeFields[] = {
    &NodeData::E,  &NodeData::F,  &NodeData::G,  &NodeData::L,    &NodeData::M,     &NodeData::N,
    &NodeData::Lx, &NodeData::Lt, &NodeData::Mx, &NodeData::Mt,   &NodeData::Nx,    &NodeData::Nt,
    &NodeData::detI, &NodeData::detI_x};
constexpr double CodazziCoefficients::*kCoeffFields[] = {
    &CodazziCoefficients::a,     &CodazziCoefficients::b,    &CodazziCoefficients::c,
    &CodazziCoefficients::alpha, &CodazziCoefficients::beta, &CodazziCoefficients::gamma};

void check_grid(const SystemGrid& g) {
    if (!(g.x_hi > g.x_lo) || !(g.t_hi > g.t_lo)) throw DomainError("empty system grid");
    if (g.nx < (g.periodic_x ? 9 : 6) || g.nt < 6) throw DomainError("system grid too coarse for its stencils");
}

int wrap(int i, int n) { return ((i % n) + n) % n; }

SignPattern detect_pattern(const SystemField& f) {
    const SystemGrid& g = f.grid;
    if (!g.periodic_x) return SignPattern::None;
    double scale = 0.0, on_curve = 0.0;
    int l_sign = 0, n_sign = 0;
    bool mixed = false, m_zero = false;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nt; ++j) {
            const NodeData& d = f.node(i, j);
            scale = std::max({scale, std::abs(d.L), std::abs(d.M), std::abs(d.N)});
            if (j == 0) on_curve = std::max(on_curve, std::abs(d.L));
            if (j > 0) {
                const int s = d.L > 0 ? 1 : (d.L < 0 ? -1 : 0);
                if (l_sign == 0 && s != 0) l_sign = s;
                if (s != l_sign) mixed = true;
            }
            const int ns = d.N > 0 ? 1 : -1;
            if (n_sign == 0) n_sign = ns;
            if (ns != n_sign || d.N == 0.0) mixed = true;
            if (d.M == 0.0) m_zero = true;
        }
    if (mixed || m_zero || on_curve > 1e-6 * scale) return SignPattern::None;
    const double lt0 = f.node(0, 0).Lt;
    if (l_sign < 0 && n_sign > 0 && lt0 < 0) return SignPattern::NegativeL;
    if (l_sign > 0 && n_sign < 0 && lt0 > 0) return SignPattern::PositiveL;
    return SignPattern::None;
}

// Derivatives and coefficients from base forms laid out i * nt + j.
SystemField from_forms(const std::vector<BaseForms>& base, const SystemGrid& g, const std::string& source) {
    SystemField f;
    f.grid = g;
    f.source = source;
    f.nodes.resize(base.size());
    const double hx = g.hx(), ht = g.ht();
    auto idx = [&](int i, int j) { return static_cast<std::size_t>(i) * g.nt + j; };
    auto dx = [&](auto get, int i, int j) {
        if (g.periodic_x) return detail::d1_8([&](int k) { return get(base[idx(wrap(k, g.nx), j)]); }, i, hx);
        return detail::d1_4([&](int k) { return get(base[idx(k, j)]); }, i, g.nx, hx);
    };
    auto dt = [&](auto get, int i, int j) {
        return detail::d1_4([&](int k) { return get(base[idx(i, k)]); }, j, g.nt, ht);
    };
    auto det = [](const BaseForms& b) { return b.E * b.G - b.F * b.F; };
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nt; ++j) {
            const BaseForms& b = base[idx(i, j)];
            NodeData& d = f.nodes[idx(i, j)];
            d.E = b.E, d.F = b.F, d.G = b.G, d.L = b.L, d.M = b.M, d.N = b.N;
            d.detI = det(b);
            if (!(b.E > 0.0) || !(d.detI > 0.0))
                throw DegenerateMetric("metric not positive definite at x = " + std::to_string(g.x_at(i)) +
                                       ", t = " + std::to_string(g.t_at(j)));
            d.Lx = dx([](const BaseForms& q) { return q.L; }, i, j);
            d.Lt = dt([](const BaseForms& q) { return q.L; }, i, j);
            d.Mx = dx([](const BaseForms& q) { return q.M; }, i, j);
            d.Mt = dt([](const BaseForms& q) { return q.M; }, i, j);
            d.Nx = dx([](const BaseForms& q) { return q.N; }, i, j);
            d.Nt = dt([](const BaseForms& q) { return q.N; }, i, j);
            d.detI_x = dx(det, i, j);
            if (b.k) {
                d.k = *b.k;
                continue;
            }
            FormSample s;
            s.E = b.E, s.F = b.F, s.G = b.G;
            s.Eu = dx([](const BaseForms& q) { return q.E; }, i, j);
            s.Ev = dt([](const BaseForms& q) { return q.E; }, i, j);
            s.Fu = dx([](const BaseForms& q) { return q.F; }, i, j);
            s.Fv = dt([](const BaseForms& q) { return q.F; }, i, j);
            s.Gu = dx([](const BaseForms& q) { return q.G; }, i, j);
            s.Gv = dt([](const BaseForms& q) { return q.G; }, i, j);
            d.k = codazzi_coefficients(christoffel_symbols(s));
        }
    f.pattern = detect_pattern(f);
    return f;
}

}  // namespace

BaseSampler sampler(std::shared_ptr<const FormSource> src, bool swap_axes) {
    if (!src) throw PreconditionError("sampler needs a form source");
    return [src, swap_axes](double x, double t) {
        const FormSample s = swap_axes ? src->sample({t, x}) : src->sample({x, t});
        BaseForms b;
        if (swap_axes) {
            b.E = s.G, b.F = s.F, b.G = s.E, b.L = s.N, b.M = s.M, b.N = s.L;
        } else {
            b.E = s.E, b.F = s.F, b.G = s.G, b.L = s.L, b.M = s.M, b.N = s.N;
        }
        return b;
    };
}

SystemField assemble(const BaseSampler& base, const SystemGrid& grid, const std::string& source) {
    check_grid(grid);
    std::vector<BaseForms> forms(static_cast<std::size_t>(grid.nx) * grid.nt);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.nt; ++j) forms[static_cast<std::size_t>(i) * grid.nt + j] = base(grid.x_at(i), grid.t_at(j));
    return from_forms(forms, grid, source);
}

SystemField assemble(const Chart& chart) {
    SystemGrid g;
    g.x_lo = chart.x_lo, g.x_hi = chart.x_hi, g.t_lo = chart.t_lo, g.t_hi = chart.t_hi;
    g.nx = chart.nx, g.nt = chart.nt, g.periodic_x = chart.periodic_x;
    check_grid(g);
    std::vector<BaseForms> forms(static_cast<std::size_t>(g.nx) * g.nt);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nt; ++j) {
            const ChartForms cf = chart_forms(chart, i, j);
            BaseForms& b = forms[static_cast<std::size_t>(i) * g.nt + j];
            b.E = cf.E, b.F = cf.F, b.G = cf.G, b.L = cf.L, b.M = cf.M, b.N = cf.N;
        }
    SystemField f = from_forms(forms, g, "chart:" + (chart.source ? chart.source->describe() : std::string("detached")));
    if (chart.kind == ChartKind::AsymptoticAdapted) f.pattern = chart.certificate.pattern;
    return f;
}

bool SystemField::contains(double x, double t) const {
    const double tol = 1e-12 * (1.0 + std::abs(grid.t_hi - grid.t_lo));
    if (t < grid.t_lo - tol || t > grid.t_hi + tol) return false;
    if (grid.periodic_x) return std::isfinite(x);
    const double xtol = 1e-12 * (1.0 + std::abs(grid.x_hi - grid.x_lo));
    return x >= grid.x_lo - xtol && x <= grid.x_hi + xtol;
}

NodeData SystemField::at(double x, double t) const {
    if (!contains(x, t)) throw DomainError("point (" + std::to_string(x) + ", " + std::to_string(t) + ") off the system grid");
    const SystemGrid& g = grid;
    constexpr int m = 6;
    double wx[m], wt[m];
    const double xi = (x - g.x_lo) / g.hx();
    const double ti = std::clamp((t - g.t_lo) / g.ht(), 0.0, static_cast<double>(g.nt - 1));
    int sx;
    if (g.periodic_x) {
        sx = static_cast<int>(std::floor(xi)) - (m / 2 - 1);
    } else {
        sx = detail::window_start(std::clamp(xi, 0.0, static_cast<double>(g.nx - 1)), m, g.nx);
    }
    const int st = detail::window_start(ti, m, g.nt);
    detail::lagrange_weights(xi - sx, m, wx);
    detail::lagrange_weights(ti - st, m, wt);
    NodeData out{};
    for (auto p : kNodeFields) out.*p = 0.0;
    for (auto p : kCoeffFields) out.k.*p = 0.0;
    for (int a = 0; a < m; ++a) {
        const int i = g.periodic_x ? wrap(sx + a, g.nx) : sx + a;
        for (int b = 0; b < m; ++b) {
            const NodeData& d = node(i, st + b);
            const double w = wx[a] * wt[b];
            for (auto p : kNodeFields) out.*p += w * (d.*p);
            for (auto p : kCoeffFields) out.k.*p += w * (d.k.*p);
        }
    }
    return out;
}

SystemField SystemField::negated() const {
    SystemField f = *this;
    f.sign = -sign;
    return f;
}

double reconstruct_u(double L, double M, double N, double v, double w, double threshold) {
    const double nw = N + w;
    if (!(std::abs(nw) > threshold))
        throw DomainError("N + w = " + std::to_string(nw) + " below the threshold " + std::to_string(threshold));
    return (-L * w + 2.0 * M * v + v * v) / nw;
}

double gauss_defect(double L, double M, double N, double u, double v, double w) {
    return (L + u) * (N + w) - (M + v) * (M + v) - (L * N - M * M);
}

SystemMatrices system_matrices(const NodeData& d, const StateJet& s, int sign, bool quasilinear, double threshold) {
    const StateJet z = quasilinear ? s : StateJet{};
    const double nw = d.N + z.w;
    if (!(std::abs(nw) > threshold))
        throw DomainError("N + w = " + std::to_string(nw) + " below the threshold " + std::to_string(threshold));
    const double nwt = d.Nt + z.wt;
    const CodazziCoefficients& k = d.k;
    const double m_nw_t = d.Mt / nw - d.M * nwt / (nw * nw);
    const double l_nw_t = d.Lt / nw - d.L * nwt / (nw * nw);
    const double B11 = k.beta + k.alpha * z.v / nw + 2.0 * k.alpha * d.M / nw;
    const double B12 = k.gamma - k.alpha * d.L / nw;
    const double B21 = k.b + 2.0 * z.vt / nw - nwt * z.v / (nw * nw) + 2.0 * m_nw_t + 2.0 * k.a * d.M / nw +
                       k.a * z.v / nw;
    const double B22 = k.c - l_nw_t - k.a * d.L / nw;
    SystemMatrices out;
    const double sg = sign;
    out.A1 = {{{0.0, -sg * d.N}, {-sg * d.N, sg * 2.0 * d.M}}};
    out.A2 = {{{sg * d.N, 0.0}, {0.0, -sg * d.L}}};
    out.B = {{{sg * nw * B11, sg * (nw * B12 + z.vt - z.wx)},
              {sg * (-2.0 * d.M * B11 + nw * B21), sg * (-2.0 * d.M * B12 + nw * B22 - z.vx)}}};
    return out;
}

CharacteristicSlopes characteristic_slopes(const NodeData& d) {
    CharacteristicSlopes s;
    // N k^2 + 2 M k + L = 0
    const double disc = d.M * d.M - d.L * d.N;
    if (!(disc > 0.0) || d.N == 0.0) return s;
    const double r = std::sqrt(disc);
    // Cancellation-free pair: k1 k2 = L / N.
    const double q = -(d.M + std::copysign(r, d.M));
    double k1, k2;
    if (q == 0.0) {
        k1 = r / d.N;
        k2 = -r / d.N;
    } else {
        k1 = q / d.N;
        k2 = d.L / q;
    }
    s.minus = std::min(k1, k2);
    s.plus = std::max(k1, k2);
    s.real = true;
    return s;
}

double CodazziState::max_abs_U() const {
    double m = 0.0;
    for (const StateNode& n : nodes) m = std::max({m, std::abs(n.v), std::abs(n.w)});
    return m;
}

void write_state_csv(const CodazziState& s, std::ostream& out) {
    out << "x,t,v,w,u\n";
    out.precision(17);
    for (const StateNode& n : s.nodes) out << n.x << ',' << n.t << ',' << n.v << ',' << n.w << ',' << n.u << '\n';
}

}  // namespace tightkit
