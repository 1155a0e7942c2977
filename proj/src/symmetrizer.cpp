#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "stencil.hpp"
#include "tightkit/codazzi.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

namespace {

std::size_t at(const SystemGrid& g, int i, int j) { return static_cast<std::size_t>(i) * g.nt + j; }

std::array<double, 2> sym_eig(double a, double b, double d) {
    const double m = 0.5 * (a + d);
    const double r = std::hypot(0.5 * (a - d), b);
    return {m - r, m + r};
}

double grid_interp(const SystemGrid& g, const std::vector<double>& v, double x, double t) {
    constexpr int m = 6;
    double wx[m], wt[m];
    const double xi = (x - g.x_lo) / g.hx();
    const double ti = std::clamp((t - g.t_lo) / g.ht(), 0.0, static_cast<double>(g.nt - 1));
    const int sx = g.periodic_x ? static_cast<int>(std::floor(xi)) - (m / 2 - 1)
                                : detail::window_start(std::clamp(xi, 0.0, static_cast<double>(g.nx - 1)), m, g.nx);
    const int st = detail::window_start(ti, m, g.nt);
    detail::lagrange_weights(xi - sx, m, wx);
    detail::lagrange_weights(ti - st, m, wt);
    double s = 0.0;
    for (int a = 0; a < m; ++a) {
        const int i = g.periodic_x ? ((sx + a) % g.nx + g.nx) % g.nx : sx + a;
        for (int b = 0; b < m; ++b) s += wx[a] * wt[b] * v[at(g, i, st + b)];
    }
    return s;
}

// t-derivative of a grid array, row by row.
std::vector<double> d_t(const SystemGrid& g, const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nt; ++j)
            out[at(g, i, j)] = detail::d1_4([&](int k) { return v[at(g, i, k)]; }, j, g.nt, g.ht());
    return out;
}

// Zero-mean periodic antiderivative of samples on a uniform periodic grid.
std::vector<double> periodic_antiderivative(const std::vector<double>& g, double period) {
    const int n = static_cast<int>(g.size());
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= n;
    std::vector<std::complex<double>> c(n);
    for (int k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (int i = 0; i < n; ++i) s += (g[i] - mean) * std::polar(1.0, -kTwoPi * k * i / n);
        c[k] = s / static_cast<double>(n);
    }
    std::vector<double> out(n, 0.0);
    for (int k = 1; k < n; ++k) {
        const int kk = k <= n / 2 ? k : k - n;
        if (2 * k == n) continue;
        const std::complex<double> ck = c[k] / std::complex<double>(0.0, kTwoPi * kk / period);
        for (int i = 0; i < n; ++i) out[i] += (ck * std::polar(1.0, kTwoPi * k * i / n)).real();
    }
    return out;
}

Mat2 calB_from(const NodeData& d, const SystemMatrices& sm, int s, double lx, double lt) {
    const double sg = s;
    Mat2 A1x = {{{0.0, -sg * d.Nx}, {-sg * d.Nx, sg * 2.0 * d.Mx}}};
    Mat2 A2t = {{{sg * d.Nt, 0.0}, {0.0, -sg * d.Lt}}};
    Mat2 c{};
    for (int r = 0; r < 2; ++r)
        for (int q = 0; q < 2; ++q)
            c[r][q] = sm.B[r][q] + lx * sm.A1[r][q] + lt * sm.A2[r][q] - 0.5 * A1x[r][q] - 0.5 * A2t[r][q];
    const double off = 0.5 * (c[0][1] + c[1][0]);
    return {{{c[0][0], off}, {off, c[1][1]}}};
}

int certified_rows(const SystemGrid& g, double delta) {
    if (delta < 0.0) return g.nt;
    const int rows = static_cast<int>(std::floor(delta / g.ht() + 1e-9)) + 1;
    return std::clamp(rows, 1, g.nt);
}

double scale_of(const SystemField& f) {
    double s = 0.0;
    for (const NodeData& d : f.nodes) s = std::max({s, std::abs(d.L), std::abs(d.M), std::abs(d.N)});
    return s;
}

int n_sign(const SystemField& f) {
    int s = 0;
    for (const NodeData& d : f.nodes) {
        const int q = d.N > 0 ? 1 : (d.N < 0 ? -1 : 0);
        if (q == 0 || (s != 0 && q != s)) throw PreconditionError("N changes sign or vanishes on the grid");
        s = q;
    }
    return s;
}

void require_boundary_chart(const SystemField& f, int s) {
    const double scale = scale_of(f);
    for (int i = 0; i < f.grid.nx; ++i)
        for (int j = 0; j < f.grid.nt; ++j) {
            const NodeData& d = f.node(i, j);
            if (std::abs(d.M) > 1e-6 * scale)
                throw PreconditionError("boundary symmetrizer needs M = 0; |M| = " + std::to_string(std::abs(d.M)) +
                                        " at x = " + std::to_string(f.grid.x_at(i)) + ", t = " +
                                        std::to_string(f.grid.t_at(j)));
            if (s * d.L > 1e-9 * scale)
                throw PreconditionError("boundary symmetrizer needs L of the sign opposite to N");
        }
}

int require_closed_chart(const SystemField& f) {
    const SystemGrid& g = f.grid;
    if (!g.periodic_x) throw PreconditionError("closed-curve symmetrizer needs an x-periodic chart");
    const double scale = scale_of(f);
    int m_sign = 0;
    for (int i = 0; i < g.nx; ++i) {
        const NodeData& d = f.node(i, 0);
        if (std::abs(d.L) > 1e-6 * scale) throw PreconditionError("L does not vanish on the closed curve t = t_lo");
        const int q = d.M > 0 ? 1 : (d.M < 0 ? -1 : 0);
        if (q == 0 || (m_sign != 0 && q != m_sign)) throw PreconditionError("M vanishes or changes sign on the curve");
        m_sign = q;
    }
    return m_sign;
}

struct SearchState {
    PositivityReport best;
    bool have = false;
    int tried = 0;
    void note(const PositivityReport& r) {
        ++tried;
        if (!have || r.min_eigenvalue > best.min_eigenvalue) best = r, have = true;
    }
};

[[noreturn]] void search_failed(const std::string& what, const SearchState& st) {
    std::ostringstream os;
    os << what << " exhausted " << st.tried << " parameter sets without positivity; best min eigenvalue "
       << st.best.min_eigenvalue << " at x = " << st.best.at_x << ", t = " << st.best.at_t;
    throw SymmetrizerSearchError(os.str(), st.best);
}

}  // namespace

std::string to_string(SymmetrizerKind k) {
    switch (k) {
        case SymmetrizerKind::Identity: return "identity";
        case SymmetrizerKind::Boundary: return "boundary";
        case SymmetrizerKind::ClosedCurve: return "closed-curve";
        case SymmetrizerKind::ClosedCurveF: return "closed-curve-f";
    }
    return "unknown";
}

std::array<double, 3> Symmetrizer::weight(const SystemField& field, double x, double t) const {
    if (!field.contains(x, t)) throw DomainError("symmetrizer weight off the grid");
    const double tr = t - field.grid.t_lo;
    return {grid_interp(field.grid, lambda, x, t) + lambda0 * tr, grid_interp(field.grid, lambda_x, x, t),
            grid_interp(field.grid, lambda_t, x, t) + lambda0};
}

Symmetrizer Symmetrizer::shifted(double c) const {
    Symmetrizer s = *this;
    for (double& v : s.lambda) v += c;
    return s;
}

Mat2 energy_matrix(const SystemField& field, const Symmetrizer& sym, double x, double t, const StateJet& s,
                   bool quasilinear) {
    const NodeData d = field.at(x, t);
    const SystemMatrices sm = system_matrices(d, s, sym.system_sign, quasilinear, field.threshold);
    const auto w = sym.weight(field, x, t);
    return calB_from(d, sm, sym.system_sign, w[1], w[2]);
}

double boundary_flux(const NodeData& d, int sign, std::array<double, 2> nu, std::array<double, 2> ub) {
    const SystemMatrices sm = system_matrices(d, {}, sign, false, 0.0);
    double q = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) q += ub[r] * (sm.A1[r][c] * nu[0] + sm.A2[r][c] * nu[1]) * ub[c];
    return 0.5 * q;
}

PositivityReport positivity_certificate(const SystemField& field, const Symmetrizer& sym, double delta) {
    const SystemGrid& g = field.grid;
    const int rows = certified_rows(g, delta);
    PositivityReport r;
    r.min_eigenvalue = std::numeric_limits<double>::infinity();
    r.max_eigenvalue = -std::numeric_limits<double>::infinity();
    r.min_flux_eigenvalue = std::numeric_limits<double>::infinity();
    r.flux_ok = true;
    const int s = sym.system_sign;
    auto flux_check = [&](const Mat2& F) {
        const auto e = sym_eig(F[0][0], F[0][1], F[1][1]);
        const double scale = std::abs(F[0][0]) + std::abs(F[1][1]) + std::abs(F[0][1]);
        r.min_flux_eigenvalue = std::min(r.min_flux_eigenvalue, e[0]);
        if (e[0] < -1e-9 * scale) r.flux_ok = false;
    };
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < rows; ++j) {
            const NodeData& d = field.node(i, j);
            const SystemMatrices sm = system_matrices(d, {}, s, false, field.threshold);
            const std::size_t k = at(g, i, j);
            const Mat2 b = calB_from(d, sm, s, sym.lambda_x[k], sym.lambda_t[k] + sym.lambda0);
            const auto e = sym_eig(b[0][0], b[0][1], b[1][1]);
            ++r.nodes;
            if (e[0] < r.min_eigenvalue) {
                r.min_eigenvalue = e[0];
                r.at_x = g.x_at(i);
                r.at_t = g.t_at(j);
            }
            r.max_eigenvalue = std::max(r.max_eigenvalue, e[1]);
            if (sym.kind == SymmetrizerKind::Boundary) {
                const CharacteristicSlopes cs = characteristic_slopes(d);
                if (!cs.real) continue;
                for (double kappa : {cs.minus, cs.plus}) {
                    const double nn = std::hypot(kappa, 1.0);
                    Mat2 F{};
                    for (int p = 0; p < 2; ++p)
                        for (int q = 0; q < 2; ++q) F[p][q] = (-kappa * sm.A1[p][q] + sm.A2[p][q]) / nn;
                    flux_check(F);
                }
            } else if ((sym.kind == SymmetrizerKind::ClosedCurve || sym.kind == SymmetrizerKind::ClosedCurveF) &&
                       j == rows - 1) {
                flux_check(sm.A2);
            }
        }
    if (!std::isfinite(r.min_flux_eigenvalue)) r.min_flux_eigenvalue = 0.0;
    r.passed = r.min_eigenvalue > 0.0 && r.flux_ok;
    return r;
}

Symmetrizer identity_symmetrizer(const SystemField& field) {
    Symmetrizer s;
    s.kind = SymmetrizerKind::Identity;
    s.system_sign = field.sign;
    s.lambda.assign(field.nodes.size(), 0.0);
    s.lambda_x = s.lambda;
    s.lambda_t = s.lambda;
    s.delta = field.grid.t_hi - field.grid.t_lo;
    s.flux_rows = field.grid.nt;
    s.report = positivity_certificate(field, s);
    return s;
}

Symmetrizer build_symmetrizer(const SystemField& field, SymmetrizerKind kind, const SymmetrizerControls& ctl) {
    if (kind == SymmetrizerKind::Identity) return identity_symmetrizer(field);
    const SystemGrid& g = field.grid;
    const std::size_t n = field.nodes.size();
    const double height = g.t_hi - g.t_lo;
    const int s = n_sign(field);

    Symmetrizer base;
    base.kind = kind;
    base.system_sign = s;
    base.lambda.assign(n, 0.0);
    base.lambda_x.assign(n, 0.0);
    base.lambda_t.assign(n, 0.0);

    // Halve delta until at least min_delta_rows rows remain.
    std::vector<double> deltas;
    for (double d = height; certified_rows(g, d) >= std::max(2, ctl.min_delta_rows); d *= 0.5) deltas.push_back(d);
    if (deltas.empty()) deltas.push_back(height);

    SearchState st;
    auto try_one = [&](Symmetrizer& cand, double delta) {
        cand.delta = delta;
        cand.flux_rows = certified_rows(g, delta);
        cand.report = positivity_certificate(field, cand, delta);
        st.note(cand.report);
        cand.searched = st.tried;
        return cand.report.passed;
    };

    if (kind == SymmetrizerKind::Boundary) {
        require_boundary_chart(field, s);
        int i0 = 0;
        if (g.x_lo <= 0.0 && g.x_hi >= 0.0) i0 = static_cast<int>(std::lround(-g.x_lo / g.hx()));
        std::vector<double> I(n, 0.0);
        for (int j = 0; j < g.nt; ++j) {
            for (int i = i0 + 1; i < g.nx; ++i)
                I[at(g, i, j)] = I[at(g, i - 1, j)] + 0.5 * g.hx() * (field.node(i - 1, j).k.b + field.node(i, j).k.b);
            for (int i = i0 - 1; i >= 0; --i)
                I[at(g, i, j)] = I[at(g, i + 1, j)] - 0.5 * g.hx() * (field.node(i + 1, j).k.b + field.node(i, j).k.b);
        }
        const std::vector<double> It = d_t(g, I);
        std::vector<double> lam(n), lx(n), lt(n);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.nt; ++j) {
                const NodeData& d = field.node(i, j);
                const std::size_t k = at(g, i, j);
                if (!(std::abs(d.N) > field.threshold))
                    throw DomainError("log N undefined: N = " + std::to_string(d.N) + " at t = " + std::to_string(g.t_at(j)));
                lam[k] = std::log(std::abs(d.N)) + 0.5 * I[k];
                lx[k] = d.Nx / d.N + 0.5 * d.k.b;
                lt[k] = d.Nt / d.N + 0.5 * It[k];
            }
        for (double delta : deltas) {
            double lb = ctl.lambda_bar_seed;
            for (int it = 0; it <= ctl.max_doublings; ++it, lb *= 2.0) {
                Symmetrizer cand = base;
                cand.lambda_bar = lb;
                for (int i = 0; i < g.nx; ++i)
                    for (int j = 0; j < g.nt; ++j) {
                        const std::size_t k = at(g, i, j);
                        cand.lambda[k] = lam[k] + lb * (g.t_at(j) - g.t_lo);
                        cand.lambda_x[k] = lx[k];
                        cand.lambda_t[k] = lt[k] + lb;
                    }
                if (try_one(cand, delta)) return cand;
            }
        }
        search_failed("lambda-bar doubling", st);
    }

    const int m_sign = require_closed_chart(field);
    const int m_eff = s * m_sign;
    const double period = g.x_hi - g.x_lo;
    std::vector<double> l1(n), l1x(n);
    for (std::size_t k = 0; k < n; ++k) {
        l1[k] = 0.25 * std::log(field.nodes[k].detI);
        l1x[k] = 0.25 * field.nodes[k].detI_x / field.nodes[k].detI;
    }
    const std::vector<double> l1t = d_t(g, l1);

    auto with_lambda0 = [&](Symmetrizer cand, double delta) -> std::optional<Symmetrizer> {
        double l0 = ctl.lambda0_seed;
        for (int it = 0; it <= ctl.max_doublings; ++it, l0 *= 2.0) {
            cand.lambda0 = l0;
            if (try_one(cand, delta)) return cand;
        }
        return std::nullopt;
    };

    if (kind == SymmetrizerKind::ClosedCurve) {
        // Bump at the most negative effective L_t on the curve.
        int i_star = 0;
        for (int i = 1; i < g.nx; ++i)
            if (s * field.node(i, 0).Lt < s * field.node(i_star, 0).Lt) i_star = i;
        const double xc = g.x_at(i_star);
        for (double delta : deltas)
            for (double conc : ctl.concentrations) {
                std::vector<double> rho(g.nx);
                double mass = 0.0;
                for (int i = 0; i < g.nx; ++i) {
                    rho[i] = std::exp(conc * (std::cos(kTwoPi * (g.x_at(i) - xc) / period) - 1.0));
                    mass += rho[i] * g.hx();
                }
                std::vector<double> d2(g.nx);
                for (int i = 0; i < g.nx; ++i) d2[i] = m_eff * (1.0 - period * rho[i] / mass);
                std::vector<double> l2 = periodic_antiderivative(d2, period);
                const double l2_0 = l2[0];
                for (double& v : l2) v -= l2_0;
                for (double eps : ctl.epsilons) {
                    Symmetrizer cand = base;
                    cand.epsilon = eps;
                    cand.bump_center = xc;
                    cand.bump_concentration = conc;
                    cand.lambda2.assign(n, 0.0);
                    for (int i = 0; i < g.nx; ++i)
                        for (int j = 0; j < g.nt; ++j) {
                            const std::size_t k = at(g, i, j);
                            cand.lambda2[k] = l2[i];
                            cand.lambda[k] = l1[k] + eps * l2[i];
                            cand.lambda_x[k] = l1x[k] + eps * d2[i];
                            cand.lambda_t[k] = l1t[k];
                        }
                    if (auto ok = with_lambda0(std::move(cand), delta)) return *ok;
                }
            }
        search_failed("closed-curve grid search", st);
    }

    // f kind: f per row with int (L_t / M + f) dx = 0.
    Symmetrizer fb = base;
    fb.f.assign(g.nt, 0.0);
    fb.lambda2.assign(n, 0.0);
    std::vector<double> d2(n);
    int admissible_rows = 0;
    for (int j = 0; j < g.nt; ++j) {
        double mean = 0.0;
        int ms = 0;
        bool uniform = true;
        for (int i = 0; i < g.nx; ++i) {
            const NodeData& d = field.node(i, j);
            mean += d.Lt / d.M;
            const int q = d.M > 0 ? 1 : -1;
            if (ms != 0 && q != ms) uniform = false;
            ms = q;
        }
        mean /= g.nx;
        fb.f[j] = -mean;
        if (admissible_rows == j && uniform && s * ms * fb.f[j] > 0.0) ++admissible_rows;
        std::vector<double> row(g.nx);
        for (int i = 0; i < g.nx; ++i) row[i] = 0.75 * (field.node(i, j).Lt / field.node(i, j).M + fb.f[j]);
        std::vector<double> l2 = periodic_antiderivative(row, period);
        const double l2_0 = l2[0];
        for (int i = 0; i < g.nx; ++i) {
            fb.lambda2[at(g, i, j)] = l2[i] - l2_0;
            d2[at(g, i, j)] = row[i];
        }
    }
    if (admissible_rows == 0) {
        std::ostringstream os;
        os << "f = " << fb.f[0] << " is not admissible: M f must be positive on the curve";
        throw PreconditionError(os.str());
    }
    const std::vector<double> l2t = d_t(g, fb.lambda2);
    for (std::size_t k = 0; k < n; ++k) {
        fb.lambda[k] = l1[k] + fb.lambda2[k];
        fb.lambda_x[k] = l1x[k] + d2[k];
        fb.lambda_t[k] = l1t[k] + l2t[k];
    }
    for (double delta : deltas) {
        if (certified_rows(g, delta) > admissible_rows) continue;
        if (auto ok = with_lambda0(fb, delta)) return *ok;
    }
    search_failed("lambda0 doubling", st);
}

}  // namespace tightkit
