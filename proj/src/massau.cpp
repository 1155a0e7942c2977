#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "tightkit/codazzi.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

namespace {

struct OffGrid {};
struct Collar {};

struct Work {
    StateNode n;
    StateJet jet;
};

struct Slopes {
    NodeData d;
    double plus = 0.0, minus = 0.0;
};

Slopes slopes_at(const SystemField& f, double x, double t, double floor) {
    if (!f.contains(x, t)) throw OffGrid{};
    Slopes s;
    s.d = f.at(x, t);
    const CharacteristicSlopes cs = characteristic_slopes(s.d);
    if (!cs.real || std::min(std::abs(cs.minus), std::abs(cs.plus)) < floor) throw Collar{};
    if (!(cs.minus < 0.0 && cs.plus > 0.0)) throw Collar{};
    s.plus = cs.plus;
    s.minus = cs.minus;
    return s;
}

std::array<double, 2> mul(const Mat2& B, double v, double w) { return {B[0][0] * v + B[0][1] * w, B[1][0] * v + B[1][1] * w}; }

// Gradient of the plane through three (x, t, value) points.
std::array<double, 2> plane_grad(const StateNode& a, const StateNode& b, const StateNode& c, double fa, double fb,
                                 double fc) {
    const double x1 = b.x - a.x, t1 = b.t - a.t, x2 = c.x - a.x, t2 = c.t - a.t;
    const double det = x1 * t2 - x2 * t1;
    if (det == 0.0) return {0.0, 0.0};
    const double d1 = fb - fa, d2 = fc - fa;
    return {(d1 * t2 - d2 * t1) / det, (x1 * d2 - x2 * d1) / det};
}

StateJet triangle_jet(const StateNode& a, const StateNode& b, const StateNode& c) {
    const auto gv = plane_grad(a, b, c, a.v, b.v, c.v);
    const auto gw = plane_grad(a, b, c, a.w, b.w, c.w);
    StateJet j;
    j.vx = gv[0], j.vt = gv[1], j.wx = gw[0], j.wt = gw[1];
    return j;
}

class Stepper {
public:
    Stepper(const SystemField& f, const SolverControls& c) : f_(f), c_(c) {}

    double max_defect = 0.0;

    void finish(Work& p) {
        const NodeData d = f_.at(p.n.x, p.n.t);
        if (!c_.quasilinear) {
            // u only where N + w clears the threshold.
            if (!(std::abs(d.N + p.n.w) > f_.threshold)) {
                p.n.u = std::numeric_limits<double>::quiet_NaN();
                return;
            }
        } else if (!(std::abs(p.n.w) < 0.5 * std::abs(d.N))) {
            throw DomainError("amplitude guard |w| < N/2 violated at x = " + std::to_string(p.n.x) +
                              ", t = " + std::to_string(p.n.t));
        }
        p.n.u = reconstruct_u(d.L, d.M, d.N, p.n.v, p.n.w, f_.threshold);
        max_defect = std::max(max_defect, std::abs(gauss_defect(d.L, d.M, d.N, p.n.u, p.n.v, p.n.w)));
    }

    // Node on the + characteristic from A and the - characteristic from C.
    Work step(const Work& A, const Work& C) const {
        const Slopes sa = slopes_at(f_, A.n.x, A.n.t, c_.speed_floor);
        const Slopes sc = slopes_at(f_, C.n.x, C.n.t, c_.speed_floor);
        Work P;
        auto place = [&](double kp, double km) {
            P.n.x = (C.n.t - A.n.t + kp * A.n.x - km * C.n.x) / (kp - km);
            P.n.t = A.n.t + kp * (P.n.x - A.n.x);
        };
        place(sa.plus, sc.minus);
        P.n.v = 0.5 * (A.n.v + C.n.v);
        P.n.w = 0.5 * (A.n.w + C.n.w);
        P.jet = A.jet;
        const StateJet ja = with_state(A);
        const Mat2 BA = system_matrices(sa.d, ja, 1, c_.quasilinear, f_.threshold).B;
        const StateJet jc = with_state(C);
        const Mat2 BC = system_matrices(sc.d, jc, 1, c_.quasilinear, f_.threshold).B;
        const auto ba = mul(BA, A.n.v, A.n.w);
        const auto bc = mul(BC, C.n.v, C.n.w);
        for (int sweep = 0; sweep <= c_.corrector_sweeps; ++sweep) {
            const Slopes sp = slopes_at(f_, P.n.x, P.n.t, c_.speed_floor);
            const double kp = 0.5 * (sa.plus + sp.plus), km = 0.5 * (sc.minus + sp.minus);
            place(kp, km);
            const Slopes sq = slopes_at(f_, P.n.x, P.n.t, c_.speed_floor);
            StateJet jp = P.jet;
            jp.v = P.n.v, jp.w = P.n.w;
            const Mat2 BP = system_matrices(sq.d, jp, 1, c_.quasilinear, f_.threshold).B;
            // c . dU/dx + l . (B U) = 0 along dt/dx = kappa, trapezoid in x.
            auto row = [&](const NodeData& d0, double k0, const NodeData& d1, double k1, const Work& Q,
                           const std::array<double, 2>& bq, std::array<double, 3>& out) {
                const double h = P.n.x - Q.n.x;
                const double c1 = 0.5 * (d0.N + d1.N);
                const double c2 = -0.5 * ((d0.N * k0 + 2.0 * d0.M) + (d1.N * k1 + 2.0 * d1.M));
                const double lp1 = k1 * BP[0][0] - BP[1][0];
                const double lp2 = k1 * BP[0][1] - BP[1][1];
                const double sq_ = k0 * bq[0] - bq[1];
                out = {c1 + 0.5 * h * lp1, c2 + 0.5 * h * lp2, c1 * Q.n.v + c2 * Q.n.w - 0.5 * h * sq_};
            };
            std::array<double, 3> r1{}, r2{};
            row(sa.d, sa.plus, sq.d, sq.plus, A, ba, r1);
            row(sc.d, sc.minus, sq.d, sq.minus, C, bc, r2);
            const double det = r1[0] * r2[1] - r1[1] * r2[0];
            if (det == 0.0) throw Collar{};
            P.n.v = (r1[2] * r2[1] - r1[1] * r2[2]) / det;
            P.n.w = (r1[0] * r2[2] - r1[2] * r2[0]) / det;
            P.jet = triangle_jet(A.n, C.n, P.n);
        }
        return P;
    }

    // Jet at a data node: tangential derivative from the data, the rest from the system.
    StateJet data_jet(const Work& q, double vx, double wx) const {
        StateJet j;
        j.vx = vx, j.wx = wx;
        const NodeData d = f_.at(q.n.x, q.n.t);
        if (std::abs(d.L) > f_.threshold && std::abs(d.N) > f_.threshold) {
            const SystemMatrices m = system_matrices(d, {}, 1, false, f_.threshold);
            const auto bu = mul(m.B, q.n.v, q.n.w);
            const double r1 = -(m.A1[0][0] * vx + m.A1[0][1] * wx + bu[0]);
            const double r2 = -(m.A1[1][0] * vx + m.A1[1][1] * wx + bu[1]);
            j.vt = r1 / m.A2[0][0];
            j.wt = r2 / m.A2[1][1];
        }
        return j;
    }

private:
    static StateJet with_state(const Work& q) {
        StateJet j = q.jet;
        j.v = q.n.v, j.w = q.n.w;
        return j;
    }

    const SystemField& f_;
    const SolverControls& c_;
};

void summarize(CodazziState& s, double defect) {
    s.t_min = s.t_max = s.nodes.empty() ? 0.0 : s.nodes[0].t;
    for (const StateNode& n : s.nodes) {
        s.t_min = std::min(s.t_min, n.t);
        s.t_max = std::max(s.t_max, n.t);
    }
    s.max_gauss_defect = defect;
}

}  // namespace

CodazziState solve(const SystemField& field, const CauchyData& data, const SolverControls& ctl) {
    if (data.n < 2) throw PreconditionError("Cauchy data needs at least 2 nodes");
    if (!(data.x_hi > data.x_lo)) throw PreconditionError("empty Cauchy interval");
    if (data.periodic && !field.grid.periodic_x) throw PreconditionError("periodic data on a non-periodic field");
    Stepper st(field, ctl);
    const bool per = data.periodic;
    const double period = per ? field.grid.x_hi - field.grid.x_lo : 0.0;
    const int n = data.n;
    const double hx = per ? period / n : (data.x_hi - data.x_lo) / (n - 1);
    const double x0 = per ? field.grid.x_lo : data.x_lo;

    std::vector<std::vector<Work>> levels(1);
    for (int i = 0; i < n; ++i) {
        Work q;
        q.n.x = x0 + i * hx;
        q.n.t = data.t0;
        if (data.U) {
            const auto u = data.U(q.n.x);
            q.n.v = u[0], q.n.w = u[1];
        }
        levels[0].push_back(q);
    }
    // Tangential derivatives of the data by centred differences.
    for (int i = 0; i < n; ++i) {
        auto val = [&](int k, int c) -> double {
            if (per) {
                const int kk = ((k % n) + n) % n;
                return c == 0 ? levels[0][kk].n.v : levels[0][kk].n.w;
            }
            k = std::clamp(k, 0, n - 1);
            return c == 0 ? levels[0][k].n.v : levels[0][k].n.w;
        };
        const int lo = per ? i - 1 : std::max(i - 1, 0), hi = per ? i + 1 : std::min(i + 1, n - 1);
        const double span = (hi - lo) * hx;
        Work& q = levels[0][i];
        if (!field.contains(q.n.x, q.n.t)) throw DomainError("Cauchy data off the system grid");
        q.jet = st.data_jet(q, (val(hi, 0) - val(lo, 0)) / span, (val(hi, 1) - val(lo, 1)) / span);
        st.finish(q);
    }
    if (per) {
        Work seam = levels[0][0];
        seam.n.x += period;
        levels[0].push_back(seam);
    }

    CodazziState s;
    s.periodic = per;
    s.period = period;
    s.quasilinear = ctl.quasilinear;
    const int max_levels = data.max_levels < 0 ? (per ? 1 << 20 : n - 1) : data.max_levels;
    for (int k = 1; k <= max_levels; ++k) {
        const std::vector<Work>& prev = levels.back();
        const int cols = per ? n : static_cast<int>(prev.size()) - 1;
        if (cols < 1) break;
        std::vector<Work> next;
        next.reserve(cols + 1);
        try {
            for (int i = 0; i < cols; ++i) {
                Work p = st.step(prev[i], prev[i + 1]);
                st.finish(p);
                next.push_back(p);
            }
        } catch (const OffGrid&) {
            break;
        } catch (const Collar&) {
            s.stopped_at_collar = true;
            break;
        }
        if (per) {
            Work seam = next[0];
            seam.n.x += period;
            next.push_back(seam);
        }
        levels.push_back(std::move(next));
    }

    std::vector<std::vector<int>> id(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k)
        for (const Work& q : levels[k]) {
            id[k].push_back(static_cast<int>(s.nodes.size()));
            s.nodes.push_back(q.n);
        }
    const int K = static_cast<int>(levels.size()) - 1;
    for (int k = 0; k < K; ++k) {
        const int a = static_cast<int>(id[k].size()), b = static_cast<int>(id[k + 1].size());
        for (int i = 0; i + 1 < a && i < b; ++i) s.triangles.push_back({id[k][i], id[k][i + 1], id[k + 1][i]});
        for (int i = 0; i + 1 < b; ++i) s.triangles.push_back({id[k][i + 1], id[k + 1][i + 1], id[k + 1][i]});
    }
    s.levels = K;
    std::vector<int> data_piece = id[0], right, top, left;
    for (int k = 0; k <= K; ++k) right.push_back(id[k].back());
    if (id[K].size() > 1) top.assign(id[K].rbegin(), id[K].rend());
    for (int k = K; k >= 0; --k) left.push_back(id[k].front());
    s.boundary = {data_piece, right};
    s.boundary_names = {"data", per ? "seam-right" : "right-characteristic"};
    if (!top.empty()) {
        s.boundary.push_back(top);
        s.boundary_names.push_back("top");
    }
    s.boundary.push_back(left);
    s.boundary_names.push_back(per ? "seam-left" : "left-characteristic");
    summarize(s, st.max_defect);
    return s;
}

CodazziState solve(const SystemField& field, const GoursatData& data, const SolverControls& ctl) {
    if (data.n_plus < 1 || data.n_minus < 1) throw PreconditionError("Goursat data needs at least one step per curve");
    if (!(data.length_plus > 0.0) || !(data.length_minus > 0.0)) throw PreconditionError("empty Goursat curve");
    Stepper st(field, ctl);
    const int np = data.n_plus, nm = data.n_minus;
    std::vector<std::vector<Work>> P(np + 1, std::vector<Work>(nm + 1));

    // Heun along dt/dx = kappa with x steps of h.
    auto trace = [&](bool plus, double h, int steps, auto& fn, auto put) {
        double x = data.corner.u, t = data.corner.v;
        for (int k = 0; k <= steps; ++k) {
            Work q;
            q.n.x = x, q.n.t = t;
            if (fn) {
                const auto u = fn(x, t);
                q.n.v = u[0], q.n.w = u[1];
            }
            put(k, q);
            if (k == steps) break;
            const Slopes s0 = slopes_at(field, x, t, ctl.speed_floor);
            const double k0 = plus ? s0.plus : s0.minus;
            const Slopes s1 = slopes_at(field, x + h, t + h * k0, ctl.speed_floor);
            const double k1 = plus ? s1.plus : s1.minus;
            x += h;
            t += 0.5 * h * (k0 + k1);
        }
    };
    try {
        trace(true, data.length_plus / np, np, data.on_plus, [&](int k, const Work& q) { P[k][0] = q; });
        trace(false, -data.length_minus / nm, nm, data.on_minus, [&](int k, const Work& q) { P[0][k] = q; });
    } catch (const OffGrid&) {
        throw DomainError("Goursat data curve leaves the system grid");
    } catch (const Collar&) {
        throw DomainError("Goursat data curve reaches the degenerate collar");
    }
    auto tangent_jet = [&](Work& q, const Work& a, const Work& b) {
        const double dx = b.n.x - a.n.x;
        q.jet = st.data_jet(q, (b.n.v - a.n.v) / dx, (b.n.w - a.n.w) / dx);
    };
    for (int i = 0; i <= np; ++i) tangent_jet(P[i][0], P[std::max(i - 1, 0)][0], P[std::min(i + 1, np)][0]);
    for (int j = 1; j <= nm; ++j) tangent_jet(P[0][j], P[0][std::min(j + 1, nm)], P[0][std::max(j - 1, 0)]);
    for (int i = 0; i <= np; ++i) st.finish(P[i][0]);
    for (int j = 1; j <= nm; ++j) st.finish(P[0][j]);

    CodazziState s;
    s.quasilinear = ctl.quasilinear;
    int rows = nm;
    for (int j = 1; j <= nm && rows == nm; ++j) {
        try {
            for (int i = 1; i <= np; ++i) {
                P[i][j] = st.step(P[i - 1][j], P[i][j - 1]);
                st.finish(P[i][j]);
            }
        } catch (const OffGrid&) {
            rows = j - 1;
        } catch (const Collar&) {
            rows = j - 1;
            s.stopped_at_collar = true;
        }
    }
    if (rows < 1) throw DomainError("Goursat rectangle has no interior row on the grid");

    std::vector<std::vector<int>> id(np + 1, std::vector<int>(rows + 1));
    for (int j = 0; j <= rows; ++j)
        for (int i = 0; i <= np; ++i) {
            id[i][j] = static_cast<int>(s.nodes.size());
            s.nodes.push_back(P[i][j].n);
        }
    for (int j = 1; j <= rows; ++j)
        for (int i = 1; i <= np; ++i) {
            s.triangles.push_back({id[i - 1][j - 1], id[i][j - 1], id[i][j]});
            s.triangles.push_back({id[i - 1][j - 1], id[i][j], id[i - 1][j]});
        }
    std::vector<int> plus, right, top, minus;
    for (int i = 0; i <= np; ++i) plus.push_back(id[i][0]);
    for (int j = 0; j <= rows; ++j) right.push_back(id[np][j]);
    for (int i = np; i >= 0; --i) top.push_back(id[i][rows]);
    for (int j = rows; j >= 0; --j) minus.push_back(id[0][j]);
    s.boundary = {plus, right, top, minus};
    s.boundary_names = {"plus-data", "right", "top", "minus-data"};
    s.levels = rows;
    summarize(s, st.max_defect);
    return s;
}

std::optional<std::array<double, 2>> sample_state(const CodazziState& s, double x, double t) {
    std::vector<double> shifts{0.0};
    if (s.periodic && s.period > 0.0)
        for (int k = 1; k <= 2; ++k) shifts.insert(shifts.end(), {k * s.period, -k * s.period});
    for (double sh : shifts) {
        const double X = x + sh;
        for (const auto& tri : s.triangles) {
            const StateNode &a = s.nodes[tri[0]], &b = s.nodes[tri[1]], &c = s.nodes[tri[2]];
            const double det = (b.x - a.x) * (c.t - a.t) - (c.x - a.x) * (b.t - a.t);
            if (det == 0.0) continue;
            const double l1 = ((X - a.x) * (c.t - a.t) - (c.x - a.x) * (t - a.t)) / det;
            const double l2 = ((b.x - a.x) * (t - a.t) - (X - a.x) * (b.t - a.t)) / det;
            const double l0 = 1.0 - l1 - l2;
            constexpr double e = -1e-12;
            if (l0 >= e && l1 >= e && l2 >= e)
                return std::array<double, 2>{l0 * a.v + l1 * b.v + l2 * c.v, l0 * a.w + l1 * b.w + l2 * c.w};
        }
    }
    return std::nullopt;
}

}  // namespace tightkit
