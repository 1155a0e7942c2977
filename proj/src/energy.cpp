#include <algorithm>
#include <cmath>
#include <limits>

#include "tightkit/codazzi.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

namespace {

// A point with the unweighted state; Ubar is formed with the exact weight.
struct Bar {
    double x, t, v, w;
};

double quad(const Mat2& m, double a, double b) { return m[0][0] * a * a + (m[0][1] + m[1][0]) * a * b + m[1][1] * b * b; }

double min_eig(const Mat2& m) {
    const double mean = 0.5 * (m[0][0] + m[1][1]);
    return mean - std::hypot(0.5 * (m[0][0] - m[1][1]), 0.5 * (m[0][1] + m[1][0]));
}

Bar mid(const Bar& a, const Bar& b) {
    return {0.5 * (a.x + b.x), 0.5 * (a.t + b.t), 0.5 * (a.v + b.v), 0.5 * (a.w + b.w)};
}

}  // namespace

EnergyLedger energy_audit(const SystemField& field, const Symmetrizer& sym, const CodazziState& state,
                          const AuditControls& ctl) {
    EnergyLedger led;
    std::vector<Bar> bar(state.nodes.size());
    for (std::size_t k = 0; k < state.nodes.size(); ++k) {
        const StateNode& n = state.nodes[k];
        bar[k] = {n.x, n.t, n.v, n.w};
    }
    auto weight = [&](const Bar& q) { return std::exp(-sym.weight(field, q.x, q.t)[0]); };
    led.min_eigenvalue = std::numeric_limits<double>::infinity();
    const double t_lo = field.grid.t_lo;
    for (const auto& tri : state.triangles) {
        const Bar &a = bar[tri[0]], &b = bar[tri[1]], &c = bar[tri[2]];
        const double area = 0.5 * ((b.x - a.x) * (c.t - a.t) - (c.x - a.x) * (b.t - a.t));
        // Plane gradients of U for the state-dependent part of B.
        const double x1 = b.x - a.x, t1 = b.t - a.t, x2 = c.x - a.x, t2 = c.t - a.t;
        const double det = x1 * t2 - x2 * t1;
        StateJet jet;
        if (det != 0.0) {
            jet.vx = ((b.v - a.v) * t2 - (c.v - a.v) * t1) / det;
            jet.vt = (x1 * (c.v - a.v) - x2 * (b.v - a.v)) / det;
            jet.wx = ((b.w - a.w) * t2 - (c.w - a.w) * t1) / det;
            jet.wt = (x1 * (c.w - a.w) - x2 * (b.w - a.w)) / det;
        }
        double in = 0.0, wn = 0.0;
        for (const Bar& m : {mid(a, b), mid(b, c), mid(c, a)}) {
            StateJet j = jet;
            j.v = m.v, j.w = m.w;
            const Mat2 B = energy_matrix(field, sym, m.x, m.t, j, state.quasilinear);
            const double e = weight(m);
            in += e * e * quad(B, m.v, m.w);
            led.min_eigenvalue = std::min(led.min_eigenvalue, min_eig(B));
            const double tr = std::max(m.t - t_lo, 0.0);
            wn += ctl.q * std::pow(tr, ctl.weight_power) * e * e * (m.v * m.v + m.w * m.w);
        }
        led.interior += std::abs(area) / 3.0 * in;
        led.weighted_norm += std::abs(area) / 3.0 * wn;
    }
    if (!std::isfinite(led.min_eigenvalue)) led.min_eigenvalue = 0.0;

    double magnitude = std::abs(led.interior);
    for (std::size_t p = 0; p < state.boundary.size(); ++p) {
        const auto& piece = state.boundary[p];
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < piece.size(); ++k) {
            const Bar &a = bar[piece[k]], &b = bar[piece[k + 1]];
            const double dx = b.x - a.x, dt = b.t - a.t;
            // Outward normal times ds is (dt, -dx) on a counter-clockwise boundary.
            auto g = [&](const Bar& q) {
                const SystemMatrices m = system_matrices(field.at(q.x, q.t), {}, sym.system_sign, false, 0.0);
                Mat2 F{};
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) F[r][c] = m.A1[r][c] * dt - m.A2[r][c] * dx;
                const double e = weight(q);
                return 0.5 * e * e * quad(F, q.v, q.w);
            };
            total += (g(a) + 4.0 * g(mid(a, b)) + g(b)) / 6.0;
        }
        const std::string name = p < state.boundary_names.size() ? state.boundary_names[p] : "piece";
        led.boundary.push_back({name, total});
        led.boundary_total += total;
        magnitude += std::abs(total);
    }
    led.residual = led.interior + led.boundary_total;
    led.relative_residual = magnitude > 0.0 ? std::abs(led.residual) / magnitude : 0.0;
    led.margin = led.interior - led.weighted_norm;
    return led;
}

}  // namespace tightkit
