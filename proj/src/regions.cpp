#include "tightkit/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <boost/math/tools/roots.hpp>

#include "tightkit/error.hpp"

namespace tightkit {

namespace {

struct Lattice {
    const Surface& s;
    int nu, nv;
    double hu, hv;
    std::vector<double> k;

    Lattice(const Surface& surf, int nu_, int nv_) : s(surf), nu(nu_), nv(nv_) {
        const Domain& d = s.domain();
        hu = d.u.length() / nu;
        hv = d.v.length() / nv;
        k.resize(static_cast<std::size_t>(nu) * nv);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j) k[idx(i, j)] = fundamental_data(s, at(i, j)).K;
    }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * nv + j; }
    // Non-periodic axes use cell centres so singular edges (sphere poles) are avoided.
    double u_of(double i) const {
        const Axis& a = s.domain().u;
        return a.lo + (i + (a.periodic ? 0.0 : 0.5)) * hu;
    }
    double v_of(double j) const {
        const Axis& a = s.domain().v;
        return a.lo + (j + (a.periodic ? 0.0 : 0.5)) * hv;
    }
    ParamPoint at(double i, double j) const { return {u_of(i), v_of(j)}; }
    bool pu() const { return s.domain().u.periodic; }
    bool pv() const { return s.domain().v.periodic; }
    double K(int i, int j) const { return k[idx((i + nu) % nu, (j + nv) % nv)]; }
};

bool negative(double k) { return k < 0.0; }

// Edge key: dir 0 joins (i,j)-(i+1,j), dir 1 joins (i,j)-(i,j+1).
using EdgeKey = std::array<int, 3>;

struct EdgePoint {
    ParamPoint p;
    int neg_i = 0, neg_j = 0;  // endpoint with K < 0
    std::vector<int> links;
};

ParamPoint refine_on_edge(const Lattice& g, const EdgeKey& e) {
    const auto [i, j, dir] = e;
    const ParamPoint a = g.at(i, j);
    const ParamPoint b = dir == 0 ? g.at(i + 1, j) : g.at(i, j + 1);
    auto point = [&](double t) { return ParamPoint{a.u + t * (b.u - a.u), a.v + t * (b.v - a.v)}; };
    auto f = [&](double t) { return fundamental_data(g.s, g.s.domain().reduce(point(t))).K; };
    const double fa = g.K(i, j);
    const double fb = dir == 0 ? g.K(i + 1, j) : g.K(i, j + 1);
    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t iters = 80;
    const auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, fa, fb, tol, iters);
    return point(0.5 * (r.first + r.second));
}

double wrap_delta(double d, const Axis& a) {
    if (!a.periodic) return d;
    const double L = a.length();
    return d - L * std::round(d / L);
}

}  // namespace

RegionDecomposition decompose_regions(const Surface& s, const DecomposeControls& ctl) {
    if (ctl.nu < 16 || ctl.nv < 16) throw PreconditionError("decomposition grid must be >= 16 per axis");
    const Lattice g(s, ctl.nu, ctl.nv);
    const Domain& dom = s.domain();
    RegionDecomposition out;
    out.mask_nu = g.nu;
    out.mask_nv = g.nv;
    out.euler_characteristic = s.euler_characteristic();
    out.collar = ctl.collar_cells * std::max(g.hu, g.hv);

    // S- components by flood fill over nodes.
    std::vector<int> label(g.k.size(), -1);
    for (int i0 = 0; i0 < g.nu; ++i0) {
        for (int j0 = 0; j0 < g.nv; ++j0) {
            if (!negative(g.K(i0, j0)) || label[g.idx(i0, j0)] >= 0) continue;
            NegativeComponent comp;
            comp.id = static_cast<int>(out.negative_components.size());
            std::vector<std::pair<int, int>> stack{{i0, j0}};
            label[g.idx(i0, j0)] = comp.id;
            while (!stack.empty()) {
                auto [i, j] = stack.back();
                stack.pop_back();
                ++comp.node_count;
                comp.area += std::sqrt(fundamental_data(s, g.at(i, j)).detI) * g.hu * g.hv;
                const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
                for (int q = 0; q < 4; ++q) {
                    int a = i + di[q], b = j + dj[q];
                    if (a < 0 || a >= g.nu) {
                        if (!g.pu()) continue;
                        a = (a + g.nu) % g.nu;
                    }
                    if (b < 0 || b >= g.nv) {
                        if (!g.pv()) continue;
                        b = (b + g.nv) % g.nv;
                    }
                    if (negative(g.K(a, b)) && label[g.idx(a, b)] < 0) {
                        label[g.idx(a, b)] = comp.id;
                        stack.push_back({a, b});
                    }
                }
            }
            out.negative_components.push_back(comp);
        }
    }

    // Marching squares with saddle cells resolved by the centre value.
    std::map<EdgeKey, int> edge_index;
    std::vector<EdgePoint> pts;
    auto edge_point = [&](EdgeKey e) -> int {
        e[0] = (e[0] + g.nu) % g.nu;
        e[1] = (e[1] + g.nv) % g.nv;
        auto it = edge_index.find(e);
        if (it != edge_index.end()) return it->second;
        EdgePoint ep;
        ep.p = refine_on_edge(g, e);
        const int i2 = e[2] == 0 ? e[0] + 1 : e[0];
        const int j2 = e[2] == 1 ? e[1] + 1 : e[1];
        if (negative(g.K(e[0], e[1]))) {
            ep.neg_i = e[0];
            ep.neg_j = e[1];
        } else {
            ep.neg_i = (i2 + g.nu) % g.nu;
            ep.neg_j = (j2 + g.nv) % g.nv;
        }
        const int id = static_cast<int>(pts.size());
        pts.push_back(ep);
        edge_index.emplace(e, id);
        return id;
    };
    const int cu = g.pu() ? g.nu : g.nu - 1;
    const int cv = g.pv() ? g.nv : g.nv - 1;
    for (int i = 0; i < cu; ++i) {
        for (int j = 0; j < cv; ++j) {
            const bool c[4] = {negative(g.K(i, j)), negative(g.K(i + 1, j)),
                               negative(g.K(i + 1, j + 1)), negative(g.K(i, j + 1))};
            const EdgeKey edges[4] = {{i, j, 0}, {i + 1, j, 1}, {i, j + 1, 0}, {i, j, 1}};
            const bool cut[4] = {c[0] != c[1], c[1] != c[2], c[3] != c[2], c[0] != c[3]};
            std::vector<int> e;
            for (int q = 0; q < 4; ++q)
                if (cut[q]) e.push_back(q);
            std::vector<std::pair<int, int>> segs;
            if (e.size() == 2) {
                segs.push_back({e[0], e[1]});
            } else if (e.size() == 4) {
                const double centre = fundamental_data(s, dom.reduce(g.at(i + 0.5, j + 0.5))).K;
                if (negative(centre) == c[0]) {
                    segs.push_back({0, 1});
                    segs.push_back({2, 3});
                } else {
                    segs.push_back({0, 3});
                    segs.push_back({1, 2});
                }
            }
            for (auto [a, b] : segs) {
                const int pa = edge_point(edges[a]);
                const int pb = edge_point(edges[b]);
                pts[pa].links.push_back(pb);
                pts[pb].links.push_back(pa);
            }
        }
    }

    // Chain the segments: open chains first, then cycles.
    std::vector<char> used(pts.size(), 0);
    auto chain_from = [&](int start) {
        std::vector<int> order{start};
        used[start] = 1;
        int prev = -1, cur = start;
        for (;;) {
            int next = -1;
            for (int nb : pts[cur].links)
                if (nb != prev && !used[nb]) {
                    next = nb;
                    break;
                }
            if (next < 0) break;
            used[next] = 1;
            order.push_back(next);
            prev = cur;
            cur = next;
        }
        return order;
    };
    std::vector<std::vector<int>> chains;
    std::vector<char> open;
    for (std::size_t q = 0; q < pts.size(); ++q)
        if (!used[q] && pts[q].links.size() < 2) {
            chains.push_back(chain_from(static_cast<int>(q)));
            open.push_back(1);
        }
    for (std::size_t q = 0; q < pts.size(); ++q)
        if (!used[q]) {
            chains.push_back(chain_from(static_cast<int>(q)));
            open.push_back(0);
        }

    const double probe = out.collar;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& ch = chains[c];
        ParabolicCurve pc;
        pc.id = static_cast<int>(c);
        pc.closable = !open[c];
        if (!pc.closable) out.warnings.push_back("a parabolic curve is not closable at this resolution");
        std::set<int> comps;
        ParamPoint acc = pts[ch[0]].p;
        std::vector<ParamPoint> unwrapped{acc};
        for (std::size_t q = 1; q < ch.size(); ++q) {
            const ParamPoint& a = pts[ch[q - 1]].p;
            const ParamPoint& b = pts[ch[q]].p;
            acc.u += wrap_delta(b.u - a.u, dom.u);
            acc.v += wrap_delta(b.v - a.v, dom.v);
            unwrapped.push_back(acc);
        }
        if (pc.closable) {
            const ParamPoint& a = pts[ch.back()].p;
            const ParamPoint& b = pts[ch.front()].p;
            acc.u += wrap_delta(b.u - a.u, dom.u);
            acc.v += wrap_delta(b.v - a.v, dom.v);
            unwrapped.push_back(acc);  // closing sample repeats the start
        }
        for (int q : ch) {
            const int lbl = label[g.idx(pts[q].neg_i, pts[q].neg_j)];
            if (lbl >= 0) comps.insert(lbl);
        }
        pc.adjacent_components.assign(comps.begin(), comps.end());

        TracedCurve& tc = pc.curve;
        tc.closed = pc.closable;
        tc.termination = pc.closable ? "closed level set" : "open level set";
        const std::size_t n = unwrapped.size();
        double s_acc = 0.0;
        pc.min_abs_H = std::numeric_limits<double>::infinity();
        pc.monotone_sign_change = true;
        for (std::size_t q = 0; q < n; ++q) {
            const ParamPoint p = unwrapped[q];
            const std::size_t qa = q == 0 ? (pc.closable ? n - 2 : 0) : q - 1;
            const std::size_t qb = q + 1 == n ? (pc.closable ? 1 : n - 1) : q + 1;
            double du = unwrapped[qb].u - unwrapped[qa].u;
            double dv = unwrapped[qb].v - unwrapped[qa].v;
            if (pc.closable && q == 0) du += unwrapped[n - 1].u - unwrapped[0].u, dv += unwrapped[n - 1].v - unwrapped[0].v;
            if (pc.closable && q + 1 == n) du += unwrapped[n - 1].u - unwrapped[0].u, dv += unwrapped[n - 1].v - unwrapped[0].v;
            const FundamentalData fd = fundamental_data(s, dom.reduce(p));
            const double len = std::sqrt(first_form(fd, du, dv));
            if (q > 0) {
                const double ddu = p.u - unwrapped[q - 1].u, ddv = p.v - unwrapped[q - 1].v;
                s_acc += std::sqrt(first_form(fd, ddu, ddv));
            }
            tc.samples.push_back({p, len > 0 ? du / len : 0.0, len > 0 ? dv / len : 0.0, s_acc});
            pc.min_abs_H = std::min(pc.min_abs_H, std::abs(fd.H));

            // Transverse probe, perpendicular to the polyline in parameter space.
            const double e = std::hypot(du, dv);
            if (e == 0.0) continue;
            const double nu_ = -dv / e, nv_ = du / e;
            double prev = 0.0;
            int dir = 0;
            for (int k = 0; k < ctl.probe_samples; ++k) {
                const double tau = -probe + 2.0 * probe * k / (ctl.probe_samples - 1);
                const ParamPoint pp{p.u + tau * nu_, p.v + tau * nv_};
                if (!dom.contains(pp)) continue;
                const double kv = fundamental_data(s, dom.reduce(pp)).K;
                if (k > 0) {
                    const int d = kv > prev ? 1 : (kv < prev ? -1 : 0);
                    if (d == 0 || (dir != 0 && d != dir)) pc.monotone_sign_change = false;
                    dir = d;
                }
                prev = kv;
            }
        }
        if (pc.closable && n > 1) {
            tc.winding[0] = dom.u.periodic ? static_cast<int>(std::lround((unwrapped.back().u - unwrapped.front().u) / dom.u.length())) : 0;
            tc.winding[1] = dom.v.periodic ? static_cast<int>(std::lround((unwrapped.back().v - unwrapped.front().v) / dom.v.length())) : 0;
        }
        if (!(tc.length() > 1e-9 * (g.hu + g.hv))) {
            out.warnings.push_back("dropped a degenerate zero-length level set");
            continue;
        }
        pc.id = static_cast<int>(out.parabolic_curves.size());
        for (int comp : pc.adjacent_components)
            out.negative_components[comp].boundary_curves.push_back(pc.id);
        out.parabolic_curves.push_back(std::move(pc));
    }
    return out;
}

}  // namespace tightkit
