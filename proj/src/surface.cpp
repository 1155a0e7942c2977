#include "tightkit/surface.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "tightkit/error.hpp"
#include "tightkit/taylor.hpp"

namespace tightkit {

double Axis::reduce(double s) const {
    if (!periodic) return s;
    const double len = length();
    double r = std::fmod(s - lo, len);
    if (r < 0.0) r += len;
    return lo + r;
}

bool Axis::contains(double s, double slack) const {
    return periodic || (s >= lo - slack && s <= hi + slack);
}

Domain SampledGrid::domain() const {
    Domain d;
    d.u = {u0, periodic_u ? u0 + nu * du : u0 + (nu - 1) * du, periodic_u};
    d.v = {v0, periodic_v ? v0 + nv * dv : v0 + (nv - 1) * dv, periodic_v};
    return d;
}

namespace {

constexpr int kJetOrder = 3;
using T3 = Taylor2<kJetOrder>;

struct TVec {
    T3 x, y, z;
};

TVec position(const SphereFamily& f, const T3& u, const T3& v) {
    const T3 cu = cos(u);
    return {f.radius * cu * cos(v), f.radius * cu * sin(v), f.radius * sin(u)};
}

TVec position(const TorusFamily& f, const T3& u, const T3& v) {
    const T3 rho = f.R + f.r * cos(u);
    return {rho * cos(v), rho * sin(v), f.r * sin(u)};
}

TVec position(const PerturbedTorusFamily& f, const T3& u, const T3& v) {
    const T3 tube = f.r * (1.0 + f.eps * cos(double(f.p) * u) * cos(double(f.q) * v));
    const T3 rho = f.R + tube * cos(u);
    return {rho * cos(v), rho * sin(v), tube * sin(u)};
}

TVec position(const FlattenedTorusFamily& f, const T3& u, const T3& v) {
    const T3 rho = f.R + f.r * cos(u);
    const T3 height = f.r * (-0.5 * cos(u) + 0.25 * sin(2.0 * u));
    return {rho * cos(v), rho * sin(v), height};
}

TVec position(const PlaneFamily&, const T3& u, const T3& v) { return {u, v, T3(0.0)}; }

Vec3 take(const TVec& p, int i, int j) {
    return {p.x.derivative(i, j), p.y.derivative(i, j), p.z.derivative(i, j)};
}

template <typename F>
Jet analytic_jet(const F& f, ParamPoint p) {
    const TVec x = position(f, T3::variable_u(p.u), T3::variable_v(p.v));
    Jet j;
    j.x = take(x, 0, 0);
    j.xu = take(x, 1, 0);
    j.xv = take(x, 0, 1);
    j.xuu = take(x, 2, 0);
    j.xuv = take(x, 1, 1);
    j.xvv = take(x, 0, 2);
    j.xuuu = take(x, 3, 0);
    j.xuuv = take(x, 2, 1);
    j.xuvv = take(x, 1, 2);
    j.xvvv = take(x, 0, 3);
    return j;
}

constexpr int kStencil = 6;

// Weights w[k][m] giving the k-th derivative at offset s (in node units,
// measured from stencil node 0) of the Lagrange interpolant through nodes
// 0..kStencil-1.
std::array<std::array<double, kStencil>, 4> lagrange_weights(double s) {
    std::array<std::array<double, kStencil>, 4> w{};
    for (int m = 0; m < kStencil; ++m) {
        // Expand basis polynomial l_m(y) = prod_{n != m} (y - n)/(m - n) in
        // powers of (y - s) and read off the Taylor coefficients.
        std::array<double, kStencil> poly{};
        poly[0] = 1.0;
        int deg = 0;
        double denom = 1.0;
        for (int n = 0; n < kStencil; ++n) {
            if (n == m) continue;
            denom *= (m - n);
            const double shift = s - n;  // (y - n) = (y - s) + (s - n)
            for (int k = deg + 1; k >= 1; --k) poly[k] = poly[k - 1] + shift * poly[k];
            poly[0] *= shift;
            ++deg;
        }
        double fact = 1.0;
        for (int k = 0; k < 4; ++k) {
            if (k > 0) fact *= k;
            w[k][m] = poly[k] * fact / denom;
        }
    }
    return w;
}

struct StencilPos {
    std::array<int, kStencil> idx{};
    double offset = 0.0;  // position relative to idx[0], in node units
};

StencilPos stencil_for(double s, double origin, double h, int n, bool periodic) {
    const double t = (s - origin) / h;
    StencilPos sp;
    int base = static_cast<int>(std::floor(t)) - (kStencil / 2 - 1);
    if (!periodic) {
        if (base < 0) base = 0;
        if (base > n - kStencil) base = n - kStencil;
    }
    sp.offset = t - base;
    for (int k = 0; k < kStencil; ++k) {
        int i = base + k;
        if (periodic) i = ((i % n) + n) % n;
        sp.idx[k] = i;
    }
    return sp;
}

Jet grid_jet(const SampledGrid& g, ParamPoint p) {
    if (g.nu < kStencil || g.nv < kStencil) {
        throw DomainError("sampled grid too coarse for third derivatives (need >= 6 nodes per axis)");
    }
    const StencilPos su = stencil_for(p.u, g.u0, g.du, g.nu, g.periodic_u);
    const StencilPos sv = stencil_for(p.v, g.v0, g.dv, g.nv, g.periodic_v);
    const auto wu = lagrange_weights(su.offset);
    const auto wv = lagrange_weights(sv.offset);
    auto combine = [&](int a, int b) {
        Vec3 acc;
        for (int i = 0; i < kStencil; ++i) {
            if (wu[a][i] == 0.0) continue;
            Vec3 row;
            for (int j = 0; j < kStencil; ++j) row += wv[b][j] * g.at(su.idx[i], sv.idx[j]);
            acc += wu[a][i] * row;
        }
        const double scale = std::pow(g.du, -a) * std::pow(g.dv, -b);
        return acc * scale;
    };
    Jet j;
    j.x = combine(0, 0);
    j.xu = combine(1, 0);
    j.xv = combine(0, 1);
    j.xuu = combine(2, 0);
    j.xuv = combine(1, 1);
    j.xvv = combine(0, 2);
    j.xuuu = combine(3, 0);
    j.xuuv = combine(2, 1);
    j.xuvv = combine(1, 2);
    j.xvvv = combine(0, 3);
    return j;
}

}  // namespace

Surface::Surface(SurfaceFamily family, Orientation orientation)
    : family_(std::move(family)), orientation_(orientation) {
    std::visit(
        [this](const auto& f) {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, SphereFamily>) {
                if (!(f.radius > 0.0)) throw DomainError("sphere radius must be > 0");
                domain_ = {{-kPi / 2, kPi / 2, false}, {0.0, kTwoPi, true}};
                chi_ = 2;
            } else if constexpr (std::is_same_v<F, TorusFamily> ||
                                 std::is_same_v<F, FlattenedTorusFamily>) {
                if (!(f.r > 0.0)) throw DomainError("tube radius must be > 0");
                if (!(f.r < f.R)) throw DomainError("tube radius must be < axis radius");
                domain_ = {{0.0, kTwoPi, true}, {0.0, kTwoPi, true}};
                chi_ = 0;
            } else if constexpr (std::is_same_v<F, PerturbedTorusFamily>) {
                if (!(f.r > 0.0)) throw DomainError("tube radius must be > 0");
                if (!(f.r * (1.0 + std::abs(f.eps)) < f.R)) {
                    throw DomainError("tube radius must be < axis radius");
                }
                if (!(std::abs(f.eps) < 1.0)) throw DomainError("perturbation amplitude must be < 1");
                domain_ = {{0.0, kTwoPi, true}, {0.0, kTwoPi, true}};
                chi_ = 0;
            } else if constexpr (std::is_same_v<F, PlaneFamily>) {
                domain_ = {{-f.half_width, f.half_width, false}, {-f.half_width, f.half_width, false}};
                chi_ = 1;
            } else {
                if (!f) throw DomainError("null sampled grid");
                domain_ = f->domain();
                chi_ = f->euler_characteristic;
            }
        },
        family_);
}

Surface Surface::sphere(double radius) { return Surface(SphereFamily{radius}); }
Surface Surface::torus(double R, double r) { return Surface(TorusFamily{R, r}); }
Surface Surface::perturbed_torus(double R, double r, double eps, int p, int q) {
    return Surface(PerturbedTorusFamily{R, r, eps, p, q});
}
Surface Surface::flattened_torus(double R, double r) { return Surface(FlattenedTorusFamily{R, r}); }
Surface Surface::plane(double half_width) { return Surface(PlaneFamily{half_width}); }
Surface Surface::sampled(std::shared_ptr<const SampledGrid> grid) { return Surface(std::move(grid)); }

std::string Surface::family_name() const {
    return std::visit(
        [](const auto& f) -> std::string {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, SphereFamily>) return "sphere";
            else if constexpr (std::is_same_v<F, TorusFamily>) return "torus";
            else if constexpr (std::is_same_v<F, PerturbedTorusFamily>) return "perturbed-torus";
            else if constexpr (std::is_same_v<F, FlattenedTorusFamily>) return "flattened-torus";
            else if constexpr (std::is_same_v<F, PlaneFamily>) return "plane";
            else return "sampled-grid";
        },
        family_);
}

Surface Surface::with_orientation(Orientation o) const { return Surface(family_, o); }
Surface Surface::flipped() const {
    return with_orientation(orientation_ == Orientation::Standard ? Orientation::Flipped
                                                                  : Orientation::Standard);
}

Jet eval_jet(const Surface& s, ParamPoint p) {
    const Domain& d = s.domain();
    if (!d.contains(p, 1e-12)) {
        std::ostringstream os;
        os << "point (" << p.u << ", " << p.v << ") outside the parameter domain";
        throw DomainError(os.str());
    }
    return std::visit(
        [&](const auto& f) -> Jet {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, std::shared_ptr<const SampledGrid>>) {
                return grid_jet(*f, d.reduce(p));
            } else {
                return analytic_jet(f, p);
            }
        },
        s.family());
}

std::shared_ptr<SampledGrid> read_sampled_grid(std::istream& in) {
    std::string line;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        return false;
    };
    if (!next_line()) throw DomainError("sampled grid: missing header");
    std::istringstream hs(line);
    std::string tag;
    auto g = std::make_shared<SampledGrid>();
    int pu = 0, pv = 0;
    if (!(hs >> tag >> g->nu >> g->nv >> pu >> pv >> g->euler_characteristic) || tag != "grid") {
        throw DomainError("sampled grid: header must be `grid nu nv periodic_u periodic_v chi`");
    }
    if (g->nu < 2 || g->nv < 2) throw DomainError("sampled grid: need at least 2 nodes per axis");
    g->periodic_u = pu != 0;
    g->periodic_v = pv != 0;
    g->nodes.resize(static_cast<std::size_t>(g->nu) * g->nv);
    std::vector<double> us(g->nu), vs(g->nv);
    for (int i = 0; i < g->nu; ++i) {
        for (int j = 0; j < g->nv; ++j) {
            if (!next_line()) throw DomainError("sampled grid: truncated node table");
            std::istringstream rs(line);
            double u, v;
            Vec3 x;
            if (!(rs >> u >> v >> x.x >> x.y >> x.z)) {
                throw DomainError("sampled grid: malformed row `" + line + "`");
            }
            if (j == 0) us[i] = u;
            if (i == 0) vs[j] = v;
            g->nodes[static_cast<std::size_t>(i) * g->nv + j] = x;
        }
    }
    g->u0 = us[0];
    g->du = us[1] - us[0];
    g->v0 = vs[0];
    g->dv = vs[1] - vs[0];
    if (!(g->du > 0.0) || !(g->dv > 0.0)) throw DomainError("sampled grid: axes must increase");
    for (int i = 0; i < g->nu; ++i) {
        if (std::abs(us[i] - (g->u0 + i * g->du)) > 1e-9 * (1.0 + std::abs(us[i]))) {
            throw DomainError("sampled grid: u axis is not uniformly spaced");
        }
    }
    for (int j = 0; j < g->nv; ++j) {
        if (std::abs(vs[j] - (g->v0 + j * g->dv)) > 1e-9 * (1.0 + std::abs(vs[j]))) {
            throw DomainError("sampled grid: v axis is not uniformly spaced");
        }
    }
    return g;
}

std::shared_ptr<SampledGrid> load_sampled_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open sampled grid file " + path);
    return read_sampled_grid(in);
}

void write_sampled_grid(std::ostream& out, const SampledGrid& g) {
    out << "grid " << g.nu << ' ' << g.nv << ' ' << int(g.periodic_u) << ' ' << int(g.periodic_v)
        << ' ' << g.euler_characteristic << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < g.nu; ++i) {
        for (int j = 0; j < g.nv; ++j) {
            const Vec3& x = g.at(i, j);
            out << g.u0 + i * g.du << ' ' << g.v0 + j * g.dv << ' ' << x.x << ' ' << x.y << ' '
                << x.z << '\n';
        }
    }
}

std::shared_ptr<SampledGrid> sample_surface(const Surface& s, int nu, int nv) {
    const Domain& d = s.domain();
    auto g = std::make_shared<SampledGrid>();
    g->nu = nu;
    g->nv = nv;
    g->periodic_u = d.u.periodic;
    g->periodic_v = d.v.periodic;
    g->euler_characteristic = s.euler_characteristic();
    g->u0 = d.u.lo;
    g->du = d.u.periodic ? d.u.length() / nu : d.u.length() / (nu - 1);
    g->v0 = d.v.lo;
    g->dv = d.v.periodic ? d.v.length() / nv : d.v.length() / (nv - 1);
    g->nodes.resize(static_cast<std::size_t>(nu) * nv);
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            g->nodes[static_cast<std::size_t>(i) * nv + j] =
                eval_jet(s, {g->u0 + i * g->du, g->v0 + j * g->dv}).x;
        }
    }
    return g;
}

}  // namespace tightkit
