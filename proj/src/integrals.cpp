#include "tightkit/integrals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "tightkit/error.hpp"

namespace tightkit {

namespace {

constexpr int kPos = 0, kNeg = 1, kOther = 2;

using Sums = std::vector<std::array<double, 3>>;  // [integrand][class]

int classify(const FundamentalData& fd, const Region& region) {
    if (region.kind == RegionKind::Custom) return region.predicate(fd) ? kPos : kOther;
    if (fd.K > 0.0) return kPos;
    if (fd.K < 0.0) return kNeg;
    return kOther;
}

bool selected(int cls, const Region& region) {
    switch (region.kind) {
        case RegionKind::All: return true;
        case RegionKind::Positive:
        case RegionKind::Custom: return cls == kPos;
        case RegionKind::Negative: return cls == kNeg;
    }
    return false;
}

struct Node {
    double s;
    double w;
};

// Composite 4-point Gauss-Legendre on [a,b].
void gl_nodes(double a, double b, int panels, std::vector<Node>& out) {
    using Rule = boost::math::quadrature::gauss<double, 4>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double c = a + (k + 0.5) * h;
        for (std::size_t i = 0; i < x.size(); ++i) {
            // abscissa() lists the non-negative half only
            out.push_back({c + 0.5 * h * x[i], 0.5 * h * w[i]});
            if (x[i] != 0.0) out.push_back({c - 0.5 * h * x[i], 0.5 * h * w[i]});
        }
    }
}

std::vector<Node> axis_nodes(const Axis& ax, int n) {
    std::vector<Node> out;
    if (ax.periodic) {
        const double h = ax.length() / n;
        for (int i = 0; i < n; ++i) out.push_back({ax.lo + i * h, h});
    } else {
        gl_nodes(ax.lo, ax.hi, std::max(1, n / 4), out);
    }
    return out;
}

double curvature_at(const Surface& s, double u, double v) {
    return fundamental_data(s, {u, v}).K;
}

// Roots of K along the u-line at v, bracketed between n cell centres.
std::vector<double> k_roots(const Surface& s, double v, int n) {
    const Axis& ax = s.domain().u;
    const double h = ax.length() / n;
    std::vector<double> c(n), k(n);
    for (int i = 0; i < n; ++i) {
        c[i] = ax.lo + (i + 0.5) * h;
        k[i] = curvature_at(s, c[i], v);
    }
    std::vector<double> roots;
    const int pairs = ax.periodic ? n : n - 1;
    for (int i = 0; i < pairs; ++i) {
        const int j = (i + 1) % n;
        if (!(k[i] * k[j] < 0.0)) continue;
        const double a = c[i];
        const double b = (j == 0) ? c[j] + ax.length() : c[j];
        auto f = [&](double u) { return curvature_at(s, u, v); };
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t iters = 100;
        const auto br = boost::math::tools::toms748_solve(f, a, b, k[i], k[j], tol, iters);
        roots.push_back(0.5 * (br.first + br.second));
    }
    return roots;
}

void accumulate_line(const Surface& s, double v, double wv, int n,
                     const std::vector<Integrand>& fs, const Region& region, bool split,
                     Sums& sums) {
    const Axis& ax = s.domain().u;
    auto add = [&](double u, double w) {
        const FundamentalData fd = fundamental_data(s, {u, v});
        const int cls = classify(fd, region);
        const double da = std::sqrt(fd.detI) * w * wv;
        for (std::size_t q = 0; q < fs.size(); ++q) sums[q][cls] += fs[q](fd) * da;
    };
    const bool use_split = split && region.kind != RegionKind::Custom;
    if (!use_split) {
        for (const Node& nd : axis_nodes(ax, n)) add(nd.s, nd.w);
        return;
    }
    std::vector<double> br = k_roots(s, v, n);
    std::vector<std::pair<double, double>> pieces;
    if (ax.periodic) {
        if (br.empty()) {
            pieces.push_back({ax.lo, ax.hi});
        } else {
            for (std::size_t i = 0; i + 1 < br.size(); ++i) pieces.push_back({br[i], br[i + 1]});
            pieces.push_back({br.back(), br.front() + ax.length()});
        }
    } else {
        double prev = ax.lo;
        for (double r : br) {
            pieces.push_back({prev, r});
            prev = r;
        }
        pieces.push_back({prev, ax.hi});
    }
    std::vector<Node> nodes;
    for (const auto& [a, b] : pieces) {
        if (!(b > a)) continue;
        const int panels = std::max(1, static_cast<int>(std::lround(n / 4.0 * (b - a) / ax.length())));
        nodes.clear();
        gl_nodes(a, b, panels, nodes);
        for (const Node& nd : nodes) add(ax.periodic ? ax.reduce(nd.s) : nd.s, nd.w);
    }
}

Sums integrate_all(const Surface& s, const std::vector<Integrand>& fs, const Region& region,
                   int nu, int nv, bool split) {
    Sums sums(fs.size(), {0.0, 0.0, 0.0});
    for (const Node& nd : axis_nodes(s.domain().v, nv)) {
        accumulate_line(s, nd.s, nd.w, nu, fs, region, split, sums);
    }
    return sums;
}

double pick(const std::array<double, 3>& cls, const Region& region) {
    double total = 0.0;
    for (int c = 0; c < 3; ++c)
        if (selected(c, region)) total += cls[c];
    return total;
}

void check_spec(const QuadratureSpec& spec) {
    if (spec.nu < 16 || spec.nv < 16) throw PreconditionError("quadrature resolution must be >= 16 per axis");
}

}  // namespace

IntegralEstimate surface_integral(const Surface& s, const Integrand& f, const Region& region,
                                  const QuadratureSpec& spec) {
    check_spec(spec);
    int nu = spec.nu, nv = spec.nv;
    for (;;) {
        const double fine = pick(integrate_all(s, {f}, region, nu, nv, spec.split_interface)[0], region);
        const double coarse =
            pick(integrate_all(s, {f}, region, nu / 2, nv / 2, spec.split_interface)[0], region);
        IntegralEstimate est{fine, std::abs(fine - coarse), nu, nv};
        if (est.error <= spec.tol) return est;
        if (2 * std::max(nu, nv) > spec.max_resolution) {
            std::ostringstream os;
            os << "error estimate " << est.error << " above " << spec.tol << " at " << nu << "x" << nv;
            throw ConvergenceError(os.str());
        }
        nu *= 2;
        nv *= 2;
    }
}

TightnessReport tightness_report(const Surface& s, const QuadratureSpec& spec) {
    check_spec(spec);
    const std::vector<Integrand> fs{[](const FundamentalData& fd) { return fd.K; },
                                    [](const FundamentalData&) { return 1.0; }};
    const Sums fine = integrate_all(s, fs, Region::all(), spec.nu, spec.nv, spec.split_interface);
    const Sums coarse =
        integrate_all(s, fs, Region::all(), spec.nu / 2, spec.nv / 2, spec.split_interface);

    TightnessReport r;
    r.euler_characteristic = s.euler_characteristic();
    r.nu = spec.nu;
    r.nv = spec.nv;
    r.tol = spec.tol;
    r.positive_curvature = fine[0][kPos];
    r.total_absolute_curvature = fine[0][kPos] - fine[0][kNeg];
    r.total_curvature = fine[0][kPos] + fine[0][kNeg] + fine[0][kOther];
    r.lower_bound = kTwoPi * (4 - r.euler_characteristic);
    r.gauss_bonnet_defect = r.total_curvature - kTwoPi * r.euler_characteristic;
    r.area_positive = fine[1][kPos];
    r.area_negative = fine[1][kNeg];
    r.area_total = fine[1][kPos] + fine[1][kNeg] + fine[1][kOther];
    r.error_estimate = std::max({std::abs(fine[0][kPos] - coarse[0][kPos]),
                                 std::abs(fine[0][kNeg] - coarse[0][kNeg]),
                                 std::abs(fine[0][kOther] - coarse[0][kOther])});
    r.tight = std::abs(r.positive_curvature - 2.0 * kTwoPi) < spec.tol;
    return r;
}

}  // namespace tightkit
