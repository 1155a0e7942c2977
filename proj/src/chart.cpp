#include "tightkit/chart.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "stencil.hpp"
#include "tightkit/error.hpp"

namespace tightkit {

using detail::d1_4;
using detail::d1_8;
using detail::lagrange_weights;
using detail::window_start;

std::string to_string(ChartKind k) { return k == ChartKind::MZero ? "m-zero" : "asymptotic-adapted"; }

std::string to_string(SignPattern p) {
    switch (p) {
    case SignPattern::NegativeL: return "negative-L";
    case SignPattern::PositiveL: return "positive-L";
    default: return "none";
    }
}

ParamPoint Chart::wrapped(int i, int j) const {
    if (!periodic_x) return node(i, j);
    const int q = static_cast<int>(std::floor(static_cast<double>(i) / nx));
    const ParamPoint p = node(i - q * nx, j);
    return {p.u + q * period_shift[0], p.v + q * period_shift[1]};
}

ParamPoint Chart::to_surface(double x, double t) const {
    constexpr int m = 6;
    const double xi = (x - x_lo) / hx();
    const double tj = (t - t_lo) / ht();
    const int i0 = periodic_x ? static_cast<int>(std::floor(xi)) - (m / 2 - 1) : window_start(xi, m, nx);
    const int j0 = window_start(tj, m, nt);
    double wx[m], wt[m];
    lagrange_weights(xi - i0, m, wx);
    lagrange_weights(tj - j0, m, wt);
    ParamPoint r{0.0, 0.0};
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const ParamPoint p = wrapped(i0 + a, j0 + b);
            r.u += wx[a] * wt[b] * p.u;
            r.v += wx[a] * wt[b] * p.v;
        }
    return r;
}

std::optional<ParamPoint> Chart::to_chart(ParamPoint p) const {
    const Domain dom = source ? source->domain() : Domain{};
    auto gap = [&](ParamPoint a) {
        double du = p.u - a.u, dv = p.v - a.v;
        if (source && dom.u.periodic) du -= dom.u.length() * std::round(du / dom.u.length());
        if (source && dom.v.periodic) dv -= dom.v.length() * std::round(dv / dom.v.length());
        return std::array<double, 2>{du, dv};
    };
    double best = std::numeric_limits<double>::infinity();
    double x = x_lo, t = t_lo;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nt; ++j) {
            const auto g = gap(node(i, j));
            const double d = std::hypot(g[0], g[1]);
            if (d < best) {
                best = d;
                x = x_at(i);
                t = t_at(j);
            }
        }
    const double hx_ = 1e-6 * hx(), ht_ = 1e-6 * ht();
    for (int it = 0; it < 50; ++it) {
        const auto g = gap(to_surface(x, t));
        if (std::hypot(g[0], g[1]) < 1e-13) break;
        const ParamPoint xp = to_surface(x + hx_, t), xm = to_surface(x - hx_, t);
        const ParamPoint tp = to_surface(x, t + ht_), tm = to_surface(x, t - ht_);
        const double a = (xp.u - xm.u) / (2 * hx_), c = (xp.v - xm.v) / (2 * hx_);
        const double b = (tp.u - tm.u) / (2 * ht_), d = (tp.v - tm.v) / (2 * ht_);
        const double det = a * d - b * c;
        if (det == 0.0) return std::nullopt;
        x += (d * g[0] - b * g[1]) / det;
        t += (-c * g[0] + a * g[1]) / det;
    }
    const double slack = 1e-9 * (t_hi - t_lo);
    if (t < t_lo - slack || t > t_hi + slack) return std::nullopt;
    if (periodic_x) {
        const double len = x_hi - x_lo;
        x = x_lo + std::fmod(std::fmod(x - x_lo, len) + len, len);
    } else if (x < x_lo - slack || x > x_hi + slack) {
        return std::nullopt;
    }
    return ParamPoint{x, t};
}

ChartForms chart_forms(const Chart& c, int i, int j) {
    if (!c.source) throw PreconditionError("chart has no form source attached");
    auto xs = [&](int k, bool v) {
        const ParamPoint p = c.wrapped(k, j);
        return v ? p.v : p.u;
    };
    auto ts = [&](int k, bool v) {
        const ParamPoint p = c.wrapped(i, k);
        return v ? p.v : p.u;
    };
    double xu, xv;
    if (c.periodic_x) {
        xu = d1_8([&](int k) { return xs(k, false); }, i, c.hx());
        xv = d1_8([&](int k) { return xs(k, true); }, i, c.hx());
    } else {
        xu = d1_4([&](int k) { return xs(k, false); }, i, c.nx, c.hx());
        xv = d1_4([&](int k) { return xs(k, true); }, i, c.nx, c.hx());
    }
    const double tu = d1_4([&](int k) { return ts(k, false); }, j, c.nt, c.ht());
    const double tv = d1_4([&](int k) { return ts(k, true); }, j, c.nt, c.ht());
    ChartForms f;
    f.native = fundamental_data(*c.source, c.source->domain().reduce(c.node(i, j)));
    const FundamentalData& n = f.native;
    f.E = first_form(n, xu, xv);
    f.F = first_form(n, xu, xv, tu, tv);
    f.G = first_form(n, tu, tv);
    f.L = second_form(n, xu, xv);
    f.M = second_form(n, xu, xv, tu, tv);
    f.N = second_form(n, tu, tv);
    f.jacobian = xu * tv - xv * tu;
    return f;
}

Certificate compute_certificate(const Chart& c, const Certificate& record) {
    Certificate r = record;
    r.kind = c.kind;
    r.form_scale = 0.0;
    r.min_jacobian = std::numeric_limits<double>::infinity();
    r.max_abs_M = 0.0;
    r.max_abs_L_on_curve = 0.0;
    r.min_abs_M = std::numeric_limits<double>::infinity();
    int l_pos = 0, l_neg = 0, n_pos = 0, n_neg = 0;
    std::vector<double> L0(c.nt);
    // Charts that swap the native axes reverse orientation; bijectivity only
    // needs the Jacobian to keep the sign it has at the first node.
    const double jsign = chart_forms(c, 0, 0).jacobian < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < c.nx; ++i)
        for (int j = 0; j < c.nt; ++j) {
            const ChartForms f = chart_forms(c, i, j);
            r.form_scale = std::max(r.form_scale, std::sqrt(f.L * f.L + 2 * f.M * f.M + f.N * f.N));
            r.min_jacobian = std::min(r.min_jacobian, jsign * f.jacobian);
            r.max_abs_M = std::max(r.max_abs_M, std::abs(f.M));
            r.min_abs_M = std::min(r.min_abs_M, std::abs(f.M));
            (f.N > 0.0 ? n_pos : n_neg)++;
            if (j == 0) r.max_abs_L_on_curve = std::max(r.max_abs_L_on_curve, std::abs(f.L));
            else (f.L > 0.0 ? l_pos : l_neg)++;
            if (i == 0) L0[j] = f.L;
        }
    r.wrap_mismatch = 0.0;
    if (c.periodic_x)
        for (int j = 0; j < c.nt; ++j) {
            const ParamPoint a = c.node(c.nx, j), b = c.node(0, j);
            r.wrap_mismatch = std::max(r.wrap_mismatch, std::hypot(a.u - b.u - c.period_shift[0],
                                                                   a.v - b.v - c.period_shift[1]));
        }
    r.N_sign = n_neg == 0 ? 1 : (n_pos == 0 ? -1 : 0);
    r.L_off_sign = l_neg == 0 ? 1 : (l_pos == 0 ? -1 : 0);
    r.dtL_origin = d1_4([&](int k) { return L0[k]; }, 0, c.nt, c.ht());
    r.pattern = SignPattern::None;
    if (c.kind == ChartKind::AsymptoticAdapted) {
        const double tiny = 1e-12 * r.form_scale;
        const bool curve_ok = r.max_abs_L_on_curve <= 1e-8 * std::max(1.0, r.form_scale);
        if (curve_ok && r.min_abs_M > tiny) {
            if (r.L_off_sign < 0 && r.dtL_origin < 0.0 && r.N_sign > 0) r.pattern = SignPattern::NegativeL;
            if (r.L_off_sign > 0 && r.dtL_origin > 0.0 && r.N_sign < 0) r.pattern = SignPattern::PositiveL;
        }
    }
    return r;
}

Certificate chart_certificate(const Chart& c) {
    const Certificate r = compute_certificate(c, c.certificate);
    const Certificate& s = c.certificate;
    const double scale = std::max(1.0, s.form_scale);
    auto off = [&](double a, double b) { return std::abs(a - b) > s.tol * scale; };
    std::string bad;
    if (off(r.form_scale, s.form_scale)) bad += " form_scale";
    if (off(r.min_jacobian, s.min_jacobian)) bad += " min_jacobian";
    if (off(r.wrap_mismatch, s.wrap_mismatch)) bad += " wrap_mismatch";
    if (off(r.max_abs_M, s.max_abs_M)) bad += " max_abs_M";
    if (c.kind == ChartKind::AsymptoticAdapted) {
        if (r.pattern != s.pattern) bad += " pattern";
        if (r.L_off_sign != s.L_off_sign) bad += " L_off_sign";
        if (r.N_sign != s.N_sign) bad += " N_sign";
        if (off(r.max_abs_L_on_curve, s.max_abs_L_on_curve)) bad += " L_on_curve";
        if (off(r.dtL_origin, s.dtL_origin)) bad += " dtL_origin";
        if (off(r.min_abs_M, s.min_abs_M)) bad += " min_abs_M";
    }
    if (!bad.empty()) throw CertificateError("stored certificate disagrees with the chart:" + bad);
    return r;
}

YSigmaCheck y_sigma_law(const Chart& c, const std::vector<double>& sigmas, int nodes) {
    YSigmaCheck r;
    const int total = c.nx * c.nt;
    const int n = std::min(nodes, total);
    for (int k = 0; k < n; ++k) {
        const int idx = static_cast<int>((static_cast<long long>(k) * total) / n);
        const int i = idx / c.nt, j = idx % c.nt;
        const ChartForms f = chart_forms(c, i, j);
        const double detI = f.E * f.G - f.F * f.F;
        const double K = f.native.K;
        const double root = std::sqrt(std::max(0.0, -K * detI));
        double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
        for (double s : sigmas) {
            const double y0 = f.N, y1 = -f.M + s * root;
            const double ii = f.L * y0 * y0 + 2 * f.M * y0 * y1 + f.N * y1 * y1;
            if (std::abs(std::abs(s) - 1.0) < 1e-15) {
                const double mag = std::sqrt(f.L * f.L + 2 * f.M * f.M + f.N * f.N) * (y0 * y0 + y1 * y1);
                r.max_null_residual = std::max(r.max_null_residual, std::abs(ii) / mag);
                continue;
            }
            const double law = (1.0 - s * s) * f.N * K * detI;
            r.max_law_deviation = std::max(r.max_law_deviation, std::abs(ii - law) / std::abs(law));
            const double ratio = ii / (1.0 - s * s);
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
        }
        if (rmax >= rmin)
            r.max_ratio_spread = std::max(r.max_ratio_spread, (rmax - rmin) / std::max(std::abs(rmax), std::abs(rmin)));
        ++r.nodes;
    }
    return r;
}

namespace {

nlohmann::json certificate_json(const Certificate& c) {
    return {{"kind", to_string(c.kind)},
            {"form_scale", c.form_scale},
            {"min_jacobian", c.min_jacobian},
            {"wrap_mismatch", c.wrap_mismatch},
            {"max_abs_M", c.max_abs_M},
            {"pattern", to_string(c.pattern)},
            {"max_abs_L_on_curve", c.max_abs_L_on_curve},
            {"L_off_sign", c.L_off_sign},
            {"dtL_origin", c.dtL_origin},
            {"N_sign", c.N_sign},
            {"min_abs_M", c.min_abs_M},
            {"curvature_line_sign", c.curvature_line_sign},
            {"prelim_N_positive", c.prelim_N_positive},
            {"prelim_M_negative", c.prelim_M_negative},
            {"x_flipped", c.x_flipped},
            {"sigma_min", c.sigma_min},
            {"sigma_max", c.sigma_max},
            {"closure_residual", c.closure_residual},
            {"return_offset", c.return_offset},
            {"tol", c.tol}};
}

ChartKind kind_from(const std::string& s) {
    if (s == "m-zero") return ChartKind::MZero;
    if (s == "asymptotic-adapted") return ChartKind::AsymptoticAdapted;
    throw PreconditionError("unknown chart kind '" + s + "'");
}

SignPattern pattern_from(const std::string& s) {
    if (s == "negative-L") return SignPattern::NegativeL;
    if (s == "positive-L") return SignPattern::PositiveL;
    return SignPattern::None;
}

Certificate certificate_from(const nlohmann::json& j) {
    Certificate c;
    c.kind = kind_from(j.at("kind"));
    c.form_scale = j.at("form_scale");
    c.min_jacobian = j.at("min_jacobian");
    c.wrap_mismatch = j.at("wrap_mismatch");
    c.max_abs_M = j.at("max_abs_M");
    c.pattern = pattern_from(j.at("pattern"));
    c.max_abs_L_on_curve = j.at("max_abs_L_on_curve");
    c.L_off_sign = j.at("L_off_sign");
    c.dtL_origin = j.at("dtL_origin");
    c.N_sign = j.at("N_sign");
    c.min_abs_M = j.at("min_abs_M");
    c.curvature_line_sign = j.at("curvature_line_sign");
    c.prelim_N_positive = j.at("prelim_N_positive");
    c.prelim_M_negative = j.at("prelim_M_negative");
    c.x_flipped = j.at("x_flipped");
    c.sigma_min = j.at("sigma_min");
    c.sigma_max = j.at("sigma_max");
    c.closure_residual = j.at("closure_residual");
    c.return_offset = j.at("return_offset");
    c.tol = j.at("tol");
    return c;
}

}  // namespace

void write_chart(const Chart& c, std::ostream& json, std::ostream& csv) {
    nlohmann::json h{{"kind", to_string(c.kind)},
                     {"nx", c.nx},
                     {"nt", c.nt},
                     {"x_lo", c.x_lo},
                     {"x_hi", c.x_hi},
                     {"t_lo", c.t_lo},
                     {"t_hi", c.t_hi},
                     {"periodic_x", c.periodic_x},
                     {"period_shift", c.period_shift},
                     {"along_axis", c.along_axis},
                     {"source", c.source ? c.source->describe() : std::string()},
                     {"certificate", certificate_json(c.certificate)}};
    json << h.dump(2) << '\n';
    csv << "x,t,u,v\n" << std::setprecision(17);
    for (int i = 0; i < c.columns(); ++i)
        for (int j = 0; j < c.nt; ++j) {
            const ParamPoint& p = c.node(i, j);
            csv << c.x_at(i) << ',' << c.t_at(j) << ',' << p.u << ',' << p.v << '\n';
        }
}

Chart read_chart(std::istream& json, std::istream& csv, std::shared_ptr<const FormSource> source) {
    const nlohmann::json h = nlohmann::json::parse(json);
    Chart c;
    c.kind = kind_from(h.at("kind"));
    c.nx = h.at("nx");
    c.nt = h.at("nt");
    c.x_lo = h.at("x_lo");
    c.x_hi = h.at("x_hi");
    c.t_lo = h.at("t_lo");
    c.t_hi = h.at("t_hi");
    c.periodic_x = h.at("periodic_x");
    c.period_shift = h.at("period_shift");
    c.along_axis = h.at("along_axis");
    c.certificate = certificate_from(h.at("certificate"));
    c.source = std::move(source);
    std::string line;
    std::getline(csv, line);
    if (line != "x,t,u,v") throw PreconditionError("chart node table must start with 'x,t,u,v'");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double v[4];
        char sep;
        row >> v[0] >> sep >> v[1] >> sep >> v[2] >> sep >> v[3];
        if (!row) throw PreconditionError("malformed chart node row '" + line + "'");
        c.nodes.push_back({v[2], v[3]});
    }
    if (static_cast<int>(c.nodes.size()) != c.columns() * c.nt)
        throw PreconditionError("chart node count does not match the header");
    return c;
}

}  // namespace tightkit
