#include "tightkit/forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tightkit/error.hpp"

namespace tightkit {

FormSample form_sample(const Jet& j, double orientation) {
    FormSample s;
    s.E = dot(j.xu, j.xu);
    s.F = dot(j.xu, j.xv);
    s.G = dot(j.xv, j.xv);
    s.Eu = 2.0 * dot(j.xuu, j.xu);
    s.Ev = 2.0 * dot(j.xuv, j.xu);
    s.Fu = dot(j.xuu, j.xv) + dot(j.xu, j.xuv);
    s.Fv = dot(j.xuv, j.xv) + dot(j.xu, j.xvv);
    s.Gu = 2.0 * dot(j.xuv, j.xv);
    s.Gv = 2.0 * dot(j.xvv, j.xv);
    const Vec3 n = cross(j.xu, j.xv);
    const double len = norm(n);
    if (!(len > 0.0)) throw DegenerateMetric("X_u and X_v are parallel (non-immersed sample)");
    const Vec3 unit = n * (orientation / len);
    s.L = dot(j.xuu, unit);
    s.M = dot(j.xuv, unit);
    s.N = dot(j.xvv, unit);
    return s;
}

FormSample SurfaceForms::sample(ParamPoint p) const {
    return form_sample(eval_jet(surface_, p), orientation_sign());
}

PrescribedForms::PrescribedForms(Fields fields, Domain domain, std::string name, double fd_step)
    : fields_(std::move(fields)), domain_(domain), name_(std::move(name)), h_(fd_step) {}

namespace {

double d4(const ScalarField& f, double x, double t, bool along_x, double h) {
    auto at = [&](double s) { return along_x ? f(x + s, t) : f(x, t + s); };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

}  // namespace

FormSample PrescribedForms::sample(ParamPoint p) const {
    const double x = p.u, t = p.v;
    FormSample s;
    s.E = fields_.E(x, t);
    s.F = fields_.F(x, t);
    s.G = fields_.G(x, t);
    s.Eu = d4(fields_.E, x, t, true, h_);
    s.Ev = d4(fields_.E, x, t, false, h_);
    s.Fu = d4(fields_.F, x, t, true, h_);
    s.Fv = d4(fields_.F, x, t, false, h_);
    s.Gu = d4(fields_.G, x, t, true, h_);
    s.Gv = d4(fields_.G, x, t, false, h_);
    s.L = fields_.L(x, t);
    s.M = fields_.M(x, t);
    s.N = fields_.N(x, t);
    return s;
}

PrescribedForms PrescribedForms::mirrored() const {
    Fields f = fields_;
    auto neg = [](ScalarField g) { return ScalarField([g](double x, double t) { return -g(x, t); }); };
    f.L = neg(fields_.L);
    f.M = neg(fields_.M);
    f.N = neg(fields_.N);
    return PrescribedForms(std::move(f), domain_, name_ + "/mirrored", h_);
}

PrescribedForms PrescribedForms::reflected_t() const {
    // (x, s) with s = -t: E, G, L, N are unchanged as functions, F and M flip.
    auto refl = [](ScalarField g, double sign) {
        return ScalarField([g, sign](double x, double s) { return sign * g(x, -s); });
    };
    Fields f{refl(fields_.E, 1.0), refl(fields_.F, -1.0), refl(fields_.G, 1.0),
             refl(fields_.L, 1.0), refl(fields_.M, -1.0), refl(fields_.N, 1.0)};
    Domain d = domain_;
    d.v = {-domain_.v.hi, -domain_.v.lo, domain_.v.periodic};
    return PrescribedForms(std::move(f), d, name_ + "/reflected", h_);
}

ScalarField PrescribedForms::synthesize_l(const Fields& base, ScalarField L0, double l_tt,
                                          double fd_step) {
    // Lt = M_x - a L0 - b M - c N on t = 0.
    Fields b = base;
    auto lt = [b, L0, fd_step](double x) {
        FormSample s;
        s.E = b.E(x, 0.0);
        s.F = b.F(x, 0.0);
        s.G = b.G(x, 0.0);
        s.Eu = d4(b.E, x, 0.0, true, fd_step);
        s.Ev = d4(b.E, x, 0.0, false, fd_step);
        s.Fu = d4(b.F, x, 0.0, true, fd_step);
        s.Fv = d4(b.F, x, 0.0, false, fd_step);
        s.Gu = d4(b.G, x, 0.0, true, fd_step);
        s.Gv = d4(b.G, x, 0.0, false, fd_step);
        const CodazziCoefficients k = codazzi_coefficients(christoffel_symbols(s));
        const double mx = d4(b.M, x, 0.0, true, fd_step);
        return mx - k.a * L0(x, 0.0) - k.b * b.M(x, 0.0) - k.c * b.N(x, 0.0);
    };
    return [L0, lt, l_tt](double x, double t) {
        return L0(x, 0.0) + t * lt(x) + 0.5 * l_tt * t * t;
    };
}

PrescribedForms PrescribedForms::annulus(double t_extent, double l_tt) {
    Fields f;
    f.E = [](double x, double t) { return 1.0 + t * (1.0 + std::sin(x)); };
    f.F = [](double, double) { return 0.0; };
    f.G = [](double, double) { return 1.0; };
    f.M = [](double, double) { return -1.0; };
    f.N = [](double, double) { return 1.0; };
    f.L = synthesize_l(f, [](double, double) { return 0.0; }, l_tt);
    Domain d{{0.0, kTwoPi, true}, {-t_extent, t_extent, false}};
    return PrescribedForms(std::move(f), d, "prescribed-annulus");
}

PrescribedForms PrescribedForms::flat_annulus(double t_extent) {
    Fields f;
    f.E = [](double, double) { return 1.0; };
    f.F = [](double, double) { return 0.0; };
    f.G = [](double, double) { return 1.0; };
    f.L = [](double, double) { return 0.0; };
    f.M = [](double, double) { return -1.0; };
    f.N = [](double, double) { return 1.0; };
    Domain d{{0.0, kTwoPi, true}, {-t_extent, t_extent, false}};
    return PrescribedForms(std::move(f), d, "flat-annulus");
}

Christoffel christoffel_symbols(const FormSample& s) {
    const double det = s.E * s.G - s.F * s.F;
    const double inv = 1.0 / (2.0 * det);
    Christoffel g;
    g.g111 = (s.G * s.Eu - 2.0 * s.F * s.Fu + s.F * s.Ev) * inv;
    g.g211 = (2.0 * s.E * s.Fu - s.E * s.Ev - s.F * s.Eu) * inv;
    g.g112 = (s.G * s.Ev - s.F * s.Gu) * inv;
    g.g212 = (s.E * s.Gu - s.F * s.Ev) * inv;
    g.g122 = (2.0 * s.G * s.Fv - s.G * s.Gu - s.F * s.Gv) * inv;
    g.g222 = (s.E * s.Gv - 2.0 * s.F * s.Fv + s.F * s.Gu) * inv;
    return g;
}

CodazziCoefficients codazzi_coefficients(const Christoffel& g) {
    CodazziCoefficients c;
    c.a = -g.g112;
    c.b = g.g111 - g.g212;
    c.c = g.g211;
    c.alpha = -g.g122;
    c.beta = g.g112 - g.g222;
    c.gamma = g.g212;
    return c;
}

FundamentalData fundamental_data(const FormSample& s, double orientation) {
    FundamentalData fd;
    fd.E = s.E;
    fd.F = s.F;
    fd.G = s.G;
    fd.L = s.L;
    fd.M = s.M;
    fd.N = s.N;
    fd.detI = s.E * s.G - s.F * s.F;
    if (!(s.E > 0.0) || !(fd.detI > 0.0)) {
        std::ostringstream os;
        os << "E = " << s.E << ", det I = " << fd.detI;
        throw DegenerateMetric(os.str());
    }
    fd.K = (s.L * s.N - s.M * s.M) / fd.detI;
    fd.H = (s.E * s.N - 2.0 * s.F * s.M + s.G * s.L) / (2.0 * fd.detI);
    // Second form in an orthonormal frame so the discriminant is a sum of squares.
    const double f = s.F / s.E;
    const double h11 = s.L / s.E;
    const double h12 = (s.M - f * s.L) / std::sqrt(fd.detI);
    const double h22 = (s.N - 2.0 * f * s.M + f * f * s.L) * s.E / fd.detI;
    const double disc = std::hypot(0.5 * (h11 - h22), h12);
    fd.k1 = fd.H + disc;
    fd.k2 = fd.H - disc;
    fd.christoffels = christoffel_symbols(s);
    fd.coeffs = codazzi_coefficients(fd.christoffels);
    fd.orientation = orientation;
    return fd;
}

FundamentalData fundamental_data(const Surface& s, ParamPoint p) {
    const double o = orientation_sign(s.orientation());
    return fundamental_data(form_sample(eval_jet(s, p), o), o);
}

FundamentalData fundamental_data(const FormSource& src, ParamPoint p) {
    return fundamental_data(src.sample(p), src.orientation_sign());
}

ConnectionData connection_coeffs(const FormSource& src, ParamPoint p) {
    const FundamentalData fd = fundamental_data(src, p);
    return {fd.christoffels, fd.coeffs};
}

double second_form(const FundamentalData& fd, double du, double dv) {
    return fd.L * du * du + 2.0 * fd.M * du * dv + fd.N * dv * dv;
}
double second_form(const FundamentalData& fd, double du1, double dv1, double du2, double dv2) {
    return fd.L * du1 * du2 + fd.M * (du1 * dv2 + dv1 * du2) + fd.N * dv1 * dv2;
}
double first_form(const FundamentalData& fd, double du, double dv) {
    return fd.E * du * du + 2.0 * fd.F * du * dv + fd.G * dv * dv;
}
double first_form(const FundamentalData& fd, double du1, double dv1, double du2, double dv2) {
    return fd.E * du1 * du2 + fd.F * (du1 * dv2 + dv1 * du2) + fd.G * dv1 * dv2;
}

PrincipalFrame principal_frame(const FundamentalData& fd, const FormTolerances& tol) {
    PrincipalFrame pf;
    pf.k1 = fd.k1;
    pf.k2 = fd.k2;
    const double scale = std::max({std::abs(fd.k1), std::abs(fd.k2), 1e-300});
    if (fd.k1 - fd.k2 <= tol.umbilic_rel * scale) {
        pf.umbilic = true;
        return pf;
    }
    auto direction = [&](double k) -> std::array<double, 2> {
        // Null vector of II - k I; take whichever row is better conditioned.
        const double r1u = fd.L - k * fd.E, r1v = fd.M - k * fd.F;
        const double r2u = fd.M - k * fd.F, r2v = fd.N - k * fd.G;
        std::array<double, 2> d = (std::hypot(r1u, r1v) >= std::hypot(r2u, r2v))
                                      ? std::array<double, 2>{r1v, -r1u}
                                      : std::array<double, 2>{r2v, -r2u};
        const double len = std::sqrt(first_form(fd, d[0], d[1]));
        return {d[0] / len, d[1] / len};
    };
    pf.dir1 = direction(fd.k1);
    pf.dir2 = direction(fd.k2);
    return pf;
}

double CodazziResiduals::max_abs() const {
    return std::max({std::abs(gauss), std::abs(codazzi1), std::abs(codazzi2)});
}

double intrinsic_curvature(const FormSource& src, ParamPoint p, double h) {
    const FormSample c = src.sample(p);
    const Christoffel g = christoffel_symbols(c);
    const Christoffel gu_p = christoffel_symbols(src.sample({p.u + h, p.v}));
    const Christoffel gu_m = christoffel_symbols(src.sample({p.u - h, p.v}));
    const Christoffel gv_p = christoffel_symbols(src.sample({p.u, p.v + h}));
    const Christoffel gv_m = christoffel_symbols(src.sample({p.u, p.v - h}));
    const double d211_v = (gv_p.g211 - gv_m.g211) / (2.0 * h);
    const double d212_u = (gu_p.g212 - gu_m.g212) / (2.0 * h);
    const double EK = d211_v - d212_u + g.g111 * g.g212 + g.g211 * g.g222 - g.g112 * g.g211 -
                      g.g212 * g.g212;
    return EK / c.E;
}

CodazziResiduals codazzi_residuals(const FormSource& src, ParamPoint p, double h) {
    const FundamentalData fd = fundamental_data(src, p);
    const FormSample up = src.sample({p.u + h, p.v});
    const FormSample um = src.sample({p.u - h, p.v});
    const FormSample vp = src.sample({p.u, p.v + h});
    const FormSample vm = src.sample({p.u, p.v - h});
    const double Lt = (vp.L - vm.L) / (2.0 * h);
    const double Mt = (vp.M - vm.M) / (2.0 * h);
    const double Mx = (up.M - um.M) / (2.0 * h);
    const double Nx = (up.N - um.N) / (2.0 * h);
    const CodazziCoefficients& k = fd.coeffs;
    CodazziResiduals r;
    r.gauss = fd.L * fd.N - fd.M * fd.M - intrinsic_curvature(src, p, h) * fd.detI;
    r.codazzi1 = Lt - Mx + k.a * fd.L + k.b * fd.M + k.c * fd.N;
    r.codazzi2 = Mt - Nx + k.alpha * fd.L + k.beta * fd.M + k.gamma * fd.N;
    return r;
}

CodazziResiduals codazzi_residuals(const Surface& s, ParamPoint p, double h) {
    return codazzi_residuals(SurfaceForms(s), p, h);
}

}  // namespace tightkit
