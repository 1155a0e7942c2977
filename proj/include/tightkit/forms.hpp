#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "tightkit/surface.hpp"

namespace tightkit {

// First and second fundamental forms at a point plus the first derivatives
// of the metric, which is all the Christoffel symbols need.
struct FormSample {
    double E = 1.0, F = 0.0, G = 1.0;
    double Eu = 0.0, Ev = 0.0, Fu = 0.0, Fv = 0.0, Gu = 0.0, Gv = 0.0;
    double L = 0.0, M = 0.0, N = 0.0;
};

// Second-kind Christoffel symbols, named g<upper><lower><lower>.
struct Christoffel {
    double g111 = 0.0, g211 = 0.0;
    double g112 = 0.0, g212 = 0.0;
    double g122 = 0.0, g222 = 0.0;
};

// Coefficients of the Codazzi equations
//   L_t - M_x + a L + b M + c N = 0,  M_t - N_x + alpha L + beta M + gamma N = 0
// with x the first and t the second coordinate.
struct CodazziCoefficients {
    double a = 0.0, b = 0.0, c = 0.0;
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
};

struct FundamentalData {
    double E = 0.0, F = 0.0, G = 0.0;
    double L = 0.0, M = 0.0, N = 0.0;
    double detI = 0.0;
    double K = 0.0;
    double H = 0.0;
    double k1 = 0.0, k2 = 0.0;  // k1 >= k2
    Christoffel christoffels;
    CodazziCoefficients coeffs;
    double orientation = 1.0;  // sign convention the second form was computed with
};

// Anything that can supply forms on a 2D parameter domain: an immersed surface
// or forms prescribed directly on an annulus without an immersion.
class FormSource {
public:
    virtual ~FormSource() = default;
    virtual FormSample sample(ParamPoint p) const = 0;
    virtual Domain domain() const = 0;
    virtual double orientation_sign() const { return 1.0; }
    virtual std::string describe() const = 0;
};

class SurfaceForms final : public FormSource {
public:
    explicit SurfaceForms(Surface s) : surface_(std::move(s)) {}
    FormSample sample(ParamPoint p) const override;
    Domain domain() const override { return surface_.domain(); }
    double orientation_sign() const override { return tightkit::orientation_sign(surface_.orientation()); }
    std::string describe() const override { return surface_.family_name(); }
    const Surface& surface() const { return surface_; }

private:
    Surface surface_;
};

using ScalarField = std::function<double(double x, double t)>;

// Forms given as functions of (x,t). Metric derivatives are taken with a
// fourth-order centered difference of step fd_step.
class PrescribedForms final : public FormSource {
public:
    struct Fields {
        ScalarField E, F, G, L, M, N;
    };

    PrescribedForms(Fields fields, Domain domain, std::string name, double fd_step = 1e-3);

    FormSample sample(ParamPoint p) const override;
    Domain domain() const override { return domain_; }
    std::string describe() const override { return name_; }
    const Fields& fields() const { return fields_; }

    // Same metric, second form negated (the orientation mirror).
    PrescribedForms mirrored() const;
    // Reflect t -> -t so that the t < 0 side becomes t > 0.
    PrescribedForms reflected_t() const;

    // Annulus x in [0, 2 pi) periodic, t in [-t_extent, t_extent], with
    // E = 1 + t (1 + sin x), F = 0, G = 1, M = -1, N = 1 and L(x,0) = 0;
    // L_t(x,0) is synthesized from the first Codazzi equation and a
    // quadratic term l_tt t^2 / 2 is added off the curve.
    static PrescribedForms annulus(double t_extent = 0.5, double l_tt = -1.0);
    // E = G = 1, F = 0, M = -1, N = 1, L = 0.
    static PrescribedForms flat_annulus(double t_extent = 0.5);

    // Builds L(x,t) = L0(x) + t Lt(x) + l_tt t^2/2 where Lt(x) solves the first
    // Codazzi equation on t = 0 for the given metric, M, N and L0.
    static ScalarField synthesize_l(const Fields& base, ScalarField L0, double l_tt,
                                    double fd_step = 1e-3);

private:
    Fields fields_;
    Domain domain_;
    std::string name_;
    double h_;
};

struct FormTolerances {
    double eval_rel = 1e-9;      // relative evaluation tolerance
    double umbilic_rel = 1e-9;   // |k1 - k2| below this (relative) counts as umbilic
};

Christoffel christoffel_symbols(const FormSample& s);
CodazziCoefficients codazzi_coefficients(const Christoffel& g);

// Throws DegenerateMetric when E <= 0 or det I <= 0.
FundamentalData fundamental_data(const FormSample& s, double orientation = 1.0);
FormSample form_sample(const Jet& j, double orientation = 1.0);

FundamentalData fundamental_data(const Surface& s, ParamPoint p);
FundamentalData fundamental_data(const FormSource& src, ParamPoint p);

struct ConnectionData {
    Christoffel christoffels;
    CodazziCoefficients coeffs;
};
ConnectionData connection_coeffs(const FormSource& src, ParamPoint p);

// Principal direction in parameter components. Empty at umbilics.
struct PrincipalFrame {
    double k1 = 0.0, k2 = 0.0;
    std::optional<std::array<double, 2>> dir1;  // for k1 (larger)
    std::optional<std::array<double, 2>> dir2;  // for k2
    bool umbilic = false;
};
PrincipalFrame principal_frame(const FundamentalData& fd, const FormTolerances& tol = {});

// Second fundamental form and metric applied to parameter vectors.
double second_form(const FundamentalData& fd, double du, double dv);
double second_form(const FundamentalData& fd, double du1, double dv1, double du2, double dv2);
double first_form(const FundamentalData& fd, double du, double dv);
double first_form(const FundamentalData& fd, double du1, double dv1, double du2, double dv2);

struct CodazziResiduals {
    double gauss = 0.0;     // L N - M^2 - K_intrinsic det I
    double codazzi1 = 0.0;  // L_t - M_x + a L + b M + c N
    double codazzi2 = 0.0;  // M_t - N_x + alpha L + beta M + gamma N
    double max_abs() const;
};

// Centered differences of step h for L, M, N and for the Christoffels that
// enter the intrinsic Gaussian curvature.
CodazziResiduals codazzi_residuals(const FormSource& src, ParamPoint p, double h);
CodazziResiduals codazzi_residuals(const Surface& s, ParamPoint p, double h);

// Gaussian curvature from the metric alone, via centered differences of the
// Christoffel symbols.
double intrinsic_curvature(const FormSource& src, ParamPoint p, double h);

}  // namespace tightkit
