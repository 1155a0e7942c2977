#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tightkit/curve.hpp"
#include "tightkit/forms.hpp"

namespace tightkit {

enum class ChartKind { MZero, AsymptoticAdapted };

// Sign patterns of the second form in a closed-curve chart, for t > 0:
// NegativeL is L(x,0) = 0, L < 0, L_t(0,0) < 0, N > 0, |M| > 0;
// PositiveL is the mirror with L > 0, L_t(0,0) > 0, N < 0.
enum class SignPattern { None, NegativeL, PositiveL };

std::string to_string(ChartKind k);
std::string to_string(SignPattern p);

struct Certificate {
    ChartKind kind = ChartKind::MZero;
    double form_scale = 0.0;    // max |II| over the nodes, in chart components
    double min_jacobian = 0.0;  // min det d(u,v)/d(x,t) over the nodes, sign of the first node taken as positive
    double wrap_mismatch = 0.0; // closed charts: seam column against the first column

    // M-zero charts.
    double max_abs_M = 0.0;

    // Closed-curve charts.
    SignPattern pattern = SignPattern::None;
    double max_abs_L_on_curve = 0.0;
    int L_off_sign = 0;         // sign of L on every t > 0 node, 0 if mixed
    double dtL_origin = 0.0;
    int N_sign = 0;
    double min_abs_M = 0.0;

    // Construction record of a closed-curve chart (not recomputable from nodes).
    int curvature_line_sign = 0;    // +1 x-curves have positive normal curvature
    bool prelim_N_positive = false; // N of the preliminary chart has the line sign everywhere
    bool prelim_M_negative = false; // preliminary M < 0 on the curve
    bool x_flipped = false;         // curve orientation was reversed to get M < 0
    double sigma_min = 0.0, sigma_max = 0.0;
    double closure_residual = 0.0;
    double return_offset = 0.0;     // d' - d of the case-deciding trace

    double tol = 1e-6;  // relative tolerance of the mismatch check
};

// Node table (x_i, t_j) -> native (u, v). Closed charts are periodic in x and
// carry one seam column i = nx equal to column 0 shifted by the native period.
struct Chart {
    ChartKind kind = ChartKind::MZero;
    int nx = 0, nt = 0;
    double x_lo = 0.0, x_hi = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    bool periodic_x = false;
    std::array<double, 2> period_shift{0.0, 0.0};
    int along_axis = 0;  // M-zero charts: native axis that becomes x
    std::vector<ParamPoint> nodes;  // (nx + periodic_x) * nt, index i * nt + j
    std::shared_ptr<const FormSource> source;
    Certificate certificate;

    int columns() const { return nx + (periodic_x ? 1 : 0); }
    double hx() const { return (x_hi - x_lo) / (periodic_x ? nx : nx - 1); }
    double ht() const { return (t_hi - t_lo) / (nt - 1); }
    double x_at(int i) const { return x_lo + i * hx(); }
    double t_at(int j) const { return t_lo + j * ht(); }
    const ParamPoint& node(int i, int j) const { return nodes[static_cast<std::size_t>(i) * nt + j]; }
    ParamPoint& node(int i, int j) { return nodes[static_cast<std::size_t>(i) * nt + j]; }
    // Node with periodic wrap in x (any integer i for closed charts).
    ParamPoint wrapped(int i, int j) const;

    // Degree-5 tensor interpolation of the node table.
    ParamPoint to_surface(double x, double t) const;
    // Newton inverse of to_surface; empty outside the strip.
    std::optional<ParamPoint> to_chart(ParamPoint p) const;
};

// First and second forms in chart components at a node, with the Jacobian
// taken from differences of the node table.
struct ChartForms {
    double E = 0.0, F = 0.0, G = 0.0;
    double L = 0.0, M = 0.0, N = 0.0;
    double jacobian = 0.0;
    FundamentalData native;
};
ChartForms chart_forms(const Chart& c, int i, int j);

// Recomputes every recomputable field from the nodes and the source. Throws
// CertificateError if it disagrees with c.certificate.
Certificate chart_certificate(const Chart& c);
// Same computation without the comparison; used while building.
Certificate compute_certificate(const Chart& c, const Certificate& record);

struct MZeroControls {
    double width = 0.2;      // side of the square strip, parameter units
    int nx = 41;
    int nt = 41;
    double min_width = 1e-3;
    double parabolic_tol = 1e-6;  // |LN - M^2| / |II|^2 at the base point
};

// Characteristics of t_x - (M/N) t_t = 0 through the native point p. The
// native axis along the parabolic direction becomes x; t(x_p, .) is the
// offset of the other native coordinate.
Chart m_zero_chart(const Surface& s, ParamPoint p, const MZeroControls& ctl = {});
Chart m_zero_chart(std::shared_ptr<const FormSource> src, ParamPoint p, const MZeroControls& ctl = {});

struct AdaptedControls {
    int side = +1;            // +1 builds on the left of the curve, -1 on the right
    double width = 0.2;       // t extent
    int nx = 128;
    int nt = 17;
    int prelim_nt = 81;
    double min_width = 1e-3;
    bool rebase = true;       // move x = 0 to the maximiser of |L_t(x,0)|
    double invariant_tol = 1e-8;
    double transversal_tol = 1e-3;  // min angle between a principal direction and the curve
};

// Adapted chart near a closed asymptotic curve: x-curves are lines of
// curvature labelled by arclength along the curve, t-levels are closed curves
// tangent to Y_sigma with one sigma per level.
Chart asymptotic_adapted_chart(std::shared_ptr<const FormSource> src, const TracedCurve& closed_curve,
                               const AdaptedControls& ctl = {});
Chart asymptotic_adapted_chart(const PrescribedForms& src, const TracedCurve& closed_curve,
                               const AdaptedControls& ctl = {});

// II(Y_s, Y_s) against (1 - s^2) N K det I at chart nodes, with
// Y_s = N d_x + (-M + s sqrt(-K det I)) d_t in chart components.
struct YSigmaCheck {
    int nodes = 0;
    double max_law_deviation = 0.0;  // relative, over |s| < 1
    double max_null_residual = 0.0;  // |II(Y_s,Y_s)| / (|II| |Y_s|^2) for |s| = 1
    double max_ratio_spread = 0.0;   // II(Y_s,Y_s)/(1 - s^2) across s, relative
};
YSigmaCheck y_sigma_law(const Chart& c, const std::vector<double>& sigmas, int nodes = 200);

// JSON header plus CSV node table x,t,u,v.
void write_chart(const Chart& c, std::ostream& json, std::ostream& csv);
// The source is not serialised; attach it to recompute the certificate.
Chart read_chart(std::istream& json, std::istream& csv, std::shared_ptr<const FormSource> source = nullptr);

}  // namespace tightkit
