#pragma once

#include <array>

#include "tightkit/curve.hpp"
#include "tightkit/forms.hpp"

namespace tightkit {

struct CurveFrame {
    double kg = 0.0;     // geodesic curvature
    double kn = 0.0;     // II(Z,Z), Z the unit normal to the curve in the surface
    double K = 0.0;
    double sqrtE = 0.0;
    std::array<double, 2> Z{};
};

// Frame of a unit-speed curve with parameter velocity t and acceleration a.
CurveFrame frame_at(const FundamentalData& fd, std::array<double, 2> t, std::array<double, 2> a);

// Accelerations come from the asymptotic field for curves with a family tag
// and from differences of the sampled tangents otherwise.
CurveFrame curve_frame(const FormSource& src, const TracedCurve& c, std::size_t index);
CurveFrame curve_frame(const Surface& s, const TracedCurve& c, std::size_t index);

struct InvariantRecord {
    double intrinsic = 0.0;    // integral of k_g k_n |K|^{-1/2} ds
    double coordinate = 0.0;   // integral of M^{-1} L_t dx
    double relation_sign = 0.0;  // coordinate = relation_sign * intrinsic, equal to -sign(M)
    double discrepancy = 0.0;
    double orientation = 1.0;
    int samples = 0;
};

struct InvariantControls {
    double t0 = 0.0;        // the curve is t = t0 in the annulus chart
    int samples = 256;      // equispaced in x over one period
    double fd_step = 1e-4;  // centred difference for L_t
    double zero_tol = 1e-8; // |L(x,t0)| allowed on the curve
};

// Annulus chart mode: x is the periodic first coordinate and the curve is t = t0.
InvariantRecord rigidity_invariant(const FormSource& annulus, const InvariantControls& ctl = {});

// Closed traced asymptotic curve mode. The coordinate side uses the tube chart
// (s, t) -> c(s) + t Z(s) built around the curve.
InvariantRecord rigidity_invariant(const FormSource& src, const TracedCurve& closed_curve,
                                   const InvariantControls& ctl = {});

}  // namespace tightkit
