#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tightkit/forms.hpp"
#include "tightkit/regions.hpp"

namespace tightkit {

// Slope dt/dx of a curve family in an annular chart, x periodic. An empty
// value means the family is undefined there (the curve has left the region).
using SlopeField = std::function<std::optional<double>(double x, double t)>;

struct AnnularChart {
    SlopeField slope;
    double x0 = 0.0;
    double period = kTwoPi;
    double t_lo = -1.0;
    double t_hi = 1.0;
};

// Asymptotic family of a form source as a slope field. With swap_axes the
// native v is the periodic x and u is t (bands of a surface of revolution).
AnnularChart chart_from_forms(const FormSource& src, int family, bool swap_axes, double t_lo, double t_hi,
                              double parabolic_threshold = 1e-6);

// dt/dx = -kappa (1 + sin(x)/2) prod (t - t_i): every t = t_i is a closed
// orbit, alternately attracting and repelling.
SlopeField synthetic_cycles(std::vector<double> t_stars, double kappa = 1.0);

struct ReturnMapSample {
    double in = 0.0;
    double out = 0.0;
    int windings = 1;
    bool exited = false;
};

struct FixedPoint {
    double t = 0.0;
    double residual = 0.0;      // out - in at t
    double multiplier = 0.0;    // derivative of the return map
    double bracket = 0.0;       // width of the sampling interval it was found in
    double nearest = 0.0;       // distance to the nearest other fixed point (inf if alone)
};

struct ReturnMapControls {
    int samples = 64;
    double fixed_tol = 1e-10;
    double rel_tol = 1e-13;
    double abs_tol = 1e-14;
    double edge_inset = 1e-9;
};

struct ReturnMapResult {
    std::vector<ReturnMapSample> samples;
    std::vector<ReturnMapSample> backward;  // same inputs under the reversed flow
    std::vector<FixedPoint> fixed_points;
    bool degenerate = false;  // out == in for every returning sample
};

// First-return map x0 -> x0 + period. Throws ConvergenceError if no sample returns
// and none exits either (integration failure).
std::optional<double> first_return(const AnnularChart& chart, double t_in, const ReturnMapControls& ctl = {});
// Repelling orbits are found through the reversed flow, whose fixed points are
// the same with inverse multipliers.
ReturnMapResult return_map(const AnnularChart& chart, const ReturnMapControls& ctl = {});
AnnularChart reversed(const AnnularChart& chart);

struct SubAnnulus {
    double t_lo = 0.0, t_hi = 0.0;
    int drift = 0;       // +1 orbits move to t_hi, -1 to t_lo, 0 none
    bool exits = false;  // orbits leave through a parabolic boundary
};

struct CylinderDecomposition {
    std::vector<FixedPoint> closed_curves;  // ordered by t
    std::vector<SubAnnulus> regions;        // m = closed_curves + 1
    bool degenerate = false;
    bool unresolved_cluster = false;
};

CylinderDecomposition cylinder_decomposition(const AnnularChart& chart, const ReturnMapControls& ctl = {});

// Band component of a decomposed surface whose boundary curves are both
// u = const circles; the band is charted with x = v, t = u.
CylinderDecomposition cylinder_decomposition(const Surface& s, const RegionDecomposition& regions,
                                             int component, int family, const ReturnMapControls& ctl = {});

}  // namespace tightkit
