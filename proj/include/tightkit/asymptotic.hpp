#pragma once

#include <array>
#include <optional>
#include <vector>

#include "tightkit/curve.hpp"
#include "tightkit/forms.hpp"

namespace tightkit {

// Null lines of the second fundamental form. Family sigma = +-1 is the line of
// (N, -M + sigma D) with D = sqrt(M^2 - L N); flipping the orientation swaps
// the two families.
struct AsymptoticDirections {
    int count = 0;                          // 0 (K > 0), 1 (parabolic), 2 (K < 0)
    std::array<std::array<double, 2>, 2> dir{};  // unit in the first form; dir[0] is family +1
};

// Throws PreconditionError("undefined field") when II vanishes identically.
AsymptoticDirections asymptotic_directions(const FundamentalData& fd, double parabolic_tol = 1e-12);

// Null line of one family in parameter components, unit in the first form.
// D is clamped at zero so the field stays defined on the parabolic curve.
std::array<double, 2> family_direction(const FundamentalData& fd, int family);

struct TraceControls {
    double rel_tol = 1e-11;
    double abs_tol = 1e-12;
    double max_step = 0.05;
    int max_steps = 200000;
    double max_length = 500.0;
    double parabolic_threshold = 2e-3;  // stop when D / |II| drops below this
    double closure_position = 1e-6;
    double closure_direction = 1e-4;     // radians
    bool two_sided = true;              // also trace backwards from an interior start
    int direction = +1;                 // +1 follows the family vector, -1 reverses it
    bool detect_spiral = true;
};

// Traces the asymptotic curve of the given family through start. An interior
// start is traced both ways (unless two_sided is false); a start on a
// parabolic curve is found by shooting from a point just inside S-. Endpoints
// on parabolic curves are located by extrapolating D to zero.
TracedCurve trace(const FormSource& src, ParamPoint start, int family, const TraceControls& ctl = {});
TracedCurve trace(const Surface& s, ParamPoint start, int family, const TraceControls& ctl = {});

// Values recorded by the tracer in addition to the samples.
struct TraceEnd {
    bool parabolic = false;
    double tangency_angle = 0.0;  // angle to the parabolic curve, radians
};

struct TraceDiagnostics {
    TraceEnd head, tail;                      // first and last sample
    std::optional<double> spiral_limit;       // transversal value the curve spirals to
};

// Same as trace but also reports endpoint diagnostics.
TracedCurve trace_with_diagnostics(const FormSource& src, ParamPoint start, int family,
                                   const TraceControls& ctl, TraceDiagnostics& diag);

}  // namespace tightkit
