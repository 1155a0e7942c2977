#pragma once

#include <array>
#include <string>
#include <vector>

#include "tightkit/surface.hpp"

namespace tightkit {

struct CurveSample {
    ParamPoint p;
    double du = 0.0, dv = 0.0;  // unit tangent in the first form, parameter components
    double s = 0.0;             // arclength from the first sample
};

// Polyline in the parameter domain. Points are not reduced modulo the periods,
// so windings can be read off from the first and last sample.
struct TracedCurve {
    std::vector<CurveSample> samples;
    bool closed = false;
    std::array<int, 2> winding{0, 0};
    int family = 0;              // +1 / -1 asymptotic branch, 0 for level sets
    std::string termination;     // why tracing stopped

    double length() const { return samples.empty() ? 0.0 : samples.back().s; }
    const CurveSample& front() const { return samples.front(); }
    const CurveSample& back() const { return samples.back(); }
};

}  // namespace tightkit
