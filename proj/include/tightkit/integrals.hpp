#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tightkit/forms.hpp"

namespace tightkit {

// Periodic axes use the equispaced (trapezoid) rule; the others composite
// 4-point Gauss-Legendre. Along each u-line the integrand is split at the
// roots of K so the sign regions are integrated without smearing.
struct QuadratureSpec {
    int nu = 256;
    int nv = 256;
    double tol = 1e-6;
    int max_resolution = 2048;  // per axis, for the refinement loop
    bool split_interface = true;
};

using Integrand = std::function<double(const FundamentalData&)>;

enum class RegionKind { All, Positive, Negative, Custom };

struct Region {
    RegionKind kind = RegionKind::All;
    std::function<bool(const FundamentalData&)> predicate;  // Custom only

    static Region all() { return {}; }
    static Region positive() { return {RegionKind::Positive, {}}; }
    static Region negative() { return {RegionKind::Negative, {}}; }
    static Region custom(std::function<bool(const FundamentalData&)> p) {
        return {RegionKind::Custom, std::move(p)};
    }
};

struct IntegralEstimate {
    double value = 0.0;
    double error = 0.0;  // |I(n) - I(n/2)|
    int nu = 0;
    int nv = 0;
};

// Refines by doubling until the estimate is below spec.tol; throws
// ConvergenceError past spec.max_resolution.
IntegralEstimate surface_integral(const Surface& s, const Integrand& f, const Region& region,
                                  const QuadratureSpec& spec = {});

struct TightnessReport {
    bool tight = false;
    double positive_curvature = 0.0;      // integral of K over K > 0
    double total_absolute_curvature = 0.0;
    double total_curvature = 0.0;
    double gauss_bonnet_defect = 0.0;     // total_curvature - 2 pi chi
    double lower_bound = 0.0;             // 2 pi (4 - chi)
    double error_estimate = 0.0;
    double area_positive = 0.0;
    double area_negative = 0.0;
    double area_total = 0.0;
    int euler_characteristic = 0;
    int nu = 0;
    int nv = 0;
    double tol = 0.0;
};

TightnessReport tightness_report(const Surface& s, const QuadratureSpec& spec = {});

}  // namespace tightkit
