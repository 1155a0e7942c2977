#pragma once

#include <vector>

#include "tightkit/curve.hpp"
#include "tightkit/integrals.hpp"

namespace tightkit {

struct ParabolicCurve {
    int id = 0;
    TracedCurve curve;              // K = 0 level set, refined onto the zero
    bool closable = true;           // false when the polyline ran into an open end
    double min_abs_H = 0.0;
    bool monotone_sign_change = false;
    std::vector<int> adjacent_components;  // S- components it bounds
};

struct NegativeComponent {
    int id = 0;
    std::vector<int> boundary_curves;
    double area = 0.0;
    int node_count = 0;
};

struct RegionDecomposition {
    std::vector<ParabolicCurve> parabolic_curves;
    std::vector<NegativeComponent> negative_components;
    int mask_nu = 0;
    int mask_nv = 0;
    int euler_characteristic = 0;
    double collar = 0.0;
    std::vector<std::string> warnings;
};

struct DecomposeControls {
    int nu = 256;
    int nv = 256;
    double collar_cells = 10.0;  // probe half-width in grid spacings
    int probe_samples = 21;
};

RegionDecomposition decompose_regions(const Surface& s, const DecomposeControls& ctl = {});

}  // namespace tightkit
