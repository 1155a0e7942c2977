#pragma once

#include <vector>

#include "tightkit/chart.hpp"

namespace tightkit {

// Orders of vanishing across a parabolic curve at q, read in the M-zero chart
// at q from least-squares polynomial fits in t along x = x_q.
struct VanishingOrder {
    int b = -1;        // first k >= 1 with d^k K / dt^k != 0, -1 past max_order
    int r = -1;        // order of N
    int l_order = -1;  // order of L
    bool exceeds_max_order = false;
    bool consistent = false;  // r < b and L = O(t^{r+1})
    std::vector<double> K_taylor;  // d^k K / dt^k / k! for k = 0..max_order
};

VanishingOrder vanishing_order(const Surface& s, ParamPoint q, int max_order = 5, const MZeroControls& ctl = {});
VanishingOrder vanishing_order(std::shared_ptr<const FormSource> src, ParamPoint q, int max_order = 5,
                               const MZeroControls& ctl = {});

}  // namespace tightkit
