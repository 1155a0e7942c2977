#pragma once

#include <algorithm>
#include <cmath>

namespace tightkit::detail {

// Lagrange weights for m equispaced nodes 0..m-1 evaluated at xi.
inline void lagrange_weights(double xi, int m, double* w) {
    for (int k = 0; k < m; ++k) {
        double p = 1.0;
        for (int l = 0; l < m; ++l)
            if (l != k) p *= (xi - l) / static_cast<double>(k - l);
        w[k] = p;
    }
}

// First stencil node of an m-point window centred at xi on 0..n-1.
inline int window_start(double xi, int m, int n) {
    const int s = static_cast<int>(std::floor(xi)) - (m / 2 - 1);
    return std::clamp(s, 0, n - m);
}

// Fourth-order first derivative at node i of f(0..n-1), one-sided near the ends.
template <class F>
double d1_4(F&& f, int i, int n, double h) {
    if (i == 0) return (-25 * f(0) + 48 * f(1) - 36 * f(2) + 16 * f(3) - 3 * f(4)) / (12 * h);
    if (i == 1) return (-3 * f(0) - 10 * f(1) + 18 * f(2) - 6 * f(3) + f(4)) / (12 * h);
    if (i == n - 1)
        return (25 * f(n - 1) - 48 * f(n - 2) + 36 * f(n - 3) - 16 * f(n - 4) + 3 * f(n - 5)) / (12 * h);
    if (i == n - 2)
        return (3 * f(n - 1) + 10 * f(n - 2) - 18 * f(n - 3) + 6 * f(n - 4) - f(n - 5)) / (12 * h);
    return (f(i - 2) - 8 * f(i - 1) + 8 * f(i + 1) - f(i + 2)) / (12 * h);
}

// Eighth-order central first derivative; f takes any integer index.
template <class F>
double d1_8(F&& f, int i, double h) {
    static constexpr double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    double s = 0.0;
    for (int k = 1; k <= 4; ++k) s += c[k - 1] * (f(i + k) - f(i - k));
    return s / h;
}

}  // namespace tightkit::detail
