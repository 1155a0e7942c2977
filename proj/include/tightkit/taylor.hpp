#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace tightkit {

// Truncated bivariate Taylor polynomial of total degree Order around a base
// point: sum c[i,j] du^i dv^j with i + j <= Order. Arithmetic on these values
// propagates exact partial derivatives, so parametrizations written once as
// templates yield their jets without hand differentiation.
template <int Order>
class Taylor2 {
public:
    static constexpr int kOrder = Order;
    static constexpr std::size_t kSize = (Order + 1) * (Order + 2) / 2;

    constexpr Taylor2() = default;
    constexpr Taylor2(double constant) { c_[0] = constant; }  // NOLINT(implicit)

    static Taylor2 variable_u(double value) {
        Taylor2 t(value);
        if constexpr (Order >= 1) t.c_[index(1, 0)] = 1.0;
        return t;
    }
    static Taylor2 variable_v(double value) {
        Taylor2 t(value);
        if constexpr (Order >= 1) t.c_[index(0, 1)] = 1.0;
        return t;
    }

    // Coefficient layout: grouped by total degree, then by v-power.
    static constexpr std::size_t index(int i, int j) {
        const int d = i + j;
        return static_cast<std::size_t>(d * (d + 1) / 2 + j);
    }

    double coeff(int i, int j) const { return c_[index(i, j)]; }
    double& coeff(int i, int j) { return c_[index(i, j)]; }
    double value() const { return c_[0]; }

    // d^{i+j} f / du^i dv^j at the base point.
    double derivative(int i, int j) const {
        return coeff(i, j) * factorial(i) * factorial(j);
    }

    Taylor2& operator+=(const Taylor2& o) {
        for (std::size_t k = 0; k < kSize; ++k) c_[k] += o.c_[k];
        return *this;
    }
    Taylor2& operator-=(const Taylor2& o) {
        for (std::size_t k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Taylor2& operator*=(double s) {
        for (auto& x : c_) x *= s;
        return *this;
    }

    friend Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
    friend Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
    friend Taylor2 operator-(Taylor2 a) { return a *= -1.0; }
    friend Taylor2 operator*(Taylor2 a, double s) { return a *= s; }
    friend Taylor2 operator*(double s, Taylor2 a) { return a *= s; }
    friend Taylor2 operator/(Taylor2 a, double s) { return a *= 1.0 / s; }

    friend Taylor2 operator*(const Taylor2& a, const Taylor2& b) {
        Taylor2 r;
        for (int da = 0; da <= Order; ++da) {
            for (int ja = 0; ja <= da; ++ja) {
                const double ca = a.c_[index(da - ja, ja)];
                if (ca == 0.0) continue;
                for (int db = 0; db + da <= Order; ++db) {
                    for (int jb = 0; jb <= db; ++jb) {
                        r.c_[index(da - ja + db - jb, ja + jb)] += ca * b.c_[index(db - jb, jb)];
                    }
                }
            }
        }
        return r;
    }

    friend Taylor2 operator/(const Taylor2& a, const Taylor2& b) { return a * reciprocal(b); }
    friend Taylor2 operator/(double s, const Taylor2& b) { return reciprocal(b) * s; }

    // f(a0 + h) = sum_k f^(k)(a0)/k! h^k, where h has zero constant term.
    template <typename Derivs>
    static Taylor2 compose(const Taylor2& x, const Derivs& d) {
        Taylor2 h = x;
        h.c_[0] = 0.0;
        Taylor2 result(d[0]);
        Taylor2 power(1.0);
        double fact = 1.0;
        for (int k = 1; k <= Order; ++k) {
            power = power * h;
            fact *= k;
            result += power * (d[k] / fact);
        }
        return result;
    }

    friend Taylor2 reciprocal(const Taylor2& x) {
        const double a = x.value();
        std::array<double, Order + 1> d{};
        double p = 1.0 / a;
        for (int k = 0; k <= Order; ++k) {
            d[k] = p;
            p *= -(k + 1) / a;
        }
        return compose(x, d);
    }

    friend Taylor2 sin(const Taylor2& x) {
        const double s = std::sin(x.value()), c = std::cos(x.value());
        std::array<double, Order + 1> d{};
        for (int k = 0; k <= Order; ++k) {
            const int m = k % 4;
            d[k] = m == 0 ? s : m == 1 ? c : m == 2 ? -s : -c;
        }
        return compose(x, d);
    }

    friend Taylor2 cos(const Taylor2& x) {
        const double s = std::sin(x.value()), c = std::cos(x.value());
        std::array<double, Order + 1> d{};
        for (int k = 0; k <= Order; ++k) {
            const int m = k % 4;
            d[k] = m == 0 ? c : m == 1 ? -s : m == 2 ? -c : s;
        }
        return compose(x, d);
    }

    friend Taylor2 sqrt(const Taylor2& x) {
        const double a = x.value();
        std::array<double, Order + 1> d{};
        // d^k/da^k a^{1/2} = (1/2)(1/2-1)...(1/2-k+1) a^{1/2-k}
        double coef = 1.0;
        for (int k = 0; k <= Order; ++k) {
            d[k] = coef * std::pow(a, 0.5 - k);
            coef *= 0.5 - k;
        }
        return compose(x, d);
    }

private:
    static constexpr double factorial(int n) {
        double f = 1.0;
        for (int k = 2; k <= n; ++k) f *= k;
        return f;
    }

    std::array<double, kSize> c_{};
};

}  // namespace tightkit
