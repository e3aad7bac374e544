#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lps::num {

// Compensated (Kahan) accumulator for long running sums.
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }
    void reset(double v = 0.0) { sum_ = v; comp_ = 0.0; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Cubic polynomial in a local coordinate t: c0 + c1 t + c2 t^2 + c3 t^3.
using Cubic = std::array<double, 4>;

inline double cubic_eval(const Cubic& c, double t) {
    return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
}

// Integral of the cubic over [t0, t1] in local coordinates.
inline double cubic_integral(const Cubic& c, double t0, double t1) {
    auto anti = [&](double t) {
        return t * (c[0] + t * (c[1] / 2 + t * (c[2] / 3 + t * c[3] / 4)));
    };
    return anti(t1) - anti(t0);
}

// Minimum of the cubic over [t0, t1] (checks endpoints and stationary points).
double cubic_min(const Cubic& c, double t0, double t1);

// Adaptive Simpson quadrature. Throws std::runtime_error if the requested
// tolerance cannot be met within the depth limit.
template <typename F>
double adaptive_simpson_impl(const F& f, double a, double b, double fa, double fm,
                             double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0) {
        throw std::runtime_error("adaptive_simpson: quadrature failed to converge");
    }
    return adaptive_simpson_impl(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson_impl(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 40) {
    if (b <= a) return 0.0;
    double fa = f(a);
    double fb = f(b);
    double fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_impl(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Standard normal CDF and quantile (Acklam's rational approximation refined
// with one Halley step; accurate to ~1e-15).
double normal_cdf(double x);
double normal_quantile(double p);

// 64-bit mixers used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(const void* data, std::size_t n);

} // namespace lps::num
