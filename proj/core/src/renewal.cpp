#include "lps/renewal.hpp"

#include <cmath>
#include <stdexcept>

#include "lps/numeric.hpp"

namespace lps {

namespace {

std::vector<double> solve_renewal(const CdfFn& F, double u_max, double step) {
    auto n = static_cast<std::size_t>(std::ceil(u_max / step)) + 1;
    std::vector<double> dF(n, 0.0);
    double prev = F(0.0);
    if (std::abs(prev) > 1e-12) {
        throw std::invalid_argument("renewal_function: F(0) must be 0");
    }
    for (std::size_t j = 1; j < n; ++j) {
        double cur = F(static_cast<double>(j) * step);
        dF[j] = cur - prev;
        prev = cur;
    }
    std::vector<double> U(n);
    U[0] = 1.0;
    // midpoint values of U come from linear interpolation, so the j=1 cell
    // couples U_i to itself; solve the linear scalar equation directly
    for (std::size_t i = 1; i < n; ++i) {
        num::KahanSum s;
        s.add(1.0);
        for (std::size_t j = 2; j <= i; ++j) {
            s.add(0.5 * (U[i - j] + U[i - j + 1]) * dF[j]);
        }
        s.add(0.5 * U[i - 1] * dF[1]);
        U[i] = s.value() / (1.0 - 0.5 * dF[1]);
    }
    return U;
}

} // namespace

RenewalResult renewal_function(const CdfFn& F, double u_max, double step, bool refine_check) {
    if (!(step > 0.0) || !(u_max > 0.0)) {
        throw std::invalid_argument("renewal_function: need u_max > 0 and step > 0");
    }
    RenewalResult r;
    std::vector<double> U = solve_renewal(F, u_max, step);
    if (refine_check) {
        std::vector<double> Uh = solve_renewal(F, u_max, step / 2.0);
        double a = U.back();
        double b = Uh[2 * (U.size() - 1)];
        r.refinement_delta = std::abs(a - b) / std::max(1.0, std::abs(b));
        r.step_too_coarse = r.refinement_delta > 1e-3;
    }
    r.U = GridFunction(step, std::move(U), true);
    return r;
}

GridFunction convolve_stieltjes(const GridFunction& h, const CdfFn& G) {
    std::size_t n = h.size();
    double step = h.step;
    double g0 = G(0.0);
    std::vector<double> dG(n, 0.0);
    double prev = g0;
    for (std::size_t j = 1; j < n; ++j) {
        double cur = G(static_cast<double>(j) * step);
        dG[j] = cur - prev;
        prev = cur;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        num::KahanSum s;
        double u = static_cast<double>(i) * step;
        s.add(h(u) * g0);
        for (std::size_t j = 1; j <= i; ++j) {
            double mid = u - (static_cast<double>(j) - 0.5) * step;
            s.add(h(mid) * dG[j]);
        }
        out[i] = s.value();
    }
    return GridFunction(step, std::move(out), h.linear_interp);
}

KeyRenewalReport key_renewal_check(const std::vector<GridFunction>& h_family, const CdfFn& F,
                                   double beta, double u0, double u_max, double step) {
    KeyRenewalReport rep;
    if (h_family.empty()) return rep;
    GridFunction U = renewal_function(F, u_max, step, false).U;
    auto Ueval = [&U](double x) { return x < 0.0 ? 0.0 : U(x); };
    for (std::size_t k = 0; k < h_family.size(); ++k) {
        const GridFunction& h = h_family[k];
        for (std::size_t i = 0; i < h.size(); ++i) {
            double v = h.values[i];
            if (v < -1e-12) {
                rep.precondition_violations.push_back("h[" + std::to_string(k) + "] negative");
                break;
            }
            if (i > 0 && v > h.values[i - 1] + 1e-12) {
                rep.precondition_violations.push_back("h[" + std::to_string(k) +
                                                      "] not nonincreasing");
                break;
            }
        }
        // int_0^inf h by trapezoid over h's own grid (h ~ 0 past its u_max)
        num::KahanSum integ;
        for (std::size_t i = 0; i + 1 < h.size(); ++i) {
            integ.add(0.5 * (h.values[i] + h.values[i + 1]) * h.step);
        }
        double target = integ.value() / beta;
        // U*h on the window grid; h must extend to u_max for the convolution
        GridFunction hw = h;
        if (hw.u_max() < u_max) {
            hw.values.resize(static_cast<std::size_t>(std::ceil(u_max / hw.step)) + 1,
                             hw.values.back());
        }
        GridFunction conv = convolve_stieltjes(hw, Ueval);
        double sup = 0.0;
        for (std::size_t i = 0; i < conv.size(); ++i) {
            double u = static_cast<double>(i) * conv.step;
            if (u < u0 || u > u_max) continue;
            sup = std::max(sup, std::abs(conv.values[i] - target));
        }
        rep.per_h_sup.push_back(sup);
        rep.sup_deviation = std::max(rep.sup_deviation, sup);
    }
    return rep;
}

double integration_by_parts_check(const CdfFn& F, const GridFunction& q, double u) {
    double step = q.step;
    auto n = static_cast<std::size_t>(std::llround(u / step));
    if (n >= q.size()) throw std::invalid_argument("integration_by_parts_check: u beyond grid");
    num::KahanSum lhs;
    num::KahanSum conv;
    for (std::size_t j = 1; j <= n; ++j) {
        double mid = (static_cast<double>(j) - 0.5) * step;
        double dq = q.values[j] - q.values[j - 1];
        lhs.add((1.0 - F(u - mid)) * dq);
        double dF = F(static_cast<double>(j) * step) - F((static_cast<double>(j) - 1.0) * step);
        conv.add(q(u - mid) * dF);
    }
    double rhs = q.values[n] - (1.0 - F(u)) * q.values[0] - conv.value();
    return std::abs(lhs.value() - rhs);
}

} // namespace lps
