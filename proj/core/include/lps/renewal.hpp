#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lps/grid_function.hpp"

namespace lps {

using CdfFn = std::function<double(double)>;

struct RenewalResult {
    GridFunction U;
    bool step_too_coarse = false;   // halving the step moved U(u_max) by > 1e-3 relative
    double refinement_delta = 0.0;  // the observed relative change
};

/// Renewal function U(x) = sum_n F^{*n}(x) on the grid, by forward
/// substitution of the discretized renewal equation U = 1 + F*U with
/// midpoint Stieltjes increments. Requires F(0) = 0.
RenewalResult renewal_function(const CdfFn& F, double u_max, double step,
                               bool refine_check = true);

/// (h*G)(u) = int_{[0,u]} h(u-v) dG(v) by midpoint Stieltjes quadrature on
/// h's grid; a jump of G at 0 (e.g. the unit atom of a renewal function)
/// contributes h(u)*G(0) exactly.
GridFunction convolve_stieltjes(const GridFunction& h, const CdfFn& G);

struct KeyRenewalReport {
    double sup_deviation = 0.0;               // over the family and the window
    std::vector<double> per_h_sup;            // per family member
    std::vector<std::string> precondition_violations;
};

/// Checks sup_{h in family, u in [u0, u_max]} |U*h(u) - (1/beta) int h| for a
/// family of nonnegative nonincreasing h with integrable tails.
KeyRenewalReport key_renewal_check(const std::vector<GridFunction>& h_family, const CdfFn& F,
                                   double beta, double u0, double u_max, double step);

/// Residual of the Lebesgue-Stieltjes integration-by-parts identity
/// int_{(0,u]} [1-F(u-v)] dq(v) = q(u) - [1-F(u)] q(0) - int_{(0,u]} q(u-v) dF(v).
double integration_by_parts_check(const CdfFn& F, const GridFunction& q, double u);

} // namespace lps
