#pragma once

#include <utility>
#include <vector>

#include "lps/distribution.hpp"
#include "lps/grid_function.hpp"
#include "lps/measure.hpp"

namespace lps {

/// Initial state (xi, mu) of the critically loaded fluid model: buffered
/// mass distributed as nu, server mass at most K, no mass at zero residual.
struct ValidInitialCondition {
    Measure xi;
    Measure mu;
    double w = 0.0;  // <chi, xi + mu>

    /// Validates the policy-consistency conditions: xi is a scalar multiple
    /// of nu with mass (<1,xi>+<1,mu> - K)^+, <1,mu> = (<1,xi>+<1,mu>) ^ K,
    /// and mu({0}) = 0. Throws std::invalid_argument on violation.
    static ValidInitialCondition make(Measure xi, Measure mu, double K,
                                      const DistributionSpec& spec);

    /// Skips the xi-proportionality check (used for perturbed states, whose
    /// construction preserves mass balance and workload but may distribute
    /// buffered mass differently).
    static ValidInitialCondition make_unchecked(Measure xi, Measure mu);

    double total_mass() const { return xi.total_mass() + mu.total_mass(); }
    bool is_zero() const { return xi.is_zero() && mu.is_zero(); }
};

/// Lifting map: w -> ((w - K beta_e)^+ / beta * nu, (w ^ K beta_e) / beta_e * nu_e).
ValidInitialCondition lift(double w, double K, const DistributionSpec& spec);

/// Fluid system size at equilibrium: (w - K beta_e)^+/beta + (w ^ K beta_e)/beta_e.
double x_infinity(double w, double K, const DistributionSpec& spec);

/// h(u) = xi((u,inf)) + mu((u,inf)) on the grid.
GridFunction h_from_initial(const ValidInitialCondition& init, double u_max, double step);

struct FluidSolution {
    double step = 0.0;
    double K = 0.0;
    GridFunction x, q, z, h, Tbar;
    GridFunction residual;  // independent trapezoid-rule recomputation error
    double max_residual = 0.0;
    double x_inf = 0.0;  // from the workload when known, else from int h
};

/// Solves x(u) = h(u) + int_0^u (x(u-v)-K)^+ dF(v) + int_0^u (x(u-v)^K) dF_e(v)
/// by forward stepping with an implicit correction in the current cell.
/// `w` is the initial workload; pass a negative value to infer it from int h.
FluidSolution solve_key_equation(const GridFunction& h, const DistributionSpec& spec, double K,
                                 double w = -1.0);

/// Epsilon-perturbation of an initial state, eps in (-1,0) u (0,1); the
/// workload of the result is (1+eps) w, and for eps > 0 the input functions
/// satisfy h_{-eps} <= h <= h_{+eps} pointwise.
ValidInitialCondition perturb(const ValidInitialCondition& init, double eps, double K);

/// True iff x^{-eps}(u) <= x(u) <= x^{+eps}(u) at every grid point, within
/// 3*step of quadrature slack.
bool comparison_check(const ValidInitialCondition& init, double eps,
                      const DistributionSpec& spec, double K, double u_max, double step);

/// Inverts Tbar and evaluates the fluid dynamic equations at real time t,
/// returning (buffer measure, server measure). The server measure is
/// reconstructed from its tails on a grid as a piecewise-constant density.
std::pair<Measure, Measure> reconstruct_measures(const FluidSolution& sol,
                                                 const ValidInitialCondition& init,
                                                 const DistributionSpec& spec, double t);

/// True iff (xi, mu) is within Prohorov distance tol of lift(w, K, spec).
bool equilibrium_check(const ValidInitialCondition& init, double K,
                       const DistributionSpec& spec, double tol = 1e-6);

struct ConvergenceReport {
    std::vector<double> checkpoints;           // times t
    std::vector<std::vector<double>> dist;     // [init][checkpoint]
    std::vector<double> sup_dist;              // max over inits per checkpoint
};

/// Distance-to-equilibrium trajectories for a family of initial conditions:
/// dist(t) = max-Prohorov between (B(t), S(t)) and lift(w). Checkpoints are
/// dyadic fractions of the horizon. Lattice nu is rejected.
ConvergenceReport convergence_report(const std::vector<ValidInitialCondition>& inits, double K,
                                     const DistributionSpec& spec, double horizon,
                                     int n_checkpoints = 7);

} // namespace lps
