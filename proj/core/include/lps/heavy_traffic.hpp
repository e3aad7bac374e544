#pragma once

#include <cstdint>
#include <vector>

#include "lps/distribution.hpp"
#include "lps/fluid.hpp"
#include "lps/simulator.hpp"

namespace lps {

/// Sequence of LPS systems indexed by r with r(1 - rho^r) = theta exactly:
/// lambda^r = (1 - theta/r)/beta and K^r = round(r * K_limit).
class HeavyTrafficSequence {
public:
    struct System {
        double r = 0.0;
        double lambda = 0.0;
        double rho = 0.0;
        int K = 0;
    };

    HeavyTrafficSequence(double theta, double K_limit, DistributionSpec service,
                         DistributionSpec arrival_shape, std::vector<double> r_values);

    double theta() const { return theta_; }
    double K_limit() const { return K_limit_; }
    const DistributionSpec& service() const { return service_; }
    const DistributionSpec& arrival_shape() const { return arrival_shape_; }
    const std::vector<System>& systems() const { return systems_; }
    /// sigma^2 = beta (c_a^2 + c_s^2) of the limiting RBM.
    double sigma2() const;

    /// Config for system `idx` with a lifted initial state of diffusion
    /// scaled workload ~ w0: round(r q-hat) buffered jobs ~ nu and
    /// round(r z-hat) in-service jobs ~ nu_e, (q-hat, z-hat) from lift(w0).
    LpsConfig make_config(std::size_t idx, double w0, double horizon,
                          std::uint64_t seed) const;

private:
    double theta_;
    double K_limit_;
    DistributionSpec service_;
    DistributionSpec arrival_shape_;
    std::vector<System> systems_;
};

struct ScaledState {
    Measure buffer;
    Measure server;
    double Q = 0.0, Z = 0.0, X = 0.0, W = 0.0;
};

/// (1/r) (B^r, S^r)(r^2 t) with mass scaled, locations unchanged.
ScaledState diffusion_scale(const SystemTrajectory& traj, double r, double t);

/// (1/r) (B^r, S^r)(r m + r t), the shifted fluid scaling.
ScaledState shifted_fluid_scale(const SystemTrajectory& traj, double r, double m, double t);

/// X* = (w - K beta_e)^+ / beta + (w ^ K beta_e) / beta_e.
double piecewise_map(double w, double K, const DistributionSpec& spec);

struct RbmPath {
    double dt = 0.0;
    double theta = 0.0, sigma2 = 0.0, w0 = 0.0;
    std::vector<double> W_star;
    std::vector<double> X_star;
};

/// Euler-Maruyama with reflection: W_{n+1} = max(W_n - theta dt + sqrt(sigma2 dt) xi, 0).
/// X_star is filled through piecewise_map when K > 0 and spec is given.
RbmPath simulate_rbm(double theta, double sigma2, double w0, double T, double dt,
                     std::uint64_t seed, double K = 0.0,
                     const DistributionSpec* spec = nullptr);

double rbm_dt_default(double theta, double beta_e);

/// sup over t in {0, grid_dt, ..., T} of the max-Prohorov distance between
/// the diffusion scaled state and the lift of the scaled workload. Uses the
/// tail-based Prohorov upper bound to skip exact metric evaluations that
/// cannot raise the running sup.
double ssc_statistic(const SystemTrajectory& traj, double r, const DistributionSpec& spec,
                     double K_limit, double T, double grid_dt, double metric_tol = 1e-3);

struct WorkloadLimitReport {
    std::vector<double> r;
    std::vector<double> max_quantile_gap;                 // per r
    std::vector<std::vector<double>> empirical_quantiles; // per r, 10/25/50/75/90%
    std::vector<double> rbm_quantiles;                    // 10/25/50/75/90%
};

/// Compares the empirical law of W-hat(T) over `reps` replications against
/// the RBM marginal at T (simulated with matched theta, sigma^2, w0).
WorkloadLimitReport workload_limit_check(const HeavyTrafficSequence& seq, double T, int reps,
                                         double w0, std::uint64_t seed, int rbm_paths = 20000);

/// Glivenko-Cantelli style deviation: sup over windows (n, l) and the test
/// class {tails, chi^{1+p}, chi^{2+p}} of |<f, eta(n,l)> - l <f, nu>| with
/// eta(n,l) = (1/r) sum_{i=n+1}^{n+floor(r l)} delta_{v_i}.
double empirical_measure_diagnostic(const DistributionSpec& spec, double r,
                                    const std::vector<double>& n_fractions, double L1,
                                    std::uint64_t seed);

} // namespace lps
