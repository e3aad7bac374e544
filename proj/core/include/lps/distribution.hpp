#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lps/measure.hpp"
#include "lps/rng.hpp"

namespace lps {

enum class Family { Exponential, HyperExponential, Deterministic, Uniform, LogNormalTruncated };

/// A job-size (or interarrival) law together with the derived quantities the
/// fluid and diffusion machinery needs: the law nu as a Measure, its mean
/// beta and SCV, the equilibrium law nu_e with mean beta_e, and a moment
/// exponent p used by diagnostic test-function classes. Immutable.
class DistributionSpec {
public:
    static DistributionSpec exponential(double rate, double p = 0.5);
    static DistributionSpec hyper_exponential(std::vector<double> probs,
                                              std::vector<double> rates, double p = 0.5);
    static DistributionSpec deterministic(double value, double p = 0.5);
    static DistributionSpec uniform(double a, double b, double p = 0.5);
    /// Truncated at `cap` (law conditioned on [0, cap]); default cap is the
    /// 1 - 1e-8 quantile, which keeps all moments finite uniformly.
    static DistributionSpec lognormal_truncated(double mu, double sigma,
                                                std::optional<double> cap = std::nullopt,
                                                double p = 0.5);

    Family family() const { return family_; }
    const std::vector<double>& params() const { return params_; }
    double p() const { return p_; }

    double beta() const { return beta_; }
    double beta_e() const { return beta_e_; }
    double scv() const { return scv_; }
    const Measure& nu() const { return nu_; }
    const Measure& nu_e() const { return nu_e_; }

    double cdf(double x) const;              // F(x) = nu([0,x])
    double equilibrium_cdf(double x) const;  // F_e(x) = nu_e([0,x])
    double quantile(double u) const;         // u in (0,1)
    double sample(RngStream& rng) const { return quantile(rng.uniform()); }

    bool is_lattice() const { return family_ == Family::Deterministic; }

    /// Same family and SCV, mean rescaled to `mean` (x -> c x with c = mean/beta).
    DistributionSpec with_mean(double mean) const;

    std::string family_name() const;

private:
    DistributionSpec() = default;
    void derive();

    Family family_ = Family::Exponential;
    std::vector<double> params_;  // family-specific, see factory functions
    double p_ = 0.5;
    double beta_ = 0.0;
    double beta_e_ = 0.0;
    double scv_ = 0.0;
    Measure nu_;
    Measure nu_e_;
};

} // namespace lps
