#include "lps/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lps {

namespace {

double lognormal_density(double x, double mu, double sigma, double norm) {
    double z = (std::log(x) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * M_PI) * norm);
}

double lognormal_density_deriv(double x, double mu, double sigma, double norm) {
    double z = (std::log(x) - mu) / sigma;
    return -lognormal_density(x, mu, sigma, norm) * (1.0 + z / sigma) / x;
}

} // namespace

DistributionSpec DistributionSpec::exponential(double rate, double p) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
    DistributionSpec s;
    s.family_ = Family::Exponential;
    s.params_ = {rate};
    s.p_ = p;
    s.nu_.add_exp_piece(0.0, rate, rate);
    s.nu_.finalize();
    s.derive();
    return s;
}

DistributionSpec DistributionSpec::hyper_exponential(std::vector<double> probs,
                                                     std::vector<double> rates, double p) {
    if (probs.empty() || probs.size() != rates.size()) {
        throw std::invalid_argument("hyper_exponential: probs and rates must match and be nonempty");
    }
    double tot = 0.0;
    for (double q : probs) {
        if (!(q > 0.0)) throw std::invalid_argument("hyper_exponential: probs must be > 0");
        tot += q;
    }
    if (std::abs(tot - 1.0) > 1e-9) {
        throw std::invalid_argument("hyper_exponential: probs must sum to 1");
    }
    for (double& q : probs) q /= tot;
    for (double r : rates) {
        if (!(r > 0.0)) throw std::invalid_argument("hyper_exponential: rates must be > 0");
    }
    DistributionSpec s;
    s.family_ = Family::HyperExponential;
    s.params_.push_back(static_cast<double>(probs.size()));
    s.params_.insert(s.params_.end(), probs.begin(), probs.end());
    s.params_.insert(s.params_.end(), rates.begin(), rates.end());
    s.p_ = p;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        s.nu_.add_exp_piece(0.0, rates[i], probs[i] * rates[i]);
    }
    s.nu_.finalize();
    s.derive();
    return s;
}

DistributionSpec DistributionSpec::deterministic(double value, double p) {
    if (!(value > 0.0)) throw std::invalid_argument("deterministic: value must be > 0");
    DistributionSpec s;
    s.family_ = Family::Deterministic;
    s.params_ = {value};
    s.p_ = p;
    s.nu_ = Measure::point_mass(value, 1.0);
    s.derive();
    return s;
}

DistributionSpec DistributionSpec::uniform(double a, double b, double p) {
    if (!(0.0 <= a && a < b)) throw std::invalid_argument("uniform: need 0 <= a < b");
    if (a == 0.0 && b == 0.0) throw std::invalid_argument("uniform: degenerate support");
    DistributionSpec s;
    s.family_ = Family::Uniform;
    s.params_ = {a, b};
    s.p_ = p;
    s.nu_.add_poly_piece(a, b, {1.0 / (b - a), 0.0, 0.0, 0.0});
    s.nu_.finalize();
    s.derive();
    return s;
}

DistributionSpec DistributionSpec::lognormal_truncated(double mu, double sigma,
                                                       std::optional<double> cap, double p) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lognormal: sigma must be > 0");
    double c = cap.value_or(std::exp(mu + sigma * num::normal_quantile(1.0 - 1e-8)));
    if (!(c > 0.0)) throw std::invalid_argument("lognormal: cap must be > 0");
    DistributionSpec s;
    s.family_ = Family::LogNormalTruncated;
    s.params_ = {mu, sigma, c};
    s.p_ = p;
    double norm = num::normal_cdf((std::log(c) - mu) / sigma);
    if (!(norm > 0.0)) throw std::invalid_argument("lognormal: cap too small");
    double lo = std::exp(mu + sigma * num::normal_quantile(1e-13));
    lo = std::min(lo, 0.5 * c);
    double mode = std::exp(mu - sigma * sigma);
    double peak = lognormal_density(std::clamp(mode, lo, c), mu, sigma, norm);
    add_smooth_density(
        s.nu_, [&](double x) { return lognormal_density(x, mu, sigma, norm); },
        [&](double x) { return lognormal_density_deriv(x, mu, sigma, norm); }, lo, c,
        1e-12 * (1.0 + peak));
    s.nu_.finalize();
    // renormalize away the truncated sliver below `lo` and interpolation error
    s.nu_ = s.nu_.scaled(1.0 / s.nu_.total_mass());
    s.derive();
    return s;
}

void DistributionSpec::derive() {
    beta_ = nu_.moment(1.0);
    double m2 = nu_.moment(2.0);
    scv_ = (m2 - beta_ * beta_) / (beta_ * beta_);
    nu_e_ = equilibrium_of(nu_);
    beta_e_ = nu_e_.moment(1.0);
}

double DistributionSpec::cdf(double x) const {
    if (x < 0.0) return 0.0;
    return std::max(0.0, 1.0 - nu_.tail(x));
}

double DistributionSpec::equilibrium_cdf(double x) const {
    if (x < 0.0) return 0.0;
    return std::max(0.0, 1.0 - nu_e_.tail(x));
}

double DistributionSpec::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must be in (0,1)");
    switch (family_) {
    case Family::Exponential:
        return -std::log1p(-u) / params_[0];
    case Family::Deterministic:
        return params_[0];
    case Family::Uniform:
        return params_[0] + u * (params_[1] - params_[0]);
    case Family::LogNormalTruncated: {
        double mu = params_[0], sigma = params_[1], c = params_[2];
        double norm = num::normal_cdf((std::log(c) - mu) / sigma);
        return std::min(c, std::exp(mu + sigma * num::normal_quantile(u * norm)));
    }
    case Family::HyperExponential: {
        // invert 1 - sum p_i exp(-r_i x) = u by safeguarded Newton
        std::size_t n = static_cast<std::size_t>(params_[0]);
        const double* pr = params_.data() + 1;
        const double* rt = params_.data() + 1 + n;
        double rmin = *std::min_element(rt, rt + n);
        double lo = 0.0, hi = -std::log1p(-u) / rmin;
        double x = -std::log1p(-u) * beta_;  // exponential-scale initial guess
        x = std::clamp(x, lo, hi);
        for (int it = 0; it < 100; ++it) {
            double tail = 0.0, dens = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double e = pr[i] * std::exp(-rt[i] * x);
                tail += e;
                dens += rt[i] * e;
            }
            double g = (1.0 - tail) - u;
            if (g > 0.0) hi = x; else lo = x;
            double step = g / dens;
            double xn = x - step;
            if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
            if (std::abs(xn - x) <= 1e-15 * (1.0 + x)) return xn;
            x = xn;
        }
        return x;
    }
    }
    throw std::logic_error("quantile: unknown family");
}

DistributionSpec DistributionSpec::with_mean(double mean) const {
    if (!(mean > 0.0)) throw std::invalid_argument("with_mean: mean must be > 0");
    double c = mean / beta_;
    switch (family_) {
    case Family::Exponential:
        return exponential(params_[0] / c, p_);
    case Family::Deterministic:
        return deterministic(params_[0] * c, p_);
    case Family::Uniform:
        return uniform(params_[0] * c, params_[1] * c, p_);
    case Family::LogNormalTruncated:
        return lognormal_truncated(params_[0] + std::log(c), params_[1], params_[2] * c, p_);
    case Family::HyperExponential: {
        std::size_t n = static_cast<std::size_t>(params_[0]);
        std::vector<double> probs(params_.begin() + 1, params_.begin() + 1 + n);
        std::vector<double> rates(params_.begin() + 1 + n, params_.begin() + 1 + 2 * n);
        for (double& r : rates) r /= c;
        return hyper_exponential(std::move(probs), std::move(rates), p_);
    }
    }
    throw std::logic_error("with_mean: unknown family");
}

std::string DistributionSpec::family_name() const {
    switch (family_) {
    case Family::Exponential: return "exp";
    case Family::HyperExponential: return "hyperexp";
    case Family::Deterministic: return "det";
    case Family::Uniform: return "uniform";
    case Family::LogNormalTruncated: return "lognormal";
    }
    return "?";
}

} // namespace lps
