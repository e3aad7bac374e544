#include "lps/heavy_traffic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lps/rng.hpp"

namespace lps {

HeavyTrafficSequence::HeavyTrafficSequence(double theta, double K_limit,
                                           DistributionSpec service,
                                           DistributionSpec arrival_shape,
                                           std::vector<double> r_values)
    : theta_(theta), K_limit_(K_limit), service_(std::move(service)),
      arrival_shape_(std::move(arrival_shape)) {
    if (!(theta > 0.0) || !(K_limit > 0.0)) {
        throw std::invalid_argument("HeavyTrafficSequence: theta and K_limit must be > 0");
    }
    if (service_.is_lattice()) {
        throw std::invalid_argument("HeavyTrafficSequence: nu must be nonlattice");
    }
    std::sort(r_values.begin(), r_values.end());
    for (double r : r_values) {
        if (!(r > theta)) {
            throw std::invalid_argument("HeavyTrafficSequence: need r > theta for rho^r > 0");
        }
        System s;
        s.r = r;
        s.lambda = (1.0 - theta / r) / service_.beta();
        s.rho = s.lambda * service_.beta();
        s.K = std::max(1, static_cast<int>(std::llround(r * K_limit)));
        systems_.push_back(s);
    }
}

double HeavyTrafficSequence::sigma2() const {
    return service_.beta() * (arrival_shape_.scv() + service_.scv());
}

LpsConfig HeavyTrafficSequence::make_config(std::size_t idx, double w0, double horizon,
                                            std::uint64_t seed) const {
    const System& s = systems_.at(idx);
    LpsConfig cfg(arrival_shape_.with_mean(1.0 / s.lambda), service_);
    cfg.K = s.K;
    cfg.horizon = horizon;
    cfg.seed = seed;
    ValidInitialCondition eq = lift(w0, K_limit_, service_);
    auto nq = static_cast<long long>(std::llround(s.r * eq.xi.total_mass()));
    auto nz = static_cast<long long>(std::llround(s.r * eq.mu.total_mass()));
    nz = std::min<long long>(nz, s.K);
    if (nz < s.K) nq = 0;  // policy-consistent start
    RngStream sizes(substream_seed(seed, "init_sizes"));
    RngStream resid(substream_seed(seed, "init_residuals"));
    for (long long i = 0; i < nz; ++i) {
        // inverse-CDF draw from nu_e via bisection on its tail
        double u = resid.uniform();
        double lo = 0.0, hi = 1.0;
        while (1.0 - service_.nu_e().tail(hi) < u && hi < 1e9) hi *= 2.0;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (1.0 - service_.nu_e().tail(mid) < u) lo = mid; else hi = mid;
        }
        cfg.init_service.push_back(std::max(0.5 * (lo + hi), 1e-12));
    }
    for (long long i = 0; i < nq; ++i) {
        cfg.init_buffer.push_back(service_.sample(sizes));
    }
    return cfg;
}

ScaledState diffusion_scale(const SystemTrajectory& traj, double r, double t) {
    double tt = r * r * t;
    if (tt > traj.horizon + 1e-9) throw std::out_of_range("diffusion_scale: r^2 t beyond horizon");
    auto [buf, ser] = traj.snapshot(tt);
    ScaledState s;
    s.buffer = buf.scaled(1.0 / r);
    s.server = ser.scaled(1.0 / r);
    s.Q = traj.Q(tt) / r;
    s.Z = traj.Z(tt) / r;
    s.X = traj.X(tt) / r;
    s.W = traj.W(tt) / r;
    return s;
}

ScaledState shifted_fluid_scale(const SystemTrajectory& traj, double r, double m, double t) {
    double tt = r * m + r * t;
    if (tt > traj.horizon + 1e-9) {
        throw std::out_of_range("shifted_fluid_scale: rm + rt beyond horizon");
    }
    auto [buf, ser] = traj.snapshot(tt);
    ScaledState s;
    s.buffer = buf.scaled(1.0 / r);
    s.server = ser.scaled(1.0 / r);
    s.Q = traj.Q(tt) / r;
    s.Z = traj.Z(tt) / r;
    s.X = traj.X(tt) / r;
    s.W = traj.W(tt) / r;
    return s;
}

double piecewise_map(double w, double K, const DistributionSpec& spec) {
    if (!(w >= 0.0)) throw std::invalid_argument("piecewise_map: w must be >= 0");
    double kbe = K * spec.beta_e();
    return std::max(0.0, w - kbe) / spec.beta() + std::min(w, kbe) / spec.beta_e();
}

double rbm_dt_default(double theta, double beta_e) {
    double d = beta_e / (10.0 * theta);
    return std::min(1e-3, d * d);
}

RbmPath simulate_rbm(double theta, double sigma2, double w0, double T, double dt,
                     std::uint64_t seed, double K, const DistributionSpec* spec) {
    if (!(dt > 0.0) || !(sigma2 >= 0.0) || !(w0 >= 0.0)) {
        throw std::invalid_argument("simulate_rbm: need dt > 0, sigma2 >= 0, w0 >= 0");
    }
    RbmPath path;
    path.dt = dt;
    path.theta = theta;
    path.sigma2 = sigma2;
    path.w0 = w0;
    auto n = static_cast<std::size_t>(std::ceil(T / dt));
    path.W_star.reserve(n + 1);
    RngStream rng(substream_seed(seed, "rbm"));
    double sd = std::sqrt(sigma2 * dt);
    double w = w0;
    path.W_star.push_back(w);
    for (std::size_t i = 0; i < n; ++i) {
        double noise = (sd > 0.0) ? sd * rng.normal() : 0.0;
        w = std::max(w - theta * dt + noise, 0.0);
        path.W_star.push_back(w);
    }
    if (K > 0.0 && spec) {
        path.X_star.reserve(path.W_star.size());
        for (double v : path.W_star) path.X_star.push_back(piecewise_map(v, K, *spec));
    }
    return path;
}

double ssc_statistic(const SystemTrajectory& traj, double r, const DistributionSpec& spec,
                     double K_limit, double T, double grid_dt, double metric_tol) {
    double sup = 0.0;
    for (double t = 0.0; t <= T + 1e-12; t += grid_dt) {
        ScaledState s = diffusion_scale(traj, r, std::min(t, T));
        ValidInitialCondition eq = lift(s.W, K_limit, spec);
        auto component = [&](const Measure& a, const Measure& b) {
            auto bound = prohorov_bound_from_tails(a, b);
            if (bound && *bound <= sup) return 0.0;  // cannot raise the running sup
            return prohorov_distance(a, b, metric_tol);
        };
        sup = std::max({sup, component(s.buffer, eq.xi), component(s.server, eq.mu)});
    }
    return sup;
}

namespace {

std::vector<double> quantiles_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double q : {0.10, 0.25, 0.50, 0.75, 0.90}) {
        double pos = q * (static_cast<double>(v.size()) - 1.0);
        auto i = static_cast<std::size_t>(pos);
        double frac = pos - static_cast<double>(i);
        double val = (i + 1 < v.size()) ? v[i] + frac * (v[i + 1] - v[i]) : v.back();
        out.push_back(val);
    }
    return out;
}

} // namespace

WorkloadLimitReport workload_limit_check(const HeavyTrafficSequence& seq, double T, int reps,
                                         double w0, std::uint64_t seed, int rbm_paths) {
    WorkloadLimitReport rep;
    double sigma2 = seq.sigma2();
    double dt = rbm_dt_default(seq.theta(), seq.service().beta_e());
    std::vector<double> rbm_samples;
    rbm_samples.reserve(static_cast<std::size_t>(rbm_paths));
    for (int i = 0; i < rbm_paths; ++i) {
        RbmPath p = simulate_rbm(seq.theta(), sigma2, w0, T, dt,
                                 substream_seed(seed, "rbm_ref/" + std::to_string(i)));
        rbm_samples.push_back(p.W_star.back());
    }
    rep.rbm_quantiles = quantiles_of(std::move(rbm_samples));
    for (std::size_t idx = 0; idx < seq.systems().size(); ++idx) {
        const auto& sys = seq.systems()[idx];
        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(reps));
        for (int rep_i = 0; rep_i < reps; ++rep_i) {
            std::uint64_t s = substream_seed(
                seed, "wlc/" + std::to_string(idx) + "/" + std::to_string(rep_i));
            LpsConfig cfg = seq.make_config(idx, w0, sys.r * sys.r * T, s);
            SystemTrajectory traj = run(cfg);
            samples.push_back(traj.W(sys.r * sys.r * T) / sys.r);
        }
        std::vector<double> q = quantiles_of(std::move(samples));
        double gap = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) {
            gap = std::max(gap, std::abs(q[k] - rep.rbm_quantiles[k]));
        }
        rep.r.push_back(sys.r);
        rep.max_quantile_gap.push_back(gap);
        rep.empirical_quantiles.push_back(std::move(q));
    }
    return rep;
}

double empirical_measure_diagnostic(const DistributionSpec& spec, double r,
                                    const std::vector<double>& n_fractions, double L1,
                                    std::uint64_t seed) {
    RngStream rng(substream_seed(seed, "gc"));
    auto window = static_cast<std::size_t>(std::floor(r * L1));
    std::size_t max_n = 0;
    for (double f : n_fractions) {
        max_n = std::max(max_n, static_cast<std::size_t>(std::floor(f * r * L1)));
    }
    std::vector<double> v(max_n + window);
    for (double& x : v) x = spec.sample(rng);
    double m1p = spec.nu().moment(1.0 + spec.p());
    double m2p = spec.nu().moment(2.0 + spec.p());
    double sup = 0.0;
    for (double f : n_fractions) {
        auto n0 = static_cast<std::size_t>(std::floor(f * r * L1));
        for (int lk = 0; lk <= 10; ++lk) {
            double l = L1 * static_cast<double>(lk) / 10.0;
            auto cnt = static_cast<std::size_t>(std::floor(r * l));
            Measure eta;
            num::KahanSum s1, s2;
            for (std::size_t i = n0; i < n0 + cnt; ++i) {
                eta.add_atom(v[i], 1.0 / r);
                s1.add(std::pow(v[i], 1.0 + spec.p()) / r);
                s2.add(std::pow(v[i], 2.0 + spec.p()) / r);
            }
            eta.finalize();
            sup = std::max(sup, tail_sup_distance(eta, spec.nu().scaled(l)));
            sup = std::max(sup, std::abs(s1.value() - l * m1p));
            sup = std::max(sup, std::abs(s2.value() - l * m2p));
        }
    }
    return sup;
}

} // namespace lps
