#include "lps/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lps/numeric.hpp"

namespace lps {

namespace {

// Smallest y with m((y,inf)) <= tol, up to the structure of the representation.
double effective_support(const Measure& m, double tol) {
    double y = 0.0;
    if (!m.atoms().empty()) y = std::max(y, m.atoms().back().location);
    if (!m.poly_pieces().empty()) y = std::max(y, m.poly_pieces().back().b);
    for (const ExpPiece& e : m.exp_pieces()) {
        double mass = e.scale / e.rate;
        if (mass > tol) y = std::max(y, e.start + std::log(mass / tol) / e.rate);
    }
    return y;
}

} // namespace

ValidInitialCondition ValidInitialCondition::make_unchecked(Measure xi, Measure mu) {
    ValidInitialCondition v;
    v.w = xi.moment(1.0) + mu.moment(1.0);
    v.xi = std::move(xi);
    v.mu = std::move(mu);
    return v;
}

ValidInitialCondition ValidInitialCondition::make(Measure xi, Measure mu, double K,
                                                  const DistributionSpec& spec) {
    double qm = xi.total_mass();
    double zm = mu.total_mass();
    double x0 = qm + zm;
    if (std::abs(qm - std::max(0.0, x0 - K)) > 1e-9 * (1.0 + x0)) {
        throw std::invalid_argument("initial condition: buffer mass must be (x0 - K)^+");
    }
    if (std::abs(zm - std::min(x0, K)) > 1e-9 * (1.0 + x0)) {
        throw std::invalid_argument("initial condition: server mass must be x0 ^ K");
    }
    if (mu.atom_at(0.0) != 0.0) {
        throw std::invalid_argument("initial condition: mu({0}) must be 0");
    }
    if (qm > 1e-12 && tail_sup_distance(xi.scaled(1.0 / qm), spec.nu()) > 1e-9) {
        throw std::invalid_argument("initial condition: xi must be proportional to nu");
    }
    return make_unchecked(std::move(xi), std::move(mu));
}

ValidInitialCondition lift(double w, double K, const DistributionSpec& spec) {
    if (!(w >= 0.0) || !(K > 0.0)) throw std::invalid_argument("lift: need w >= 0, K > 0");
    double kbe = K * spec.beta_e();
    Measure xi = spec.nu().scaled(std::max(0.0, w - kbe) / spec.beta());
    Measure mu = spec.nu_e().scaled(std::min(w, kbe) / spec.beta_e());
    ValidInitialCondition v;
    v.xi = std::move(xi);
    v.mu = std::move(mu);
    v.w = w;
    return v;
}

double x_infinity(double w, double K, const DistributionSpec& spec) {
    double kbe = K * spec.beta_e();
    return std::max(0.0, w - kbe) / spec.beta() + std::min(w, kbe) / spec.beta_e();
}

GridFunction h_from_initial(const ValidInitialCondition& init, double u_max, double step) {
    auto n = static_cast<std::size_t>(std::ceil(u_max / step)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = static_cast<double>(i) * step;
        v[i] = init.xi.tail(u) + init.mu.tail(u);
    }
    return GridFunction(step, std::move(v), true);
}

FluidSolution solve_key_equation(const GridFunction& h, const DistributionSpec& spec, double K,
                                 double w) {
    double s = h.step;
    std::size_t n = h.size();
    std::vector<double> dF(n, 0.0), dFe(n, 0.0);
    std::size_t jcap = 1;
    {
        double pF = spec.cdf(0.0), pFe = spec.equilibrium_cdf(0.0);
        for (std::size_t j = 1; j < n; ++j) {
            double u = static_cast<double>(j) * s;
            double cF = spec.cdf(u), cFe = spec.equilibrium_cdf(u);
            dF[j] = cF - pF;
            dFe[j] = cFe - pFe;
            if (1.0 - cF > 1e-14 || 1.0 - cFe > 1e-14) jcap = j + 1;
            pF = cF;
            pFe = cFe;
        }
        jcap = std::min(jcap, n - 1);
    }
    auto gq = [K](double v) { return std::max(0.0, v - K); };
    auto gz = [K](double v) { return std::min(v, K); };

    std::vector<double> x(n);
    x[0] = h.values[0];
    for (std::size_t i = 1; i < n; ++i) {
        num::KahanSum base;
        base.add(h.values[i]);
        std::size_t jend = std::min(i, jcap);
        for (std::size_t j = 2; j <= jend; ++j) {
            double xm = 0.5 * (x[i - j] + x[i - j + 1]);
            base.add(gq(xm) * dF[j] + gz(xm) * dFe[j]);
        }
        // the j = 1 cell references x[i] itself through the midpoint; the
        // map is a contraction (Lipschitz constant (dF1 + dFe1)/2 < 1)
        double y = x[i - 1];
        for (int it = 0; it < 200; ++it) {
            double xm = 0.5 * (x[i - 1] + y);
            double yn = base.value() + gq(xm) * dF[1] + gz(xm) * dFe[1];
            if (std::abs(yn - y) <= 1e-13 * (1.0 + std::abs(yn))) {
                y = yn;
                break;
            }
            y = yn;
        }
        x[i] = std::max(0.0, y);
    }

    FluidSolution sol;
    sol.step = s;
    sol.K = K;
    sol.h = h;
    std::vector<double> q(n), z(n), tb(n), res(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = gq(x[i]);
        z[i] = gz(x[i]);
    }
    num::KahanSum tsum;
    tb[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        tsum.add(0.5 * (z[i - 1] + z[i]) * s);
        tb[i] = tsum.value();
    }
    // independent residual: trapezoid Stieltjes instead of midpoint
    double max_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num::KahanSum rhs;
        rhs.add(h.values[i]);
        std::size_t jend = std::min(i, jcap);
        for (std::size_t j = 1; j <= jend; ++j) {
            rhs.add(0.5 * (gq(x[i - j]) + gq(x[i - j + 1])) * dF[j]);
            rhs.add(0.5 * (gz(x[i - j]) + gz(x[i - j + 1])) * dFe[j]);
        }
        res[i] = std::abs(x[i] - rhs.value());
        max_res = std::max(max_res, res[i]);
    }
    sol.max_residual = max_res;
    if (w >= 0.0) {
        sol.x_inf = x_infinity(w, K, spec);
    } else {
        num::KahanSum integ;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            integ.add(0.5 * (h.values[i] + h.values[i + 1]) * s);
        }
        sol.x_inf = x_infinity(integ.value(), K, spec);
    }
    sol.x = GridFunction(s, std::move(x), true);
    sol.q = GridFunction(s, std::move(q), true);
    sol.z = GridFunction(s, std::move(z), true);
    sol.Tbar = GridFunction(s, std::move(tb), true);
    sol.residual = GridFunction(s, std::move(res), true);
    return sol;
}

ValidInitialCondition perturb(const ValidInitialCondition& init, double eps, double K) {
    if (init.is_zero()) throw std::invalid_argument("perturb: zero initial state");
    if (!(std::abs(eps) < 1.0)) throw std::invalid_argument("perturb: |eps| must be < 1");
    if (eps == 0.0) return init;
    const Measure& xi = init.xi;
    const Measure& mu = init.mu;
    if (eps > 0.0) {
        double zm = mu.total_mass();
        if (zm < K) {
            double g = (K - zm) / zm;
            Measure xe = xi.plus(mu.scaled(std::max(0.0, eps - g)));
            Measure me = mu.scaled(1.0 + std::min(g, eps));
            return ValidInitialCondition::make_unchecked(std::move(xe), std::move(me));
        }
        if (xi.is_zero()) {
            return ValidInitialCondition::make_unchecked(mu.scaled(eps), mu);
        }
        return ValidInitialCondition::make_unchecked(xi.scaled(1.0 + eps).plus(mu.scaled(eps)),
                                                     mu);
    }
    double e = -eps;
    if (xi.is_zero()) {
        return ValidInitialCondition::make_unchecked(xi, mu.scaled(1.0 - e));
    }
    double cx = xi.moment(1.0);
    double cm = mu.moment(1.0);
    double w = init.w;
    double fxi = std::max(0.0, 1.0 - e * w / cx);
    double fmu = (1.0 < e * w / cx) ? (1.0 - e) * w / cm : 1.0;
    return ValidInitialCondition::make_unchecked(xi.scaled(fxi), mu.scaled(fmu));
}

bool comparison_check(const ValidInitialCondition& init, double eps,
                      const DistributionSpec& spec, double K, double u_max, double step) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::invalid_argument("comparison_check: eps must be in (0,1)");
    }
    ValidInitialCondition up = perturb(init, eps, K);
    ValidInitialCondition down = perturb(init, -eps, K);
    GridFunction h = h_from_initial(init, u_max, step);
    GridFunction hu = h_from_initial(up, u_max, step);
    GridFunction hd = h_from_initial(down, u_max, step);
    FluidSolution sx = solve_key_equation(h, spec, K, init.w);
    FluidSolution su = solve_key_equation(hu, spec, K, up.w);
    FluidSolution sd = solve_key_equation(hd, spec, K, down.w);
    double slack = 3.0 * step;
    for (std::size_t i = 0; i < sx.x.size(); ++i) {
        if (sd.x.values[i] > sx.x.values[i] + slack) return false;
        if (sx.x.values[i] > su.x.values[i] + slack) return false;
    }
    return true;
}

std::pair<Measure, Measure> reconstruct_measures(const FluidSolution& sol,
                                                 const ValidInitialCondition& init,
                                                 const DistributionSpec& spec, double t) {
    const GridFunction& tb = sol.Tbar;
    if (!(t >= 0.0) || t > tb.values.back() + 1e-12) {
        throw std::out_of_range("reconstruct_measures: t beyond solved horizon");
    }
    // invert the nondecreasing Tbar for u = S(t)
    double u;
    if (t <= 0.0) {
        u = 0.0;
    } else {
        auto it = std::lower_bound(tb.values.begin(), tb.values.end(), t);
        std::size_t i = static_cast<std::size_t>(it - tb.values.begin());
        if (i == 0) {
            u = 0.0;
        } else if (i >= tb.size()) {
            u = tb.u_max();
        } else {
            double t0 = tb.values[i - 1], t1 = tb.values[i];
            double frac = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
            u = (static_cast<double>(i) - 1.0 + frac) * tb.step;
        }
    }
    double qu = sol.q(u);
    double q0 = sol.q.values[0];
    Measure buffer = (q0 > 1e-12) ? init.xi.scaled(qu / q0) : spec.nu().scaled(qu);

    // server tails: S(T(u))(A_y) = mu(A_y + u) + int_0^u nu(A_y + u - v) d[lambda T(v) - q(v)]
    double lambda = 1.0 / spec.beta();
    auto iu = static_cast<std::size_t>(std::min<double>(
        std::llround(u / sol.step), static_cast<long long>(tb.size() - 1)));
    std::size_t stride = std::max<std::size_t>(1, iu / 2000);
    double ymax = std::max({spec.beta(), effective_support(init.mu, 1e-10) - u,
                            effective_support(spec.nu(), 1e-10)});
    double dy = std::min(spec.beta() / 10.0, ymax / 400.0);
    auto ny = static_cast<std::size_t>(std::ceil(ymax / dy)) + 1;
    std::vector<double> tails(ny);
    for (std::size_t k = 0; k < ny; ++k) {
        double y = static_cast<double>(k) * dy;
        num::KahanSum s;
        s.add(init.mu.tail(y + u));
        for (std::size_t j = stride; j <= iu; j += stride) {
            double v0 = static_cast<double>(j - stride) * sol.step;
            double v1 = static_cast<double>(j) * sol.step;
            double dB = lambda * (tb.values[j] - tb.values[j - stride]) -
                        (sol.q.values[j] - sol.q.values[j - stride]);
            s.add(spec.nu().tail(y + u - 0.5 * (v0 + v1)) * dB);
        }
        if (iu % stride != 0) {
            std::size_t j0 = iu - iu % stride;
            double v0 = static_cast<double>(j0) * sol.step;
            double dB = lambda * (tb.values[iu] - tb.values[j0]) -
                        (sol.q.values[iu] - sol.q.values[j0]);
            s.add(spec.nu().tail(y + u - 0.5 * (v0 + static_cast<double>(iu) * sol.step)) * dB);
        }
        tails[k] = std::max(0.0, s.value());
    }
    Measure server;
    for (std::size_t k = 0; k + 1 < ny; ++k) {
        double d = std::max(0.0, (tails[k] - tails[k + 1]) / dy);
        if (d > 0.0) {
            server.add_poly_piece(static_cast<double>(k) * dy, static_cast<double>(k + 1) * dy,
                                  {d, 0.0, 0.0, 0.0});
        }
    }
    server.finalize();
    return {std::move(buffer), std::move(server)};
}

bool equilibrium_check(const ValidInitialCondition& init, double K,
                       const DistributionSpec& spec, double tol) {
    ValidInitialCondition eq = lift(init.w, K, spec);
    double d = max_prohorov(init.xi, eq.xi, init.mu, eq.mu, tol / 4.0);
    return d <= tol;
}

ConvergenceReport convergence_report(const std::vector<ValidInitialCondition>& inits, double K,
                                     const DistributionSpec& spec, double horizon,
                                     int n_checkpoints) {
    if (spec.is_lattice()) {
        throw std::invalid_argument("convergence_report: nu must be nonlattice");
    }
    ConvergenceReport rep;
    for (int j = n_checkpoints - 1; j >= 0; --j) {
        rep.checkpoints.push_back(horizon / std::pow(2.0, j));
    }
    rep.sup_dist.assign(rep.checkpoints.size(), 0.0);
    double step = spec.beta() / 200.0;
    for (const ValidInitialCondition& init : inits) {
        ValidInitialCondition eq = lift(init.w, K, spec);
        double u_max = horizon;
        FluidSolution sol = solve_key_equation(h_from_initial(init, u_max, step), spec, K,
                                               init.w);
        for (int grow = 0; grow < 8 && sol.Tbar.values.back() < horizon; ++grow) {
            u_max *= 2.0;
            sol = solve_key_equation(h_from_initial(init, u_max, step), spec, K, init.w);
        }
        if (sol.Tbar.values.back() < horizon) {
            throw std::runtime_error("convergence_report: horizon not reachable (z too small)");
        }
        std::vector<double> row;
        for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
            auto [buf, ser] = reconstruct_measures(sol, init, spec, rep.checkpoints[c]);
            double d = max_prohorov(buf, eq.xi, ser, eq.mu, 1e-3);
            row.push_back(d);
            rep.sup_dist[c] = std::max(rep.sup_dist[c], d);
        }
        rep.dist.push_back(std::move(row));
    }
    return rep;
}

} // namespace lps
