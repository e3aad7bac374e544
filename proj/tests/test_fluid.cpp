#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lps/fluid.hpp"

using namespace lps;

TEST_CASE("lifting map splits workload at K beta_e") {
    auto s = DistributionSpec::exponential(1.0);  // beta = beta_e = 1

    auto zero = lift(0.0, 10.0, s);
    CHECK(zero.is_zero());
    CHECK(zero.w == 0.0);

    auto low = lift(5.0, 10.0, s);  // w < K beta_e: everything in service
    CHECK(low.xi.is_zero());
    CHECK(low.mu.total_mass() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(low.mu.moment(1.0) == doctest::Approx(5.0).epsilon(1e-9));

    auto high = lift(15.0, 10.0, s);  // w > K beta_e: excess is buffered
    CHECK(high.xi.total_mass() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(high.mu.total_mass() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(tail_sup_distance(high.xi.scaled(1.0 / 5.0), s.nu()) < 1e-9);
    CHECK(high.xi.moment(1.0) + high.mu.moment(1.0) == doctest::Approx(15.0).epsilon(1e-9));
}

TEST_CASE("x_infinity arithmetic") {
    auto e = DistributionSpec::exponential(1.0);
    CHECK(x_infinity(5.0, 10.0, e) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(x_infinity(15.0, 10.0, e) == doctest::Approx(15.0).epsilon(1e-12));

    auto d = DistributionSpec::deterministic(1.0);  // beta = 1, beta_e = 1/2
    // K beta_e = 5; w = 7 gives 2 buffered jobs plus 10 in service
    CHECK(x_infinity(7.0, 10.0, d) == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(x_infinity(3.0, 10.0, d) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("h from the lifted state of an exponential law is w e^{-u}") {
    auto s = DistributionSpec::exponential(1.0);
    for (double w : {5.0, 15.0}) {
        auto init = lift(w, 10.0, s);
        auto h = h_from_initial(init, 10.0, 0.01);
        for (std::size_t i = 0; i < h.size(); i += 100) {
            double u = static_cast<double>(i) * h.step;
            CHECK(h.values[i] == doctest::Approx(w * std::exp(-u)).epsilon(1e-8));
        }
    }
}

TEST_CASE("solution started at the lifted state stays constant") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 2.0, kbe = K * s.beta_e();
    for (double frac : {0.5, 1.0, 1.5}) {
        double w = frac * kbe;
        auto init = lift(w, K, s);
        auto sol = solve_key_equation(h_from_initial(init, 30.0, s.beta() / 200.0), s, K, w);
        double x0 = sol.x.values[0];
        CHECK(x0 == doctest::Approx(sol.x_inf).epsilon(1e-9));
        double worst = 0.0;
        for (double v : sol.x.values) worst = std::max(worst, std::abs(v - x0));
        CHECK(worst < 1e-3 * (1.0 + x0));
        // complementarity and the q/z split hold identically on the grid
        for (std::size_t i = 0; i < sol.x.size(); i += 50) {
            CHECK(sol.q.values[i] == std::max(0.0, sol.x.values[i] - K));
            CHECK(sol.z.values[i] == std::min(sol.x.values[i], K));
            CHECK(sol.q.values[i] * (K - sol.z.values[i]) <= 1e-12 * (1.0 + sol.x.values[i]));
        }
        CHECK(sol.max_residual < 1e-3);
    }
}

TEST_CASE("solution from a non-equilibrium start converges to x_infinity") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 2.0;
    Measure mu;
    mu.add_atom(1.3, 2.0);
    mu.finalize();
    Measure xi;
    xi.finalize();
    auto init = ValidInitialCondition::make(std::move(xi), std::move(mu), K, s);
    CHECK(init.w == doctest::Approx(2.6).epsilon(1e-12));
    auto sol = solve_key_equation(h_from_initial(init, 60.0, s.beta() / 200.0), s, K, init.w);
    double xi_inf = x_infinity(init.w, K, s);
    CHECK(sol.x_inf == doctest::Approx(xi_inf).epsilon(1e-12));
    CHECK(std::abs(sol.x(60.0) - xi_inf) < 0.02 * (1.0 + xi_inf));
}

TEST_CASE("initial condition validation rejects inconsistent states") {
    auto s = DistributionSpec::exponential(1.0);
    Measure mu1;
    mu1.add_atom(1.0, 1.0);
    mu1.finalize();
    Measure xi1;
    xi1.add_atom(2.0, 1.0);  // buffer mass with a free server slot
    xi1.finalize();
    CHECK_THROWS_AS(ValidInitialCondition::make(xi1, mu1, 5.0, s), std::invalid_argument);

    Measure mu2;
    mu2.add_atom(0.0, 2.0);  // mass at zero residual
    mu2.finalize();
    Measure none;
    none.finalize();
    CHECK_THROWS_AS(ValidInitialCondition::make(none, mu2, 2.0, s), std::invalid_argument);

    Measure xi3;
    xi3.add_atom(1.0, 1.0);  // buffered sizes not distributed as nu
    xi3.finalize();
    Measure mu3 = s.nu_e().scaled(2.0);
    CHECK_THROWS_AS(ValidInitialCondition::make(xi3, mu3, 2.0, s), std::invalid_argument);
}

TEST_CASE("perturbation scales the workload by 1 + eps") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 10.0;
    double eps = 0.1;

    // server not full: mu mass below K
    auto under = lift(5.0, K, s);
    auto up = perturb(under, eps, K);
    CHECK(up.w == doctest::Approx((1.0 + eps) * under.w).epsilon(1e-9));
    auto down = perturb(under, -eps, K);
    CHECK(down.w == doctest::Approx((1.0 - eps) * under.w).epsilon(1e-9));

    // server full with an empty buffer
    auto edge = lift(K * s.beta_e(), K, s);
    CHECK(edge.xi.is_zero());
    auto up2 = perturb(edge, eps, K);
    CHECK(up2.w == doctest::Approx((1.0 + eps) * edge.w).epsilon(1e-9));
    CHECK(up2.xi.total_mass() == doctest::Approx(eps * K).epsilon(1e-9));

    // nonempty buffer, both signs and both down-branches
    auto full = lift(15.0, K, s);
    auto up3 = perturb(full, eps, K);
    CHECK(up3.w == doctest::Approx(16.5).epsilon(1e-9));
    auto down3 = perturb(full, -eps, K);  // eps w <= <chi, xi>: shrink the buffer only
    CHECK(down3.w == doctest::Approx(13.5).epsilon(1e-9));
    CHECK(down3.mu.total_mass() == doctest::Approx(full.mu.total_mass()).epsilon(1e-12));
    auto down4 = perturb(full, -0.4, K);  // eps w > <chi, xi>: buffer emptied
    CHECK(down4.w == doctest::Approx(0.6 * 15.0).epsilon(1e-9));
    CHECK(down4.xi.is_zero());

    // h sandwich on a grid
    auto h = h_from_initial(full, 20.0, 0.01);
    auto hu = h_from_initial(up3, 20.0, 0.01);
    auto hd = h_from_initial(down3, 20.0, 0.01);
    for (std::size_t i = 0; i < h.size(); ++i) {
        CHECK(hd.values[i] <= h.values[i] + 1e-12);
        CHECK(h.values[i] <= hu.values[i] + 1e-12);
    }
}

TEST_CASE("comparison property of perturbed solutions") {
    auto s = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    double K = 3.0;
    auto init = lift(1.3 * K * s.beta_e(), K, s);
    CHECK(comparison_check(init, 0.1, s, K, 25.0 * s.beta(), s.beta() / 200.0));
    auto low = lift(0.6 * K * s.beta_e(), K, s);
    CHECK(comparison_check(low, 0.2, s, K, 25.0 * s.beta(), s.beta() / 200.0));
}

TEST_CASE("measure reconstruction at time zero returns the initial state") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 2.0, w = 1.5 * K * s.beta_e();
    auto init = lift(w, K, s);
    auto sol = solve_key_equation(h_from_initial(init, 30.0, s.beta() / 200.0), s, K, w);
    auto [buf, ser] = reconstruct_measures(sol, init, s, 0.0);
    CHECK(prohorov_distance(buf, init.xi, 1e-4) < 1e-3);
    CHECK(prohorov_distance(ser, init.mu, 1e-4) < 1e-3);
}

TEST_CASE("workload is conserved along the reconstructed trajectory") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 2.0, w = 1.5 * K * s.beta_e();
    auto init = lift(w, K, s);
    auto sol = solve_key_equation(h_from_initial(init, 30.0, s.beta() / 200.0), s, K, w);
    for (double t : {0.0, 1.0, 5.0, 20.0}) {
        auto [buf, ser] = reconstruct_measures(sol, init, s, t);
        double wt = buf.moment(1.0) + ser.moment(1.0);
        CHECK(std::abs(wt - w) < 1e-3 * (1.0 + w));
    }
}

TEST_CASE("equilibrium membership check") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 4.0;
    auto eq = lift(1.2 * K * s.beta_e(), K, s);
    CHECK(equilibrium_check(eq, K, s));
    // an atom in service is far from the lifted state of its own workload
    Measure mu;
    mu.add_atom(1.3, 4.0);
    mu.finalize();
    Measure none;
    none.finalize();
    auto atom = ValidInitialCondition::make(std::move(none), std::move(mu), K, s);
    CHECK(!equilibrium_check(atom, K, s, 1e-3));
}

TEST_CASE("residual shrinks when the step is halved") {
    auto s = DistributionSpec::uniform(0.0, 2.0);
    double K = 2.0;
    // non-equilibrium start, so the solution actually moves
    Measure mu;
    mu.add_atom(0.7, 2.0);
    mu.finalize();
    Measure none;
    none.finalize();
    auto init = ValidInitialCondition::make(std::move(none), std::move(mu), K, s);
    double u_max = 15.0;
    auto coarse = solve_key_equation(h_from_initial(init, u_max, s.beta() / 50.0), s, K, init.w);
    auto fine = solve_key_equation(h_from_initial(init, u_max, s.beta() / 100.0), s, K, init.w);
    CHECK(fine.max_residual < coarse.max_residual);
    CHECK(std::abs(fine.x(u_max) - coarse.x(u_max)) < 2.0 * s.beta() / 50.0);
}

TEST_CASE("distance to equilibrium shrinks along the trajectory") {
    auto s = DistributionSpec::exponential(1.0);
    double K = 2.0;
    Measure mu;
    mu.add_atom(1.3, 2.0);
    mu.finalize();
    Measure xi;
    xi.finalize();
    auto far = ValidInitialCondition::make(std::move(xi), std::move(mu), K, s);
    auto rep = convergence_report({far, lift(3.0, K, s)}, K, s, 15.0, 4);
    REQUIRE(rep.checkpoints.size() == 4);
    REQUIRE(rep.dist.size() == 2);
    CHECK(rep.sup_dist.back() <= rep.sup_dist.front() + 1e-9);
    CHECK(rep.sup_dist.back() < 0.1);
    // the equilibrium start stays close throughout
    for (double d : rep.dist[1]) CHECK(d < 0.05);

    auto lat = DistributionSpec::deterministic(1.0);
    CHECK_THROWS_AS(convergence_report({lift(1.0, K, lat)}, K, lat, 5.0, 2),
                    std::invalid_argument);
}
