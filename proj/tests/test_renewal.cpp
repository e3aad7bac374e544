#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lps/distribution.hpp"
#include "lps/renewal.hpp"

using namespace lps;

namespace {

CdfFn cdf_of(const DistributionSpec& s) {
    return [s](double x) { return s.cdf(x); };
}

GridFunction sampled(double step, double u_max, const std::function<double(double)>& f,
                     bool linear = true) {
    auto n = static_cast<std::size_t>(std::ceil(u_max / step)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(static_cast<double>(i) * step);
    return GridFunction{step, std::move(v), linear};
}

// Independent oracle: U(x) = sum_{n>=0} F^{*n}(x) summed term by term, with
// the n-fold convolutions built by direct Stieltjes quadrature against the
// previous term. Slow but has no code in common with renewal_function.
double renewal_series_oracle(const CdfFn& F, double x, double step, int max_terms) {
    auto n = static_cast<std::size_t>(std::ceil(x / step)) + 1;
    std::vector<double> cur(n);  // F^{*k} on the grid, k starts at 1
    for (std::size_t i = 0; i < n; ++i) cur[i] = F(static_cast<double>(i) * step);
    double total = 1.0 + cur[n - 1];
    for (int k = 2; k <= max_terms; ++k) {
        std::vector<double> nxt(n, 0.0);
        // (F^{*k})(u) = int_0^u F^{*(k-1)}(u - v) dF(v)
        for (std::size_t i = 1; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 1; j <= i; ++j) {
                double dF = F(static_cast<double>(j) * step) - F(static_cast<double>(j - 1) * step);
                // evaluate the previous term at u - midpoint by linear interpolation
                double arg = (static_cast<double>(i) - (static_cast<double>(j) - 0.5)) * step;
                double pos = arg / step;
                auto lo = static_cast<std::size_t>(pos);
                double frac = pos - static_cast<double>(lo);
                double val = (lo + 1 < n) ? cur[lo] * (1.0 - frac) + cur[lo + 1] * frac
                                          : cur[n - 1];
                acc += val * dF;
            }
            nxt[i] = acc;
        }
        cur = std::move(nxt);
        total += cur[n - 1];
        if (cur[n - 1] < 1e-12) break;
    }
    return total;
}

} // namespace

TEST_CASE("renewal function of the exponential law is 1 + x") {
    auto s = DistributionSpec::exponential(1.0);
    auto res = renewal_function(cdf_of(s), 80.0, 1.0 / 200.0);
    CHECK(!res.step_too_coarse);
    double max_rel = 0.0;
    for (std::size_t i = 0; i < res.U.size(); ++i) {
        double u = static_cast<double>(i) * res.U.step;
        max_rel = std::max(max_rel, std::abs(res.U.values[i] - (1.0 + u)) / (1.0 + u));
    }
    CHECK(max_rel < 1e-3);
}

TEST_CASE("renewal function matches the direct series oracle") {
    // hyperexponential, no closed form needed: compare against term-by-term summation
    auto s = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    double x = 3.0;
    auto res = renewal_function(cdf_of(s), x, 1.0 / 200.0, false);
    double oracle = renewal_series_oracle(cdf_of(s), x, 1.0 / 100.0, 60);
    CHECK(res.U(x) == doctest::Approx(oracle).epsilon(2e-3));
}

TEST_CASE("renewal function of the deterministic law counts lattice points") {
    auto s = DistributionSpec::deterministic(1.0);
    auto res = renewal_function(cdf_of(s), 5.0, 1.0 / 200.0, false);
    // U(x) = floor(x) + 1 away from the lattice
    CHECK(res.U(2.5) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(res.U(0.5) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.U(4.5) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("renewal function is superadditive-ish: U(x+y) <= U(x) + U(y)") {
    auto s = DistributionSpec::uniform(0.0, 1.0);
    auto res = renewal_function(cdf_of(s), 20.0, 1.0 / 200.0, false);
    for (double x : {0.7, 1.3, 4.0}) {
        for (double y : {0.5, 2.2, 8.0}) {
            CHECK(res.U(x + y) <= res.U(x) + res.U(y) + 1e-6);
        }
    }
}

TEST_CASE("Blackwell increments for a spread-out law") {
    auto s = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    double beta = s.beta();
    auto res = renewal_function(cdf_of(s), 55.0 * beta, beta / 200.0, false);
    double x = 50.0 * beta, delta = beta / 2.0;
    double inc = res.U(x + delta) - res.U(x);
    CHECK(inc == doctest::Approx(delta / beta).epsilon(0.02));
}

TEST_CASE("Stieltjes convolution closed forms") {
    auto s = DistributionSpec::exponential(1.0);
    double step = 1.0 / 400.0, u_max = 4.0;
    auto G = cdf_of(s);

    auto one = sampled(step, u_max, [](double) { return 1.0; });
    auto c1 = convolve_stieltjes(one, G);
    CHECK(c1(1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(2e-3));
    CHECK(c1(3.0) == doctest::Approx(1.0 - std::exp(-3.0)).epsilon(2e-3));

    auto expo = sampled(step, u_max, [](double u) { return std::exp(-u); });
    auto c2 = convolve_stieltjes(expo, G);
    // (e^{-u} * Exp(1))(u) = u e^{-u}
    CHECK(c2(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(2e-3));
    CHECK(c2(2.0) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(2e-3));

    // an atom of G at zero contributes h(u) exactly
    CdfFn Gd = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
    auto c3 = convolve_stieltjes(expo, Gd);
    CHECK(c3(1.5) == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
}

TEST_CASE("key renewal limit for a family of direct Riemann integrable functions") {
    auto s = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    double beta = s.beta();
    double step = beta / 200.0, u_max = 50.0 * beta;
    std::vector<GridFunction> family;
    for (double c : {0.5, 1.0, 2.0}) {
        family.push_back(sampled(step, u_max, [c](double u) { return c * std::exp(-u); }));
    }
    auto rep = key_renewal_check(family, cdf_of(s), beta, 40.0 * beta, u_max, step);
    CHECK(rep.precondition_violations.empty());
    CHECK(rep.per_h_sup.size() == 3);
    CHECK(rep.sup_deviation < 1e-3);

    auto empty = key_renewal_check({}, cdf_of(s), beta, 40.0 * beta, u_max, step);
    CHECK(empty.sup_deviation == 0.0);

    // an increasing h must be flagged
    std::vector<GridFunction> bad{sampled(step, 2.0, [](double u) { return u; })};
    auto flagged = key_renewal_check(bad, cdf_of(s), beta, 1.0, 2.0, step);
    CHECK(!flagged.precondition_violations.empty());
}

TEST_CASE("integration by parts identity") {
    auto s = DistributionSpec::exponential(1.0);
    auto F = cdf_of(s);
    double step = 1.0 / 400.0;

    auto constant = sampled(step, 3.0, [](double) { return 2.0; });
    CHECK(integration_by_parts_check(F, constant, 2.0) < 1e-9);

    auto linear = sampled(step, 3.0, [](double u) { return u; });
    CHECK(integration_by_parts_check(F, linear, 2.0) < 5.0 * step);

    // single jump at v = 1 (piecewise constant grid function)
    auto jump = sampled(step, 3.0, [](double u) { return u < 1.0 ? 0.0 : 1.0; }, false);
    CHECK(integration_by_parts_check(F, jump, 2.5) < 5.0 * step);
}

TEST_CASE("halving the step refines the convolution at second order") {
    auto s = DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0});
    auto F = cdf_of(s);
    double beta = s.beta(), u_max = 40.0 * beta;
    auto value_at = [&](double step) {
        auto h = sampled(step, u_max, [](double u) { return std::exp(-u); });
        auto U = renewal_function(F, u_max, step, false).U;
        CdfFn G = [U](double x) { return x < 0.0 ? 0.0 : U(x); };
        return convolve_stieltjes(h, G)(u_max);
    };
    double step = beta / 100.0;
    double a = value_at(step), b = value_at(step / 2.0), c = value_at(step / 4.0);
    double ratio = (a - b) / (b - c);
    // midpoint quadrature refines faster than first order; observed ratio ~4
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 6.0);
    CHECK(std::abs(b - c) < std::abs(a - b));
}

TEST_CASE("coarse step flag fires when warranted") {
    auto s = DistributionSpec::exponential(1.0);
    auto fine = renewal_function(cdf_of(s), 10.0, 1.0 / 200.0);
    CHECK(!fine.step_too_coarse);
    CHECK(fine.refinement_delta < 1e-3);
}
