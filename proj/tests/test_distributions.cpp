#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lps/distribution.hpp"
#include "lps/rng.hpp"
#include "lps/serialization.hpp"

using namespace lps;

namespace {

void check_common_invariants(const DistributionSpec& s) {
    CHECK(s.cdf(0.0) == doctest::Approx(0.0));
    CHECK(s.nu().total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.nu_e().total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    // beta_e identity
    CHECK(s.beta_e() ==
          doctest::Approx(s.nu().moment(2.0) / (2.0 * s.beta())).epsilon(1e-9));
    // F_e is 1/beta-Lipschitz
    double step = s.beta() / 7.0;
    for (int i = 0; i < 40; ++i) {
        double x = step * i;
        double d = s.equilibrium_cdf(x + step) - s.equilibrium_cdf(x);
        CHECK(d >= -1e-12);
        CHECK(d <= step / s.beta() + 1e-12);
    }
    // quantile inverts the cdf
    for (double u : {0.05, 0.3, 0.5, 0.9, 0.999}) {
        double x = s.quantile(u);
        CHECK(s.cdf(x) == doctest::Approx(u).epsilon(1e-6));
    }
}

double empirical_mean(const DistributionSpec& s, int n, std::uint64_t seed) {
    RngStream rng(seed);
    num::KahanSum sum;
    for (int i = 0; i < n; ++i) sum.add(s.sample(rng));
    return sum.value() / n;
}

} // namespace

TEST_CASE("exponential") {
    auto s = DistributionSpec::exponential(1.0);
    CHECK(s.beta() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.scv() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.beta_e() == doctest::Approx(1.0).epsilon(1e-9));
    // nu_e = nu for the exponential law
    CHECK(tail_sup_distance(s.nu(), s.nu_e()) <= 1e-9);
    check_common_invariants(s);
    auto s2 = DistributionSpec::exponential(2.0);
    CHECK(s2.beta() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s2.scv() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("deterministic") {
    auto s = DistributionSpec::deterministic(1.0);
    CHECK(s.beta() == doctest::Approx(1.0));
    CHECK(s.scv() == doctest::Approx(0.0));
    CHECK(s.beta_e() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.nu_e().density(0.5) == doctest::Approx(1.0));
    CHECK(s.is_lattice());
    RngStream rng(1);
    CHECK(s.sample(rng) == 1.0);
    auto s2 = DistributionSpec::deterministic(2.0);
    RngStream rng2(9);
    for (int i = 0; i < 5; ++i) CHECK(s2.sample(rng2) == 2.0);
}

TEST_CASE("uniform") {
    auto s = DistributionSpec::uniform(0.0, 1.0);
    CHECK(s.beta() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.scv() == doctest::Approx((1.0 / 12.0) / 0.25).epsilon(1e-9));
    CHECK(s.beta_e() == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(s.nu_e().density(0.0) == doctest::Approx(2.0));
    CHECK(s.nu_e().density(0.75) == doctest::Approx(0.5));
    check_common_invariants(s);
}

TEST_CASE("hyperexponential") {
    auto s = DistributionSpec::hyper_exponential({0.5, 0.5}, {1.0, 2.0});
    CHECK(s.beta() == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s.scv() == doctest::Approx(1.25 / 0.5625 - 1.0).epsilon(1e-9));
    check_common_invariants(s);
    CHECK(empirical_mean(s, 1000000, 77) ==
          doctest::Approx(0.75).epsilon(3.0 * 1.1 / std::sqrt(1e6) / 0.75));
}

TEST_CASE("truncated lognormal") {
    auto s = DistributionSpec::lognormal_truncated(0.0, 0.5);
    double untruncated = std::exp(0.125);
    CHECK(s.beta() == doctest::Approx(untruncated).epsilon(1e-4));
    check_common_invariants(s);
    CHECK(!s.is_lattice());
    // all moments needed by the 4 + 2p condition are finite (bounded support)
    CHECK(std::isfinite(s.nu().moment(4.0 + 2.0 * s.p())));
    CHECK(empirical_mean(s, 200000, 5) == doctest::Approx(s.beta()).epsilon(0.005));
}

TEST_CASE("sampling is reproducible per seed") {
    auto s = DistributionSpec::exponential(1.0);
    RngStream a(123), b(123), c(124);
    double va = s.sample(a), vb = s.sample(b), vc = s.sample(c);
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(empirical_mean(s, 1000000, 3) == doctest::Approx(1.0).epsilon(3.0 / std::sqrt(1e6)));
}

TEST_CASE("with_mean preserves family and scv") {
    for (auto s : {DistributionSpec::exponential(1.0),
                   DistributionSpec::hyper_exponential({0.4, 0.6}, {1.0, 3.0}),
                   DistributionSpec::uniform(0.5, 2.0),
                   DistributionSpec::lognormal_truncated(0.1, 0.4)}) {
        auto t = s.with_mean(2.5);
        CHECK(t.family() == s.family());
        CHECK(t.beta() == doctest::Approx(2.5).epsilon(1e-9));
        CHECK(t.scv() == doctest::Approx(s.scv()).epsilon(1e-7));
    }
}

TEST_CASE("spec serialization round trips") {
    for (auto s : {DistributionSpec::exponential(1.5),
                   DistributionSpec::hyper_exponential({0.25, 0.75}, {2.0, 0.5}),
                   DistributionSpec::deterministic(3.0),
                   DistributionSpec::uniform(0.0, 2.0),
                   DistributionSpec::lognormal_truncated(0.0, 1.0)}) {
        auto j = distribution_to_json(s);
        auto back = distribution_from_json(j);
        CHECK(back.family() == s.family());
        CHECK(back.params() == s.params());
        CHECK(back.p() == s.p());
        CHECK(back.beta() == doctest::Approx(s.beta()).epsilon(1e-14));
    }
}
