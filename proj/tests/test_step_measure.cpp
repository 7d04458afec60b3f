#include <gsl/gsl_sf_psi.h>
#include <gsl/gsl_sf_zeta.h>

#include <cmath>
#include <map>

#include "doctest.h"
#include "greenlab/error.hpp"
#include "greenlab/rng.hpp"
#include "greenlab/step_measure.hpp"

using namespace greenlab;

namespace {

// sum_{r>=r0} 1/(r^2 log r): direct to N, tail between the integral bounds
double shell_normalizer(std::int64_t r0) {
    const std::int64_t N = 10'000'000;
    long double s = 0;
    for (std::int64_t r = N; r >= r0; --r) {
        long double x = static_cast<long double>(r);
        s += 1.0L / (x * x * std::log(x));
    }
    double x = static_cast<double>(N);
    return static_cast<double>(s) + 1.0 / (x * std::log(x));  // ~ integral from N
}

}  // namespace

TEST_CASE("uniform measures and laziness") {
    for (const char* name : {"Z3", "F2", "H3"}) {
        Group g(GroupSpec::parse(name));
        auto mu = StepMeasure::srw(g);
        auto gens = g.standard_generators();
        for (const auto& t : gens.elements()) CHECK(mu.pmf(t) == doctest::Approx(1.0 / gens.size()).epsilon(1e-15));
        CHECK(mu.symmetric());
        CHECK(mu.certify_generation());
        CHECK(mu.laziness() == 0.0);
    }
    Group z3(GroupSpec::lattice(3));
    auto mu = StepMeasure::srw(z3);
    auto lz = mu.lazy(0.5);
    CHECK(lz.pmf(z3.identity()) == 0.5);
    CHECK(lz.pmf({1, 0, 0}) == doctest::Approx(1.0 / 12).epsilon(1e-15));
    CHECK(mu.lazy(0.0).pmf({0, 0, -1}) == mu.pmf({0, 0, -1}));
    CHECK(lz.lazy(0.5).pmf(z3.identity()) == 0.75);
    CHECK(lz.lazy(0.5).laziness() == 0.75);
    for (double eps : {0.1, 0.25, 0.9})
        for (const Element& x : {Element{0, 0, 0}, Element{1, 0, 0}, Element{2, 0, 0}})
            CHECK(mu.lazy(eps).pmf(x) == doctest::Approx(eps * (x == z3.identity()) + (1 - eps) * mu.pmf(x)).epsilon(1e-15));
    CHECK_THROWS(mu.lazy(1.0));
    CHECK_THROWS(mu.lazy(-0.1));
    CHECK_THROWS(StepMeasure::finite(z3, {{{1, 0, 0}, 0.5}}));
}

TEST_CASE("shell measure bounds and normalization") {
    Group h(GroupSpec::heisenberg());
    auto mu = StepMeasure::shell(h, 3);
    const double Z = shell_normalizer(3);
    CHECK(mu.radius_law()->normalizer() == doctest::Approx(Z).epsilon(1e-6));
    CHECK(Z == doctest::Approx(0.24485).epsilon(1e-4));
    auto [c1, c2] = mu.shell_constants();
    for (std::int64_t r = 3; r <= 10'000; ++r) {
        double f = 1.0 / (double(r) * r * std::log(double(r)));
        double pr = mu.radius_mass(r);
        CHECK(pr >= c1 * f * (1 - 1e-12));
        CHECK(pr <= c2 * f * (1 + 1e-12));
    }
    long double total = 0;
    for (std::int64_t r = 0; r <= 200'000; ++r) total += mu.radius_mass(r);
    total += 0.9L * mu.radius_law()->tail_prob(200'001);
    CHECK(std::abs(static_cast<double>(total) - 1.0) < 1e-12);
    CHECK(mu.pmf({5, 0, 0}) == doctest::Approx(0.9 / Z / (25 * std::log(5.0)) / 4).epsilon(1e-9));
    CHECK(mu.pmf({5, 1, 0}) == 0.0);
    CHECK(mu.pmf({-7, 0, 0}) == mu.pmf({7, 0, 0}));
    CHECK(mu.certify_generation());
    CHECK_THROWS(StepMeasure::shell(h, 2));
    CHECK_THROWS_AS(StepMeasure::shell(Group(GroupSpec::free(2)), 3), BackendMismatch);
}

TEST_CASE("stable measure constants") {
    auto mu = StepMeasure::stable_z(1.0);
    CHECK(mu.pmf({1}) == doctest::Approx(3.0 / (M_PI * M_PI)).epsilon(1e-12));
    CHECK(mu.pmf({1}) == doctest::Approx(0.30396).epsilon(1e-4));
    for (std::int64_t k = 1; k <= 10'000; k += 37) CHECK(mu.pmf({k}) == mu.pmf({-k}));
    for (double a : {0.5, 1.0, 1.5}) {
        auto m = StepMeasure::stable_z(a);
        double C = 1.0 / (2.0 * gsl_sf_zeta(1.0 + a));
        CHECK(m.pmf({3}) == doctest::Approx(C * std::pow(3.0, -1 - a)).epsilon(1e-12));
    }
    // x P(|S1| > x) -> 2 C_1 = 6 / pi^2
    const double C1 = 3.0 / (M_PI * M_PI);
    for (double x : {1e2, 1e4, 1e6}) {
        double tail = 2.0 * C1 * gsl_sf_psi_1(x + 1.0);  // sum_{k > x} 1/k^2 = psi'(x + 1)
        CHECK(mu.radius_law()->tail_prob(static_cast<std::int64_t>(x) + 1) == doctest::Approx(tail).epsilon(1e-9));
    }
    CHECK(1e6 * mu.radius_law()->tail_prob(1'000'001) == doctest::Approx(6.0 / (M_PI * M_PI)).epsilon(1e-5));
    CHECK_THROWS(StepMeasure::stable_z(2.0));
    CHECK_THROWS(StepMeasure::stable_z(0.0));
}

TEST_CASE("first moment partial sums") {
    Group z3(GroupSpec::lattice(3));
    auto wm = WordMetric::standard(z3);
    for (std::int64_t R : {1, 5, 100}) CHECK(StepMeasure::srw(z3).first_moment_partial(R, wm) == doctest::Approx(1.0));
    Group z1(GroupSpec::lattice(1));
    auto wz = WordMetric::standard(z1);
    auto st = StepMeasure::stable_z(1.0);
    const double C1 = 3.0 / (M_PI * M_PI);
    // 2 C H_R
    auto H = [](double R) { return gsl_sf_psi(R + 1.0) + 0.57721566490153286; };
    CHECK(st.first_moment_partial(1000, wz) == doctest::Approx(2 * C1 * H(1000)).epsilon(1e-9));
    double ratio = st.first_moment_partial(1'000'000, wz) / st.first_moment_partial(1000, wz);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));

    Group h(GroupSpec::heisenberg());
    auto sh = StepMeasure::shell(h, 3);
    auto qn = WordMetric::quasi_norm(h);
    double gain = sh.first_moment_partial(1'000'000, qn) - sh.first_moment_partial(1000, qn);
    double c1 = sh.shell_constants().first;
    CHECK(gain >= c1 * (std::log(std::log(1e6 + 1)) - std::log(std::log(1001.0))));
    double prev = 0;
    for (double R : {1e3, 1e4, 1e5, 1e6}) {
        double v = sh.first_moment_partial(static_cast<std::int64_t>(R), qn);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("samplers match their laws") {
    Group f2(GroupSpec::free(2));
    auto mu = StepMeasure::srw(f2);
    Rng rng = make_stream(42, "test", 0);
    const int N = 1'000'000;
    std::map<Element, int> cnt;
    for (int i = 0; i < N; ++i) cnt[mu.sample(rng)]++;
    CHECK(cnt.size() == 4);
    const double sd = std::sqrt(0.25 * 0.75 / N);
    for (auto& [g, c] : cnt) CHECK(std::abs(double(c) / N - 0.25) < 4 * sd);

    auto lz = mu.lazy(0.5);
    int ide = 0;
    for (int i = 0; i < 200'000; ++i) ide += lz.sample(rng).v.empty();
    CHECK(std::abs(ide / 2e5 - 0.5) < 4 * std::sqrt(0.25 / 2e5));

    Group h(GroupSpec::heisenberg());
    auto sh = StepMeasure::shell(h, 3);
    const double Z = shell_normalizer(3);
    std::map<std::int64_t, int> rad;
    for (int i = 0; i < N; ++i) {
        Element s = sh.sample(rng);
        CHECK(s.v[2] == 0);
        rad[std::max(std::llabs(s.v[0]), std::llabs(s.v[1]))]++;
    }
    for (std::int64_t r = 1; r <= 50; ++r) {
        if (r == 2) {
            CHECK(rad[2] == 0);
            continue;
        }
        double p = r == 1 ? 0.1 : 0.9 / Z / (double(r) * r * std::log(double(r)));
        double sdr = std::sqrt(p * (1 - p) / N);
        CHECK(std::abs(rad[r] / double(N) - p) < 4 * sdr);
    }
}

TEST_CASE("sampling is reproducible per stream") {
    auto mu = StepMeasure::stable_z(1.0);
    Rng a = make_stream(9, "walk", 3), b = make_stream(9, "walk", 3), c = make_stream(9, "walk", 4);
    bool differ = false;
    for (int i = 0; i < 100; ++i) {
        Element x = mu.sample(a), y = mu.sample(b), z = mu.sample(c);
        CHECK(x == y);
        differ = differ || !(x == z);
    }
    CHECK(differ);
}
