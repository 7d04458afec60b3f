#include <cmath>

#include "doctest.h"
#include "greenlab/asymptotics.hpp"
#include "greenlab/error.hpp"

using namespace greenlab;

TEST_CASE("walk simulation") {
    Group z3(GroupSpec::lattice(3)), f2(GroupSpec::free(2));
    auto wm = WordMetric::standard(z3);
    auto w0 = simulate_walk(StepMeasure::srw(z3), 0, {0}, wm, 1);
    CHECK(w0.length[0] == 0);
    CHECK(w0.position[0] == z3.identity());
    // E|X_n|_1 ~ sqrt(6n/pi) for SRW on Z3
    const std::int64_t n = 2500;
    double s = 0;
    const int T = 400;
    for (int t = 0; t < T; ++t) s += double(simulate_walk(StepMeasure::srw(z3), n, {n}, wm, 5, t).length[0]);
    double m = s / T / std::sqrt(double(n));
    CHECK(m >= 1.3);
    CHECK(m <= 1.8);
    auto wf = WordMetric::standard(f2);
    double sf = 0;
    for (int t = 0; t < T; ++t) sf += double(simulate_walk(StepMeasure::srw(f2), n, {n}, wf, 6, t).length[0]);
    CHECK(sf / T / double(n) == doctest::Approx(0.5).epsilon(0.04));
    auto a = simulate_walk(StepMeasure::srw(f2), 50, {10, 50}, wf, 9, 2), b = simulate_walk(StepMeasure::srw(f2), 50, {10, 50}, wf, 9, 2);
    CHECK(a.position == b.position);
    CHECK_THROWS(simulate_walk(StepMeasure::srw(f2), 50, {10, 10}, wf, 9));
    CHECK_THROWS(simulate_walk(StepMeasure::srw(f2), 50, {60}, wf, 9));
}

TEST_CASE("speed in probability") {
    Group f2(GroupSpec::free(2));
    const std::size_t trials = 800;
    auto tab = speed_in_probability(StepMeasure::srw(f2), {100, 400}, {0.1, 0.3, 0.45, 0.8}, trials, WordMetric::standard(f2), 3);
    REQUIRE(tab.rows.size() == 8);
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        CHECK(tab.rows[i].ci <= 1.0 / std::sqrt(double(trials)));
        CHECK(tab.rows[i].trials == trials);
        if (i % 4 != 0) CHECK(tab.rows[i].prob <= tab.rows[i - 1].prob);
    }
    CHECK(tab.rows[0].prob == 1.0);
    CHECK(tab.rows[7].prob == 0.0);
}

TEST_CASE("increment ratio") {
    Group z3(GroupSpec::lattice(3));
    auto rows = increment_ratio_max(StepMeasure::srw(z3), {1, 10, 100}, 200, WordMetric::standard(z3), 4);
    for (const auto& r : rows) {
        CHECK(r.median == 1.0);
        CHECK(r.q25 == 1.0);
        CHECK(r.q75 == 1.0);
    }
    Group z1(GroupSpec::lattice(1));
    auto st = increment_ratio_max(StepMeasure::stable_z(1.0), {10, 100, 1000}, 400, WordMetric::standard(z1), 4);
    for (std::size_t i = 1; i < st.size(); ++i) CHECK(st[i].median >= st[i - 1].median);
    CHECK(st.back().median > st.front().median);
    CHECK_THROWS(increment_ratio_max(StepMeasure::srw(z3), {0, 5}, 10, WordMetric::standard(z3), 4));
}

TEST_CASE("Green speed") {
    Group f2(GroupSpec::free(2)), z3(GroupSpec::lattice(3)), z2(GroupSpec::lattice(2));
    TreeGreenOracle T(2);
    auto f = green_speed_estimate(StepMeasure::srw(f2), {200, 1000}, 400, T, 8);
    // d_G(e,x) = |x| log 3 on the tree and |X_n|/n -> 1/2
    CHECK(f.back().mean == doctest::Approx(std::log(3.0) / 2).epsilon(0.05));
    LatticeGreenOracle G(3);
    auto z = green_speed_estimate(StepMeasure::srw(z3), {100, 1000}, 200, G, 8);
    CHECK(z[1].mean < 0.05);
    CHECK(z[1].mean < z[0].mean);
    CHECK_THROWS_AS(green_speed_estimate(StepMeasure::srw(z2), {10}, 10, G, 1), TransienceError);
    CHECK_THROWS_AS(green_speed_estimate(StepMeasure::srw(f2), {10}, 10, G, 1), BackendMismatch);
}

TEST_CASE("dispersion on Z") {
    Group z1(GroupSpec::lattice(1));
    auto st = StepMeasure::stable_z(1.0);
    std::vector<std::int64_t> ns{16, 32, 64, 128};
    CHECK(tv_dispersion_z(st, 0, ns, 4000).rows[0].tv == 0.0);
    auto c = tv_dispersion_z(st, 1, ns, 20000);
    CHECK_FALSE(c.periodic);
    for (std::size_t i = 1; i < c.rows.size(); ++i) CHECK(c.rows[i].tv < c.rows[i - 1].tv);
    for (const auto& r : c.rows) CHECK(r.tv_err >= r.trunc);
    auto mirror = tv_dispersion_z(st, -1, ns, 20000);
    for (std::size_t i = 0; i < ns.size(); ++i) CHECK(mirror.rows[i].tv == doctest::Approx(c.rows[i].tv).epsilon(1e-12));
    auto srw = tv_dispersion_z(StepMeasure::srw(z1), 1, ns, 400);
    CHECK(srw.periodic);
    CHECK(srw.gcd == 2);
    for (const auto& r : srw.rows) CHECK(r.tv == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tv_dispersion_z(StepMeasure::srw(z1).lazy(0.5), 1, ns, 400).rows.back().tv < 0.2);
}

TEST_CASE("product dispersion bound") {
    Group z1(GroupSpec::lattice(1));
    auto nu = StepMeasure::srw(z1).lazy(0.5);
    auto st = StepMeasure::stable_z(1.0);
    std::vector<std::int64_t> ns{4, 16, 64};
    auto pd = product_dispersion_bound(nu, st, {1}, 1, ns, 4000);
    CHECK(pd.holds);
    for (const auto& r : pd.rows) CHECK(r.slack >= -1e-12);
    auto only_h = product_dispersion_bound(nu, st, {1}, 0, ns, 4000);
    // with z_Z = 0 the Z factor contributes only its retained mass
    auto zc = tv_dispersion_z(st, 0, ns, 4000);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const auto& r = only_h.rows[i];
        CHECK(r.tv_z == 0.0);
        CHECK(r.tv_product == doctest::Approx(r.tv_h * (1.0 - zc.rows[i].trunc)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(product_dispersion_bound(StepMeasure::srw(Group(GroupSpec::lattice(3))), st, {1, 0, 0}, 1, ns, 100),
                    BackendMismatch);
}

TEST_CASE("Mal'cev coordinates") {
    auto m = malcev_coords({3, -2, -5});
    CHECK(m.x1 == 3);
    CHECK(m.x2 == -2);
    CHECK(m.c == -5);
    CHECK(m.N == 3 + 2 + 3);
    CHECK_THROWS_AS(malcev_coords({1, 2}), BackendMismatch);
    auto g = malcev_growth_check(10);
    CHECK(g.violations == 0);
    CHECK(g.checked > 1000);
    CHECK(g.max_ratio <= 0.25 + 0.1);
}

TEST_CASE("truncated coordinate moments") {
    Group h(GroupSpec::heisenberg());
    auto sh = StepMeasure::shell(h, 3);
    auto tm = truncated_coordinate_moments(sh, {100, 1000}, 300, 12);
    REQUIRE(tm.size() == 2);
    for (const auto& t : tm) {
        CHECK(t.weight1 > 0);
        CHECK(t.weight2 >= 0);
        CHECK(std::isfinite(t.weight1_se));
        CHECK(t.coupling_failure > 0);
        CHECK(t.coupling_failure < 1);
    }
    CHECK(tm[1].coupling_failure < tm[0].coupling_failure);
    auto srw = truncated_coordinate_moments(StepMeasure::srw(h), {100}, 500, 12);
    // E|X_n|^2 in the weight-1 block is exactly n for SRW on H3
    CHECK(srw[0].weight1 * 100 == doctest::Approx(1.0).epsilon(5 * srw[0].weight1_se * 100));
    CHECK(srw[0].coupling_failure == 0.0);
    CHECK_THROWS_AS(truncated_coordinate_moments(StepMeasure::srw(Group(GroupSpec::lattice(3))), {10}, 5, 1), BackendMismatch);
}

TEST_CASE("quadrant Martin kernel") {
    auto same = cone_martin_experiment(20, {2, 3}, {2, 3}, {10});
    CHECK(same.ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
    auto rep = cone_martin_experiment(60, {2, 3}, {1, 1}, {10, 20, 30});
    CHECK(rep.target == 6.0);
    CHECK(rep.ratio.back() == doctest::Approx(6.0).epsilon(0.05));
    CHECK(std::abs(rep.ratio[2] - 6) < std::abs(rep.ratio[0] - 6));
    CHECK(rep.harmonic_defect == 0);
    CHECK(rep.homogeneity_degree == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(cone_martin_experiment(20, {0, 3}, {1, 1}, {10}), OutOfRange);
    CHECK_THROWS_AS(cone_martin_experiment(20, {2, 3}, {1, 1}, {30}), OutOfRange);
}
