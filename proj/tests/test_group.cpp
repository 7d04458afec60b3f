#include <array>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>

#include "doctest.h"
#include "greenlab/error.hpp"
#include "greenlab/group.hpp"

using namespace greenlab;

namespace {

// unitriangular 3x3 matrices [[1,a,c],[0,1,b],[0,0,1]]
using Mat3 = std::array<std::array<std::int64_t, 3>, 3>;

Mat3 to_mat(const Element& g) { return {{{1, g.v[0], g.v[2]}, {0, 1, g.v[1]}, {0, 0, 1}}}; }

Mat3 matmul(const Mat3& x, const Mat3& y) {
    Mat3 z{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) z[i][j] += x[i][k] * y[k][j];
    return z;
}

// free reduction on a letter string
std::vector<std::int64_t> reduce(std::vector<std::int64_t> w) {
    std::vector<std::int64_t> out;
    for (auto x : w) {
        if (!out.empty() && out.back() == -x)
            out.pop_back();
        else
            out.push_back(x);
    }
    return out;
}

Element random_element(const Group& g, std::mt19937_64& rng, int steps) {
    auto gens = g.standard_generators();
    Element x = g.identity();
    for (int i = 0; i < steps; ++i) x = g.mul(x, gens[rng() % gens.size()]);
    return x;
}

}  // namespace

TEST_CASE("lattice law and examples") {
    Group z3(GroupSpec::lattice(3));
    CHECK(z3.mul({1, 0, 0}, {0, 1, 0}) == Element{1, 1, 0});
    CHECK(z3.inv({2, -1, 0}) == Element{-2, 1, 0});
    auto m = WordMetric::standard(z3);
    CHECK(m.length({1, -2, 0}).value == 3);
    CHECK(m.length({1, -2, 0}).mode == MetricMode::ExactFormula);
    auto gens = z3.standard_generators();
    CHECK(sphere(z3, gens, 1).size() == 6);
    CHECK(sphere(z3, gens, 2).size() == 18);
    Group z1(GroupSpec::lattice(1));
    auto nb = z1.neighbors(z1.identity(), z1.standard_generators());
    CHECK(std::set<Element>(nb.begin(), nb.end()) == std::set<Element>{{-1}, {1}});
}

TEST_CASE("free group law against string reduction") {
    Group f2(GroupSpec::free(2));
    // a=1, b=2
    CHECK(f2.mul({1, 2}, {-2, 1}) == Element{1, 1});
    CHECK(f2.inv({1, 2, -1}) == Element{1, -2, -1});
    CHECK(WordMetric::standard(f2).length({1, 2, -1, -2}).value == 4);
    CHECK(sphere(f2, f2.standard_generators(), 2).size() == 12);
    CHECK(f2.neighbors(f2.identity(), f2.standard_generators()).size() == 4);
    std::mt19937_64 rng(7);
    for (int t = 0; t < 500; ++t) {
        Element x = random_element(f2, rng, 9), y = random_element(f2, rng, 9);
        std::vector<std::int64_t> cat = x.v;
        cat.insert(cat.end(), y.v.begin(), y.v.end());
        CHECK(f2.mul(x, y).v == reduce(cat));
    }
    CHECK(f2.format({1, -2}) == "aB");
    CHECK(f2.parse("aB") == Element{1, -2});
}

TEST_CASE("free sphere counts match 2k(2k-1)^(r-1)") {
    for (int k : {2, 3}) {
        Group f(GroupSpec::free(k));
        auto gens = f.standard_generators();
        std::size_t ball = 1;
        auto layers = bfs_layers(f, gens, k == 2 ? 8 : 6);
        for (int r = 1; r < static_cast<int>(layers.size()); ++r) {
            double expect = 2.0 * k * std::pow(2.0 * k - 1, r - 1);
            CHECK(static_cast<double>(sphere(f, gens, r).size()) == expect);
            CHECK(static_cast<double>(layers[r].size()) == expect);
            ball += layers[r].size();
        }
        std::size_t total = 0;
        for (auto& l : layers) total += l.size();
        CHECK(total == ball);
    }
}

TEST_CASE("Heisenberg law against unitriangular matrices") {
    Group h(GroupSpec::heisenberg());
    Element x{1, 0, 0}, y{0, 1, 0};
    CHECK_FALSE(h.mul(x, y) == h.mul(y, x));
    Element comm = h.mul(h.mul(x, y), h.mul(h.inv(x), h.inv(y)));
    CHECK(comm == Element{0, 0, 1});
    CHECK(h.inv({1, 1, 0}) == Element{-1, -1, 1});
    CHECK(WordMetric::standard(h).length({0, 0, 1}).value == 4);
    CHECK(WordMetric::standard(h).length({0, 0, 1}).mode == MetricMode::BfsTable);
    auto nb = h.neighbors(x, h.standard_generators());
    std::set<Element> expect{{2, 0, 0}, {1, 1, 1}, {0, 0, 0}, {1, -1, -1}};
    CHECK(std::set<Element>(nb.begin(), nb.end()) == expect);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> u(-50, 50);
    for (int t = 0; t < 1000; ++t) {
        Element a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
        Mat3 m = matmul(to_mat(a), to_mat(b));
        CHECK(h.mul(a, b) == Element{m[0][1], m[1][2], m[0][2]});
        CHECK(h.is_identity(h.mul(a, h.inv(a))));
    }
}

TEST_CASE("associativity and inverse length symmetry on every backend") {
    std::mt19937_64 rng(11);
    for (const char* name : {"Z1", "Z3", "F2", "F3", "H3", "Z2xZ", "F2xZ", "H3xZ"}) {
        Group g(GroupSpec::parse(name));
        auto m = WordMetric::standard(g);
        for (int t = 0; t < 200; ++t) {
            Element a = random_element(g, rng, 6), b = random_element(g, rng, 6), c = random_element(g, rng, 6);
            CHECK(g.mul(g.mul(a, b), c) == g.mul(a, g.mul(b, c)));
            CHECK(m.length(a).value == m.length(g.inv(a)).value);
            CHECK(m.length(g.mul(a, b)).value <= m.length(a).value + m.length(b).value);
            CHECK(g.parse(g.format(a)) == a);
            Element ip = a;
            g.mul_inplace(ip, b);
            CHECK(ip == g.mul(a, b));
        }
        CHECK(m.length(g.identity()).value == 0);
    }
}

TEST_CASE("exact formula agrees with BFS on lattices and free groups") {
    for (const char* name : {"Z2", "Z3", "F2", "Z2xZ", "F2xZ"}) {
        Group g(GroupSpec::parse(name));
        auto gens = g.standard_generators();
        auto exact = WordMetric::standard(g);
        auto layers = bfs_layers(g, gens, 5);
        for (int r = 0; r < static_cast<int>(layers.size()); ++r)
            for (const auto& x : layers[r]) CHECK(exact.length(x).value == r);
    }
}

TEST_CASE("Heisenberg ball growth is quartic") {
    Group h(GroupSpec::heisenberg());
    auto layers = bfs_layers(h, h.standard_generators(), 12);
    std::vector<double> lr, lb;
    std::size_t ball = 0;
    for (int r = 0; r <= 12; ++r) {
        ball += layers[r].size();
        if (r >= 4) {
            lr.push_back(std::log(r));
            lb.push_back(std::log(static_cast<double>(ball)));
        }
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) mx += lr[i], my += lb[i];
    mx /= lr.size(), my /= lr.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) sxy += (lr[i] - mx) * (lb[i] - my), sxx += (lr[i] - mx) * (lr[i] - mx);
    double slope = sxy / sxx;
    CHECK(slope >= 3.5);
    CHECK(slope <= 4.5);
    CHECK(GroupSpec::heisenberg().growth_degree() == 4);
}

TEST_CASE("quasi-norm is bi-Lipschitz to BFS length") {
    Group h(GroupSpec::heisenberg());
    auto m = WordMetric::bfs(h, h.standard_generators(), 10);
    auto fit = m.fit_bilipschitz();
    CHECK(fit.A <= 4.0);
    for (const auto& [g, len] : m.table()) {
        double N = static_cast<double>(heisenberg_quasi_norm(g));
        CHECK(N / fit.A - fit.B <= len + 1e-12);
        CHECK(len <= fit.A * N + fit.B + 1e-12);
    }
    CHECK(heisenberg_quasi_norm({3, -2, -5}) == 3 + 2 + 3);
    auto fallback = WordMetric::standard(h);
    CHECK(fallback.length({40, 0, 0}).mode == MetricMode::HomogeneousQuasiNorm);
}

TEST_CASE("errors") {
    Group z3(GroupSpec::lattice(3)), f2(GroupSpec::free(2));
    CHECK_THROWS_AS(z3.mul({1, 0}, {0, 1, 0}), BackendMismatch);
    CHECK_THROWS_AS(f2.mul({1, -1}, {1}), BackendMismatch);  // not reduced
    CHECK_THROWS_AS(WordMetric::bfs(z3, z3.standard_generators(), 3).length({4, 0, 0}), OutOfRange);
    CHECK_THROWS_AS(sphere(f2, f2.standard_generators(), 11), CapExceeded);
    CHECK_THROWS(GroupSpec::parse("Q8"));
    CHECK_THROWS(GeneratorSet(z3, {{1, 0, 0}}));
    CHECK(GroupSpec::parse("H3xZ").name() == "H3xZ");
    CHECK(GroupSpec::parse("Z3").transient());
    CHECK_FALSE(GroupSpec::parse("Z2").transient());
}
