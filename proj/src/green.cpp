#include "greenlab/green.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "greenlab/error.hpp"
#include "greenlab/parallel.hpp"
#include "greenlab/rng.hpp"

namespace greenlab {

namespace {

std::atomic<std::uint64_t> g_solves{0};

using SpMat = Eigen::SparseMatrix<double>;

// Step weights aligned with domain steps; also returns the holding mass P(e).
std::vector<double> step_weights(const Domain& d, const StepMeasure& mu, double& hold) {
    if (!mu.finite_support()) throw std::invalid_argument("killed solver needs a finite-support measure");
    if (!mu.symmetric()) throw std::invalid_argument("killed solver needs a symmetric measure");
    if (mu.group().spec() != d.group().spec()) throw BackendMismatch("measure and domain live on different groups");
    std::vector<double> w;
    double total = hold = mu.pmf(d.group().identity());
    for (const auto& t : d.steps()) {
        w.push_back(mu.pmf(t));
        total += w.back();
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("domain step set does not cover supp(mu)");
    return w;
}

SpMat killed_operator(const Domain& d, const std::vector<double>& w, double hold) {
    const std::size_t n = d.size(), m = w.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * (m + 1));
    for (std::size_t i = 0; i < n; ++i) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0 - hold);
        for (std::size_t j = 0; j < m; ++j) {
            auto k = d.neighbor(i, j);
            if (k >= 0 && w[j] > 0.0) trip.emplace_back(static_cast<int>(i), k, -w[j]);
        }
    }
    SpMat A(static_cast<int>(n), static_cast<int>(n));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::uint64_t solve_count() { return g_solves.load(); }

std::int64_t GreenTable::source_index(const Element& a) const {
    for (std::size_t s = 0; s < sources.size(); ++s)
        if (sources[s] == a) return static_cast<std::int64_t>(s);
    return -1;
}

double GreenTable::value(std::size_t s, const Element& x) const {
    auto i = domain->index(x);
    return i < 0 ? 0.0 : values[s][static_cast<std::size_t>(i)];
}

std::optional<double> GreenTable::lookup(const Element& a, const Element& x) const {
    if (auto s = source_index(a); s >= 0) return value(static_cast<std::size_t>(s), x);
    if (auto s = source_index(x); s >= 0) return value(static_cast<std::size_t>(s), a);
    return std::nullopt;
}

double GreenTable::at(const Element& a, const Element& x) const {
    auto v = lookup(a, x);
    if (!v) throw OutOfRange("Green table has no column for this pair");
    return *v;
}

GreenTable killed_green_solve(std::shared_ptr<const Domain> omega, const std::vector<Element>& sources, const StepMeasure& mu,
                              double tol, std::size_t dense_below) {
    if (!omega) throw std::invalid_argument("null domain");
    double hold = 0.0;
    auto w = step_weights(*omega, mu, hold);
    std::vector<std::size_t> idx;
    for (const auto& a : sources) {
        auto i = omega->index(a);
        if (i < 0) throw OutOfRange("source " + omega->group().format(a) + " outside the domain");
        idx.push_back(static_cast<std::size_t>(i));
    }
    SpMat A = killed_operator(*omega, w, hold);
    const int n = static_cast<int>(omega->size());

    GreenTable t;
    t.domain = omega;
    t.sources = sources;
    t.values.resize(sources.size());
    t.tol = tol;
    t.laziness = mu.laziness();
    t.measure_hash = mu.hash();
    t.measure_descriptor = mu.descriptor();
    std::vector<double> res(sources.size(), 0.0);

    if (omega->size() < dense_below) {
        Eigen::MatrixXd D = Eigen::MatrixXd(A);
        Eigen::LLT<Eigen::MatrixXd> llt(D);
        if (llt.info() != Eigen::Success) throw NumericError("dense Cholesky of I - P failed");
        for (std::size_t s = 0; s < sources.size(); ++s) {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            b[static_cast<int>(idx[s])] = 1.0;
            Eigen::VectorXd v = llt.solve(b);
            res[s] = inf_norm(b - A * v);
            t.values[s].assign(v.data(), v.data() + n);
            ++g_solves;
        }
        Eigen::VectorXd tau = llt.solve(Eigen::VectorXd::Ones(n));
        t.max_exit_time = inf_norm(tau);
    } else {
        parallel_for(sources.size(), [&](std::size_t s) {
            Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
            cg.setTolerance(tol);
            cg.setMaxIterations(std::max(2000, 20 * static_cast<int>(std::sqrt(static_cast<double>(n))) * 20));
            cg.compute(A);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            b[static_cast<int>(idx[s])] = 1.0;
            Eigen::VectorXd v = cg.solve(b);
            res[s] = inf_norm(b - A * v);
            if (cg.info() != Eigen::Success)
                throw NumericError("conjugate gradients did not converge (residual " + std::to_string(res[s]) + ")");
            t.values[s].assign(v.data(), v.data() + n);
            ++g_solves;
        });
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-8);
        cg.compute(A);
        Eigen::VectorXd tau = cg.solve(Eigen::VectorXd::Ones(n));
        // exit times only scale the error bound; a loose solve suffices
        t.max_exit_time = 1.01 * inf_norm(tau);
    }
    t.residual = sources.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
    t.error_bound = t.residual * t.max_exit_time;
    return t;
}

GreenBracket green_bracket(const Element& a, const Element& x, const StepMeasure& mu, int R1, int R2, double tol) {
    const Group& g = mu.group();
    if (!g.spec().transient()) throw TransienceError("Green function on recurrent backend " + g.spec().name());
    if (!(R1 < R2)) throw std::invalid_argument("green_bracket needs R1 < R2");
    std::vector<Element> T;
    for (const auto& s : mu.steps()) T.push_back(s.g);
    int Rm = (R1 + R2) / 2;
    if (Rm == R1) Rm = R1 + 1;
    if (Rm >= R2) throw std::invalid_argument("green_bracket needs R2 >= R1 + 2");
    GreenBracket b;
    double v[3];
    int radii[3] = {R1, Rm, R2};
    for (int k = 0; k < 3; ++k) {
        auto dom = Domain::ball(g, radii[k], T);
        if (k == 0 && (!dom->contains(a) || !dom->contains(x))) throw OutOfRange("bracket points must lie in B(e,R1)");
        auto tab = killed_green_solve(dom, {a}, mu, tol);
        v[k] = tab.value(0, x);
    }
    b.g_r1 = v[0];
    b.g_mid = v[1];
    b.g_r2 = v[2];
    b.lower = v[0];
    double d1 = v[1] - v[0], d2 = v[2] - v[1];
    if (d1 <= 0.0 || d2 < 0.0 || d2 >= d1) {
        b.infinite = true;
        b.ratio = d1 > 0.0 ? d2 / d1 : std::numeric_limits<double>::infinity();
        b.upper = std::numeric_limits<double>::infinity();
        return b;
    }
    b.ratio = d2 / d1;
    b.upper = b.lower + (v[2] - v[0]) / (1.0 - b.ratio);
    b.extrapolated = true;
    return b;
}

McEstimate mc_green_diagonal(const StepMeasure& mu, std::size_t trials, std::size_t path_cap, std::uint64_t seed) {
    const Group& g = mu.group();
    if (!g.spec().transient()) throw TransienceError("Green function on recurrent backend " + g.spec().name());
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    std::vector<double> visits(trials);
    std::vector<double> late(trials);
    parallel_for(trials, [&](std::size_t i) {
        Rng rng = make_stream(seed, "mc-green-diagonal", i);
        Element x = g.identity(), s;
        const Element e = g.identity();
        double v = 1.0, lv = 0.0;
        for (std::size_t t = 1; t <= path_cap; ++t) {
            mu.sample_into(s, rng);
            g.mul_inplace(x, s);
            if (x == e) {
                v += 1.0;
                if (2 * t > path_cap) lv += 1.0;
            }
        }
        visits[i] = v;
        late[i] = lv;
    });
    double mean = 0.0, sq = 0.0, lsum = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        mean += visits[i];
        sq += visits[i] * visits[i];
        lsum += late[i];
    }
    const double n = static_cast<double>(trials);
    mean /= n;
    double var = std::max(0.0, sq / n - mean * mean);
    McEstimate r;
    r.trials = trials;
    r.estimate = mean;
    r.hit_prob = 1.0;
    r.bias_bound = lsum / n;
    r.bias_flag = lsum > 0.05 * std::max(1.0, (mean - 1.0) * n);
    r.ci_half = 1.96 * std::sqrt(var / n) + r.bias_bound;
    return r;
}

McEstimate mc_hitting_green(const StepMeasure& mu, const Element& a, const Element& x, std::size_t trials, std::size_t path_cap,
                            const McEstimate& g_ee, std::uint64_t seed) {
    const Group& g = mu.group();
    if (!g.spec().transient()) throw TransienceError("Green function on recurrent backend " + g.spec().name());
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    std::vector<std::int64_t> hit(trials, -1);
    parallel_for(trials, [&](std::size_t i) {
        if (a == x) {
            hit[i] = 0;
            return;
        }
        Rng rng = make_stream(seed, "mc-hitting", i);
        Element y = a, s;
        for (std::size_t t = 1; t <= path_cap; ++t) {
            mu.sample_into(s, rng);
            g.mul_inplace(y, s);
            if (y == x) {
                hit[i] = static_cast<std::int64_t>(t);
                return;
            }
        }
    });
    double hits = 0.0, late = 0.0, last_decile = 0.0;
    for (auto h : hit) {
        if (h < 0) continue;
        hits += 1.0;
        if (2 * static_cast<std::size_t>(h) > path_cap) late += 1.0;
        if (10 * static_cast<std::size_t>(h) > 9 * path_cap) last_decile += 1.0;
    }
    const double n = static_cast<double>(trials);
    McEstimate r;
    r.trials = trials;
    r.hit_prob = hits / n;
    r.hit_ci = 1.96 * std::sqrt(r.hit_prob * (1.0 - r.hit_prob) / n);
    r.bias_bound = late / n;
    r.bias_flag = last_decile > 0.05 * std::max(hits, 1.0);
    r.estimate = r.hit_prob * g_ee.estimate;
    r.ci_half = r.hit_prob * g_ee.ci_half + g_ee.estimate * (r.hit_ci + r.bias_bound);
    return r;
}

double ExitDistribution::at(const Element& z) const {
    auto i = domain->boundary_index(z);
    return i < 0 ? 0.0 : prob[static_cast<std::size_t>(i)];
}

double ExitDistribution::mass() const {
    double s = 0.0;
    for (double p : prob) s += p;
    return s;
}

ExitDistribution exit_from_table(const GreenTable& on_S, const Element& a, const StepMeasure& mu) {
    const Domain& S = *on_S.domain;
    auto s = on_S.source_index(a);
    if (s < 0) throw OutOfRange("exit_from_table: start is not a source");
    double hold = 0.0;
    auto w = step_weights(S, mu, hold);
    ExitDistribution ex;
    ex.domain = on_S.domain;
    ex.start = a;
    ex.prob.assign(S.boundary().size(), 0.0);
    const auto& G = on_S.values[static_cast<std::size_t>(s)];
    std::size_t adjacent = 0;
    for (std::size_t i = 0; i < S.size(); ++i) {
        bool touches = false;
        for (std::size_t j = 0; j < w.size(); ++j) {
            auto k = S.neighbor(i, j);
            if (k < 0) {
                ex.prob[static_cast<std::size_t>(-k - 1)] += G[i] * w[j];
                touches = true;
            }
        }
        adjacent += touches;
    }
    ex.solver_residual = on_S.error_bound * static_cast<double>(adjacent);
    return ex;
}

ExitDistribution exit_distribution(std::shared_ptr<const Domain> S, const Element& a, const StepMeasure& mu, ExitMethod method,
                                   std::size_t trials, std::uint64_t seed, double tol) {
    if (!S->contains(a)) throw OutOfRange("exit_distribution: start outside S");
    if (method == ExitMethod::Solve) return exit_from_table(killed_green_solve(S, {a}, mu, tol), a, mu);
    if (trials == 0) throw std::invalid_argument("MonteCarlo exit needs trials > 0");
    const Group& g = S->group();
    std::vector<std::int64_t> where(trials, -1);
    parallel_for(trials, [&](std::size_t i) {
        Rng rng = make_stream(seed, "mc-exit", i);
        Element y = a, s;
        for (std::uint64_t t = 0; t < 1'000'000'000ULL; ++t) {
            mu.sample_into(s, rng);
            g.mul_inplace(y, s);
            if (!S->contains(y)) {
                where[i] = S->boundary_index(y);
                if (where[i] < 0) throw std::logic_error("walk left S outside dS; T does not cover supp(mu)");
                return;
            }
        }
        throw NumericError("walk did not exit S");
    });
    ExitDistribution ex;
    ex.domain = S;
    ex.start = a;
    ex.trials = trials;
    ex.prob.assign(S->boundary().size(), 0.0);
    for (auto k : where) ex.prob[static_cast<std::size_t>(k)] += 1.0 / static_cast<double>(trials);
    return ex;
}

ExitCheck verify_exit_decomposition(const ExitDistribution& exit, const Element& x, const GreenTable& enclosing) {
    if (exit.domain->contains(x)) throw std::invalid_argument("verify_exit_decomposition needs x outside S");
    double lhs = enclosing.at(exit.start, x);
    double rhs = 0.0;
    double gmax = 0.0;
    const auto& B = exit.domain->boundary();
    for (std::size_t z = 0; z < B.size(); ++z) {
        if (exit.prob[z] == 0.0) continue;
        double gz = enclosing.at(B[z], x);
        rhs += exit.prob[z] * gz;
        gmax = std::max(gmax, gz);
    }
    ExitCheck c;
    c.residual = std::abs(lhs - rhs);
    c.bound = 10.0 * (2.0 * enclosing.error_bound + exit.solver_residual * gmax);
    return c;
}

BoundaryGreenMatrix boundary_green_matrix(const Domain& S, const GreenTable& enclosing, const ExitDistribution* exit) {
    BoundaryGreenMatrix out;
    out.index = S.boundary();
    const auto n = static_cast<int>(out.index.size());
    out.M.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.M(i, j) = enclosing.at(out.index[static_cast<std::size_t>(j)], out.index[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd sym = 0.5 * (out.M + out.M.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    out.spd = llt.info() == Eigen::Success;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    if (!out.spd || !(out.min_eigenvalue > 0.0))
        throw InvariantViolation("boundary Green matrix is not positive definite (min eigenvalue " +
                                 std::to_string(out.min_eigenvalue) + ")");
    if (exit) {
        Eigen::VectorXd m(n), gvec(n);
        for (int i = 0; i < n; ++i) {
            m[i] = exit->prob[static_cast<std::size_t>(i)];
            gvec[i] = enclosing.at(exit->start, out.index[static_cast<std::size_t>(i)]);
        }
        out.vector_residual = inf_norm(out.M * m - gvec);
    }
    return out;
}

GreenTable quadrant_killed_green(int L, const std::vector<Element>& sources, double tol) {
    if (L < 1) throw std::invalid_argument("quadrant box needs L >= 1");
    Group z2(GroupSpec::lattice(2));
    std::vector<Element> S;
    for (std::int64_t i = 1; i <= L; ++i)
        for (std::int64_t j = 1; j <= L; ++j) S.push_back(Element({i, j}));
    auto mu = StepMeasure::srw(z2);
    auto dom = Domain::from_elements(z2, std::move(S), z2.standard_generators().elements(), "quadrant:" + std::to_string(L));
    return killed_green_solve(dom, sources, mu, tol);
}

}  // namespace greenlab
