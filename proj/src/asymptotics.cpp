#include "greenlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "greenlab/error.hpp"
#include "greenlab/functionals.hpp"
#include "greenlab/green.hpp"
#include "greenlab/parallel.hpp"
#include "greenlab/rng.hpp"

namespace greenlab {

namespace {

void check_checkpoints(const std::vector<std::int64_t>& cps) {
    if (cps.empty()) throw std::invalid_argument("empty checkpoint list");
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (cps[i] < 0) throw std::invalid_argument("negative checkpoint");
        if (i > 0 && cps[i] <= cps[i - 1]) throw std::invalid_argument("checkpoints must be strictly increasing");
    }
}

int mode_rank(MetricMode m) {
    switch (m) {
        case MetricMode::ExactFormula: return 0;
        case MetricMode::BfsTable: return 1;
        case MetricMode::HomogeneousQuasiNorm: return 2;
    }
    return 0;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    double pos = q * static_cast<double>(v.size() - 1);
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    double f = pos - static_cast<double>(i);
    return v[i] * (1.0 - f) + v[i + 1] * f;
}

}  // namespace

WalkSummary simulate_walk(const StepMeasure& mu, std::int64_t n, const std::vector<std::int64_t>& checkpoints,
                          const WordMetric& metric, std::uint64_t seed, std::uint64_t replica) {
    check_checkpoints(checkpoints);
    if (checkpoints.back() > n) throw std::invalid_argument("checkpoint beyond walk length");
    const Group& g = mu.group();
    Rng rng = make_stream(seed, "walk", replica);
    WalkSummary w;
    w.seed = seed;
    w.checkpoints = checkpoints;
    Element x = g.identity(), step;
    std::size_t next = 0;
    for (std::int64_t k = 0; k <= n && next < checkpoints.size(); ++k) {
        if (k > 0) {
            mu.sample_into(step, rng);
            g.mul_inplace(x, step);
        }
        if (checkpoints[next] == k) {
            auto len = metric.length(x);
            w.length.push_back(len.value);
            w.mode.push_back(len.mode);
            w.position.push_back(x);
            ++next;
        }
    }
    return w;
}

SpeedTable speed_in_probability(const StepMeasure& mu, const std::vector<std::int64_t>& n_list,
                                const std::vector<double>& eps_list, std::size_t trials, const WordMetric& metric,
                                std::uint64_t seed) {
    check_checkpoints(n_list);
    if (trials == 0) throw std::invalid_argument("speed: trials must be positive");
    const std::size_t C = n_list.size();
    std::vector<std::vector<std::int64_t>> len(trials);
    std::vector<int> worst(trials, 0);
    parallel_for(trials, [&](std::size_t t) {
        WalkSummary w = simulate_walk(mu, n_list.back(), n_list, metric, seed, t);
        len[t] = w.length;
        for (auto m : w.mode) worst[t] = std::max(worst[t], mode_rank(m));
    });
    SpeedTable tab;
    int wm = *std::max_element(worst.begin(), worst.end());
    tab.mode = wm == 0 ? MetricMode::ExactFormula : wm == 1 ? MetricMode::BfsTable : MetricMode::HomogeneousQuasiNorm;
    const double N = static_cast<double>(trials);
    for (std::size_t c = 0; c < C; ++c) {
        for (double eps : eps_list) {
            std::size_t hits = 0;
            for (std::size_t t = 0; t < trials; ++t)
                if (static_cast<double>(len[t][c]) > eps * static_cast<double>(n_list[c])) ++hits;
            SpeedRow r;
            r.n = n_list[c];
            r.eps = eps;
            r.prob = static_cast<double>(hits) / N;
            r.ci = 1.96 * std::sqrt(r.prob * (1.0 - r.prob) / N);
            r.trials = trials;
            tab.rows.push_back(r);
        }
    }
    return tab;
}

std::vector<IncrementRatioRow> increment_ratio_max(const StepMeasure& mu, const std::vector<std::int64_t>& checkpoints,
                                                   std::size_t trials, const WordMetric& metric, std::uint64_t seed) {
    check_checkpoints(checkpoints);
    if (checkpoints.front() < 1) throw std::invalid_argument("increment ratio: checkpoints start at 1");
    const std::size_t C = checkpoints.size();
    std::vector<std::vector<double>> vals(C, std::vector<double>(trials, 0.0));
    parallel_for(trials, [&](std::size_t t) {
        Rng rng = make_stream(seed, "increment-ratio", t);
        Element s;
        double best = 0.0;
        std::size_t next = 0;
        for (std::int64_t k = 1; k <= checkpoints.back(); ++k) {
            mu.sample_into(s, rng);
            double r = static_cast<double>(metric.length(s).value) / static_cast<double>(k);
            best = std::max(best, r);
            if (checkpoints[next] == k) vals[next++][t] = best;
        }
    });
    std::vector<IncrementRatioRow> out;
    for (std::size_t c = 0; c < C; ++c) {
        IncrementRatioRow r;
        r.n = checkpoints[c];
        r.median = quantile(vals[c], 0.5);
        r.q25 = quantile(vals[c], 0.25);
        r.q75 = quantile(vals[c], 0.75);
        out.push_back(r);
    }
    return out;
}

std::vector<GreenSpeedRow> green_speed_estimate(const StepMeasure& mu, const std::vector<std::int64_t>& n_list,
                                                std::size_t trials, const GreenOracle& G, std::uint64_t seed) {
    check_checkpoints(n_list);
    if (!mu.group().spec().transient()) throw TransienceError("green speed needs a transient backend");
    if (!(mu.group().spec() == G.group().spec())) throw BackendMismatch("green speed: oracle on another group");
    if (!G.translation_invariant()) throw std::invalid_argument("green speed: oracle must be translation invariant");
    if (n_list.front() < 1) throw std::invalid_argument("green speed: n must be >= 1");
    const Group& g = mu.group();
    const std::size_t C = n_list.size();
    std::vector<std::vector<double>> vals(C, std::vector<double>(trials, 0.0));
    parallel_for(trials, [&](std::size_t t) {
        Rng rng = make_stream(seed, "green-speed", t);
        Element x = g.identity(), s;
        std::size_t next = 0;
        for (std::int64_t k = 1; k <= n_list.back(); ++k) {
            mu.sample_into(s, rng);
            g.mul_inplace(x, s);
            if (n_list[next] == k) {
                vals[next][t] = green_distance(g.identity(), x, G).value / static_cast<double>(k);
                ++next;
            }
        }
    });
    std::vector<GreenSpeedRow> out;
    const double N = static_cast<double>(trials);
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0, v = 0;
        for (double x : vals[c]) m += x / N;
        for (double x : vals[c]) v += (x - m) * (x - m);
        v = trials > 1 ? v / (N - 1.0) : 0.0;
        out.push_back({n_list[c], m, 1.96 * std::sqrt(v / N), trials});
    }
    return out;
}

namespace {

// mu^{(n)} for every n in the list, assembling each from the squaring chain base^{2^j}
std::map<std::int64_t, PmfOnZ> z_powers(const PmfOnZ& base, const std::vector<std::int64_t>& n_list, std::int64_t K) {
    std::map<std::int64_t, PmfOnZ> out;
    std::vector<PmfOnZ> chain{base};
    for (std::int64_t n : n_list) {
        if (n < 0) throw std::invalid_argument("negative n");
        if (out.count(n)) continue;
        PmfOnZ acc = PmfOnZ::delta(0);
        bool first = true;
        std::int64_t rest = n;
        for (std::size_t j = 0; rest > 0; ++j, rest >>= 1) {
            while (chain.size() <= j) chain.push_back(convolve_z(chain.back(), chain.back(), K));
            if (rest & 1) {
                acc = first ? chain[j] : convolve_z(acc, chain[j], K);
                first = false;
            }
        }
        out.emplace(n, std::move(acc));
    }
    return out;
}

}  // namespace

DispersionCurve tv_dispersion_z(const StepMeasure& mu_z, std::int64_t k, const std::vector<std::int64_t>& n_list,
                                std::int64_t K) {
    PmfOnZ base = PmfOnZ::from_measure(mu_z, K);
    DispersionCurve c;
    c.shift = k;
    c.gcd = mu_z.finite_support() ? support_gcd(base) : 1;
    c.periodic = c.gcd > 1;
    auto powers = z_powers(base, n_list, K);
    for (std::int64_t n : n_list) {
        const PmfOnZ& q = powers.at(n);
        DispersionRow r;
        r.n = n;
        // mu^(n) and its k-shift live on disjoint cosets of gcd * Z
        r.tv = (c.periodic && k % c.gcd != 0) ? 1.0 : tv_shift(q, k);
        r.trunc = q.trunc;
        r.tv_err = q.trunc + 1e-12;
        if (r.tv < -1e-12 || r.tv > 1.0 + 1e-12) throw InvariantViolation("total variation outside [0,1]");
        c.rows.push_back(r);
    }
    return c;
}

ProductDispersion product_dispersion_bound(const StepMeasure& nu, const StepMeasure& mu_z, const Element& z_h,
                                           std::int64_t z_z, const std::vector<std::int64_t>& n_list, std::int64_t K) {
    const Group& h = nu.group();
    if (h.spec().kind() != BackendKind::Lattice || h.spec().rank() > 2) throw BackendMismatch("product dispersion: H must be Z or Z^2");
    if (!nu.finite_support()) throw std::invalid_argument("product dispersion: nu must be finite");
    if (!h.is_valid(z_h)) throw BackendMismatch("product dispersion: z_H not in H");
    PmfOnZ base = PmfOnZ::from_measure(mu_z, K);
    auto qpow = z_powers(base, n_list, K);
    std::vector<std::int64_t> sorted = n_list;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::map<std::int64_t, ElementMap<double>> ppow;
    ElementMap<double> cur;
    cur.emplace(h.identity(), 1.0);
    std::int64_t at = 0;
    for (std::int64_t n : sorted) {
        for (; at < n; ++at) {
            ElementMap<double> nx;
            for (const auto& [x, p] : cur)
                for (const auto& a : nu.atoms()) nx[h.mul(x, a.g)] += p * a.p;
            cur = std::move(nx);
        }
        ppow.emplace(n, cur);
    }
    ProductDispersion out;
    for (std::int64_t n : n_list) {
        const auto& p = ppow.at(n);
        const PmfOnZ& q = qpow.at(n);
        ElementMap<std::pair<double, double>> ab;  // (p(x), p(x z_H^{-1}))
        for (const auto& [x, v] : p) ab[x].first = v;
        for (const auto& [x, v] : p) ab[h.mul(x, z_h)].second = v;
        double tvh = 0.0;
        for (const auto& [x, w] : ab) tvh += std::abs(w.first - w.second);
        tvh *= 0.5;
        const double tvz = tv_shift(q, z_z);
        const std::int64_t m_lo = std::min(q.lo, q.lo + z_z), m_hi = std::max(q.hi(), q.hi() + z_z);
        double tvp = 0.0;
        for (const auto& [x, w] : ab) {
            const double a = w.first, b = w.second;
            for (std::int64_t m = m_lo; m <= m_hi; ++m) tvp += std::abs(a * q.at(m) - b * q.at(m - z_z));
        }
        tvp *= 0.5;
        ProductDispersionRow r{n, tvp, tvh, tvz, tvh + tvz - tvp};
        if (r.slack < -1e-12) out.holds = false;
        out.rows.push_back(r);
    }
    return out;
}

MalcevCoords malcev_coords(const Element& g) {
    if (g.v.size() != 3) throw BackendMismatch("malcev coordinates need a Heisenberg element");
    MalcevCoords m;
    m.x1 = g.v[0];
    m.x2 = g.v[1];
    m.c = g.v[2];
    m.N = heisenberg_quasi_norm(g);
    return m;
}

MalcevGrowth malcev_growth_check(int r_max) {
    Group h(GroupSpec::heisenberg());
    auto layers = bfs_layers(h, h.standard_generators(), r_max);
    MalcevGrowth out;
    out.r_max = r_max;
    for (std::size_t r = 1; r < layers.size(); ++r) {
        const double len = static_cast<double>(r);
        for (const auto& g : layers[r]) {
            const double c = std::abs(static_cast<double>(malcev_coords(g).c));
            out.max_ratio = std::max(out.max_ratio, c / (len * len));
            if (c > len * len / 4.0 + len) ++out.violations;
            ++out.checked;
        }
    }
    return out;
}

std::vector<TruncatedMoments> truncated_coordinate_moments(const StepMeasure& mu, const std::vector<std::int64_t>& n_list,
                                                           std::size_t trials, std::uint64_t seed) {
    const Group& g = mu.group();
    if (g.spec().kind() != BackendKind::Heisenberg) throw BackendMismatch("truncated moments need the Heisenberg backend");
    check_checkpoints(n_list);
    if (trials < 2) throw std::invalid_argument("truncated moments: need >= 2 trials");
    std::vector<TruncatedMoments> out;
    for (std::int64_t n : n_list) {
        std::vector<double> w1(trials), w2(trials);
        const double nn = static_cast<double>(n);
        parallel_for(trials, [&](std::size_t t) {
            Rng rng = make_stream(seed, "truncated-moments-" + std::to_string(n), t);
            Element x = g.identity(), s;
            for (std::int64_t k = 0; k < n; ++k) {
                mu.sample_into(s, rng);
                if (heisenberg_quasi_norm(s) > n) continue;
                g.mul_inplace(x, s);
            }
            const double a = static_cast<double>(x.v[0]), b = static_cast<double>(x.v[1]), c = static_cast<double>(x.v[2]);
            w1[t] = (a * a + b * b) / (nn * nn);
            w2[t] = (c * c) / (nn * nn * nn * nn);
        });
        auto mean_se = [&](const std::vector<double>& v) {
            double m = 0, s2 = 0;
            const double N = static_cast<double>(v.size());
            for (double x : v) m += x / N;
            for (double x : v) s2 += (x - m) * (x - m);
            return std::pair{m, std::sqrt(s2 / (N - 1.0) / N)};
        };
        TruncatedMoments tm;
        tm.n = n;
        std::tie(tm.weight1, tm.weight1_se) = mean_se(w1);
        std::tie(tm.weight2, tm.weight2_se) = mean_se(w2);
        if (const RadiusLaw* law = mu.radius_law())
            tm.coupling_failure = nn * (1.0 - mu.laziness()) * mu.tail_mass() * law->tail_prob(std::max(n + 1, law->r_min()));
        out.push_back(tm);
    }
    return out;
}

ConeReport cone_martin_experiment(int L, const Element& x, const Element& x_star, const std::vector<std::int64_t>& n_list) {
    auto inside = [&](const Element& p) { return p.v.size() == 2 && p.v[0] >= 1 && p.v[1] >= 1 && p.v[0] <= L && p.v[1] <= L; };
    if (!inside(x) || !inside(x_star)) throw OutOfRange("cone experiment: basepoints outside the box");
    std::vector<Element> ys;
    for (std::int64_t n : n_list) {
        Element y({n, n});
        if (!inside(y)) throw OutOfRange("cone experiment: y_n outside the box");
        ys.push_back(y);
    }
    GreenTable tab = quadrant_killed_green(L, ys);
    ConeReport rep;
    auto h = [](const Element& p) { return p.v[0] * p.v[1]; };
    rep.target = static_cast<double>(h(x)) / static_cast<double>(h(x_star));
    for (std::size_t s = 0; s < ys.size(); ++s) {
        rep.n.push_back(n_list[s]);
        rep.ratio.push_back(tab.value(s, x) / tab.value(s, x_star));
    }
    for (std::int64_t i = 1; i <= L; ++i)
        for (std::int64_t j = 1; j <= L; ++j) {
            std::int64_t lap = 4 * i * j - ((i + 1) * j + (i - 1) * j + i * (j + 1) + i * (j - 1));
            rep.harmonic_defect = std::max(rep.harmonic_defect, std::abs(lap));
        }
    // slope of log h(t,t) against log t
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    const double N = static_cast<double>(L);
    for (int t = 1; t <= L; ++t) mx += std::log(t) / N, my += std::log(static_cast<double>(t) * t) / N;
    for (int t = 1; t <= L; ++t) {
        double dx = std::log(t) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(static_cast<double>(t) * t) - my);
    }
    rep.homogeneity_degree = sxx > 0 ? sxy / sxx : 0.0;
    return rep;
}

}  // namespace greenlab
