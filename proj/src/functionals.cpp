#include "greenlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "greenlab/error.hpp"

namespace greenlab {

namespace {

// |A - B| / A over A in [la, ha], B in [lb, hb]
std::pair<double, double> ratio_range(const GreenInterval& A, const GreenInterval& B) {
    double num_hi = std::max(std::abs(A.lo - B.hi), std::abs(A.hi - B.lo));
    double num_lo = (A.lo <= B.hi && B.lo <= A.hi) ? 0.0 : std::min(std::abs(A.lo - B.hi), std::abs(A.hi - B.lo));
    return {num_lo / A.hi, num_hi / A.lo};
}

}  // namespace

DeltaResult delta(const Domain& S, const Element& a, const Element& b, const GreenOracle& G) {
    if (S.boundary_index(a) >= 0 || S.boundary_index(b) >= 0) throw std::invalid_argument("delta: basepoint on the boundary");
    DeltaResult r;
    bool first = true;
    for (const auto& x : S.boundary()) {
        GreenInterval ga = G.green(a, x), gb = G.green(b, x);
        if (!(ga.lo > 0.0)) throw NumericError("delta: G(a,x) interval contains 0 at " + S.group().format(x));
        double v = std::abs(ga.mid() - gb.mid()) / ga.mid();
        auto [lo, hi] = ratio_range(ga, gb);
        if (first || v > r.value) {
            r.value = v;
            r.argmax = x;
        }
        r.lo = first ? lo : std::max(r.lo, lo);
        r.hi = first ? hi : std::max(r.hi, hi);
        first = false;
    }
    r.err = std::max(r.hi - r.value, r.value - r.lo);
    return r;
}

EpsilonResult epsilon(const ExitDistribution& from_a, const ExitDistribution& from_b) {
    if (from_a.domain != from_b.domain) throw std::invalid_argument("epsilon: exit laws on different domains");
    const auto& dS = from_a.domain->boundary();
    EpsilonResult r;
    bool any = false;
    for (std::size_t i = 0; i < dS.size(); ++i) {
        double pa = from_a.prob[i];
        if (!(pa > 0.0)) {
            ++r.excluded;
            continue;
        }
        double v = std::abs(pa - from_b.prob[i]) / pa;
        if (!any || v > r.value) {
            r.value = v;
            r.argmax = dS[i];
        }
        any = true;
    }
    if (!any) throw NumericError("epsilon: every boundary point excluded");
    return r;
}

BandCheck eps_delta_band_check(const Domain& S, const Element& a, const Element& b, const GreenOracle& G,
                               const ExitDistribution& from_o, const ExitDistribution& from_a,
                               const ExitDistribution& from_b) {
    const Element o = S.group().identity();
    const auto& dS = S.boundary();
    BandCheck c;
    for (std::size_t i = 0; i < dS.size(); ++i) {
        double co = from_o.prob[i];
        if (!(co > 0.0)) continue;
        double go = G.value(o, dS[i]);
        for (const auto* e : {&from_a, &from_b}) {
            const Element& base = e == &from_a ? a : b;
            double theta = e->prob[i] * go / (co * G.value(base, dS[i])) - 1.0;
            c.eta_hat = std::max(c.eta_hat, std::abs(theta));
        }
    }
    c.delta = delta(S, a, b, G).value;
    c.epsilon = epsilon(from_a, from_b).value;
    const double eta = c.eta_hat;
    if (eta >= 1.0) {
        c.band_void = true;
        c.lower = -std::numeric_limits<double>::infinity();
        c.upper = std::numeric_limits<double>::infinity();
        c.band_ok = false;
        return c;
    }
    c.lower = ((1.0 - eta) * c.delta - 2.0 * eta) / (1.0 + eta);
    c.upper = ((1.0 + eta) * c.delta + 2.0 * eta) / (1.0 - eta);
    const double slack = 1e-12 * (1.0 + c.delta);
    c.band_ok = c.epsilon >= c.lower - slack && c.epsilon <= c.upper + slack;
    return c;
}

KernelValue martin_kernel(const Element& x, const Element& y, const GreenOracle& G) {
    GreenInterval num = G.green(x, y);
    GreenInterval den = G.green(G.group().identity(), y);
    if (!(den.lo > 0.0)) throw NumericError("martin kernel: G(e,y) interval contains 0");
    KernelValue k;
    k.value = num.mid() / den.mid();
    k.lo = std::max(0.0, num.lo) / den.hi;
    k.hi = num.hi / den.lo;
    return k;
}

KernelSequence normalized_kernel_sequence(const std::vector<Element>& v, const Element& a, const std::vector<Element>& x,
                                          const GreenOracle& G, const StepMeasure& mu) {
    if (!mu.finite_support()) throw std::invalid_argument("kernel sequence: finite-support measure required");
    const Group& g = G.group();
    KernelSequence ks;
    ks.v = v;
    ks.x = x;
    const auto steps = mu.steps();
    const double stay = mu.laziness();
    for (const auto& xk : x) {
        double ga = G.value(a, xk);
        if (!(ga > 0.0)) throw NumericError("kernel sequence: G(a,x_k) = 0");
        std::vector<double> psi, def;
        for (const auto& vj : v) {
            double p = G.value(vj, xk) / ga;
            psi.push_back(p);
            if (vj == xk) {
                def.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double avg = stay * p;
            for (const auto& s : steps) avg += s.p * G.value(g.mul(vj, s.g), xk) / ga;
            def.push_back(std::abs(p - avg));
        }
        ks.psi.push_back(std::move(psi));
        ks.defect.push_back(std::move(def));
    }
    return ks;
}

GreenDistance green_distance(const Element& x, const Element& y, const GreenOracle& G) {
    const Element e = G.group().identity();
    GreenInterval d = G.green(e, e), o = G.green(x, y);
    if (!(o.lo > 0.0) || !(d.lo > 0.0)) throw NumericError("green distance: degenerate interval");
    GreenDistance r;
    r.value = std::log(d.mid()) - std::log(o.mid());
    r.lo = std::log(d.lo) - std::log(o.hi);
    r.hi = std::log(d.hi) - std::log(o.lo);
    return r;
}

TelescopeResult telescoping_check(const std::vector<Element>& word, const GreenOracle& G, const WordMetric& metric) {
    if (!G.translation_invariant()) throw std::invalid_argument("telescoping needs a translation-invariant oracle");
    const Group& g = G.group();
    const std::size_t n = word.size();
    // suffixes x_i = t_i ... t_n, x_{n} = e
    std::vector<Element> suf(n + 1, g.identity());
    for (std::size_t i = n; i-- > 0;) suf[i] = g.mul(word[i], suf[i + 1]);
    if (metric.length(suf[0]).value != static_cast<std::int64_t>(n)) throw std::invalid_argument("telescoping: word is not geodesic");
    const Element e = g.identity();
    GreenInterval gee = G.green(e, e), gex = G.green(e, suf[0]);
    double lhs = gex.mid() / gee.mid();
    double prod = 1.0, phi_sum = 0.0, bound = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        KernelValue k = martin_kernel(g.inv(word[i]), suf[i + 1], G);
        prod *= k.value;
        phi_sum += -std::log(k.value);
        bound += (k.hi - k.lo) / k.value;
    }
    double lhs_rel = (gex.hi - gex.lo) / gex.mid() + (gee.hi - gee.lo) / gee.mid();
    TelescopeResult r;
    r.ratio_residual = std::abs(lhs - prod);
    r.dg_residual = std::abs((std::log(gee.mid()) - std::log(gex.mid())) - phi_sum);
    r.bound = (lhs_rel + bound) * std::max(lhs, prod) + 1e-13 * (1.0 + static_cast<double>(n));
    return r;
}

std::int64_t boundary_distance(const Domain& S, const Element& a, const Element& b, const WordMetric& metric) {
    const Group& g = S.group();
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    const Element ia = g.inv(a), ib = g.inv(b);
    for (const auto& x : S.boundary()) {
        best = std::min(best, metric.length(g.mul(ia, x)).value);
        best = std::min(best, metric.length(g.mul(ib, x)).value);
    }
    return best;
}

RateFit delta_rate_fit(const DeltaScan& scan) {
    RateFit f;
    std::vector<double> xs, ys;
    for (const auto& row : scan.rows) {
        if (!(row.delta > 0.0) || row.R_ab <= 0 || row.d_ab <= 0) {
            ++f.excluded;
            continue;
        }
        xs.push_back(std::log(static_cast<double>(row.d_ab) / static_cast<double>(row.R_ab)));
        ys.push_back(std::log(row.delta));
    }
    f.points = xs.size();
    if (f.points < 4) throw NumericError("delta_rate_fit: fewer than 4 usable scales");
    const double n = static_cast<double>(f.points);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw NumericError("delta_rate_fit: scales do not vary");
    double ymin = *std::min_element(ys.begin(), ys.end()), ymax = *std::max_element(ys.begin(), ys.end());
    if (ymax - ymin < 1e-9) {
        // flat: no decay to fit
        f.alpha = 0.0;
        f.C = std::exp(my);
        f.r2 = 0.0;
        f.decays = false;
        return f;
    }
    f.alpha = sxy / sxx;
    f.C = std::exp(my - f.alpha * mx);
    f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.decays = f.alpha > 0.05;
    return f;
}

EheResult ehe_probe(const std::vector<const Domain*>& exhaustion, const Element& a, const Element& b, double alpha,
                    const GreenOracle& G, const WordMetric& metric, double theta) {
    EheResult r;
    const Group& g = G.group();
    const double dab = static_cast<double>(metric.length(g.mul(g.inv(a), b)).value);
    for (const Domain* F : exhaustion) {
        const double Rk = static_cast<double>(boundary_distance(*F, a, b, metric));
        if (dab > theta * Rk) {
            r.per_scale.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double sup = 0.0;
        if (dab > 0.0) {
            const double scale = std::pow(dab / Rk, alpha);
            for (const auto& x : F->boundary()) {
                double ga = G.value(a, x), gb = G.value(b, x);
                sup = std::max(sup, std::abs(ga - gb) / (scale * std::min(ga, gb)));
            }
        }
        r.per_scale.push_back(sup);
        r.sup = std::max(r.sup, sup);
    }
    return r;
}

TreeKernel tree_martin_kernel(const Element& ray_prefix, const Element& x, int q) {
    if (ray_prefix.v.size() < x.v.size() + 2) throw OutOfRange("tree_martin_kernel: ray prefix too short");
    for (std::size_t i = 0; i + 1 < ray_prefix.v.size(); ++i)
        if (ray_prefix.v[i] == -ray_prefix.v[i + 1] || ray_prefix.v[i] == 0) throw std::invalid_argument("ray prefix is not reduced");
    std::size_t cp = 0;
    while (cp < x.v.size() && x.v[cp] == ray_prefix.v[cp]) ++cp;
    TreeKernel k;
    k.exponent = static_cast<std::int64_t>(x.v.size()) - 2 * static_cast<std::int64_t>(cp);
    k.value = std::pow(static_cast<double>(q), -static_cast<double>(k.exponent));
    return k;
}

}  // namespace greenlab
