#include "greenlab/envelope.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>

#include "greenlab/error.hpp"
#include "greenlab/parallel.hpp"
#include "greenlab/rng.hpp"

namespace greenlab {

EnvelopeSpec EnvelopeSpec::stretched(double d_star, double gamma, double alpha, double eta, double c) {
    EnvelopeSpec s;
    s.d_star = d_star;
    s.gamma = gamma;
    s.alpha = alpha;
    s.phi = Phi::Stretched;
    s.eta = eta;
    s.c = c;
    s.validate();
    return s;
}

EnvelopeSpec EnvelopeSpec::polynomial(double d_star, double gamma, double alpha, double delta) {
    EnvelopeSpec s;
    s.d_star = d_star;
    s.gamma = gamma;
    s.alpha = alpha;
    s.phi = Phi::Polynomial;
    s.delta = delta;
    s.validate();
    return s;
}

void EnvelopeSpec::validate() const {
    if (!(gamma > 0.0) || !(d_star > 0.0)) throw std::invalid_argument("envelope: d* and gamma must be positive");
    if (!(d_star / gamma > 1.0)) throw std::invalid_argument("envelope: d*/gamma must exceed 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("envelope: alpha must lie in (0,1]");
    if (!(kappa > 0.0)) throw std::invalid_argument("envelope: kappa must be positive");
    if (!(theta > 0.0 && theta <= kappa / 4.0)) throw std::invalid_argument("envelope: theta must lie in (0, kappa/4]");
    if (phi == Phi::Stretched && !(eta > 0.0 && c > 0.0)) throw std::invalid_argument("envelope: stretched needs eta, c > 0");
    if (phi == Phi::Polynomial && !(delta > 0.0)) throw std::invalid_argument("envelope: polynomial needs delta > 0");
}

double EnvelopeSpec::rho(double n) const { return std::pow(n, 1.0 / gamma); }
double EnvelopeSpec::vol(double r) const { return std::pow(r, d_star); }

double EnvelopeSpec::phi_value(double t) const {
    if (phi == Phi::Stretched) return std::exp(-c * std::pow(t, eta));
    return std::pow(1.0 + t, -delta);
}

NearDiagTail near_diag_tail(const EnvelopeSpec& spec, std::int64_t m, std::int64_t horizon) {
    spec.validate();
    if (m < 1) throw std::invalid_argument("near_diag_tail: m must be >= 1");
    horizon = std::max(horizon, m);
    const double s = spec.p();
    NearDiagTail t;
    // Kahan summation
    double sum = 0.0, comp = 0.0;
    for (std::int64_t n = m; n < horizon; ++n) {
        double y = std::exp(-s * std::log(static_cast<double>(n))) - comp;
        double nx = sum + y;
        comp = (nx - sum) - y;
        sum = nx;
    }
    t.partial = sum;
    const double H = static_cast<double>(horizon);
    t.tail_lo = std::pow(H, 1.0 - s) / (s - 1.0);
    t.tail_hi = t.tail_lo + std::pow(H, -s);
    t.rounding = 4.0 * DBL_EPSILON * (t.partial + t.tail_hi);
    return t;
}

namespace {

struct FnParams {
    const std::function<double(double)>* f;
};

double call_fn(double x, void* p) { return (*static_cast<FnParams*>(p)->f)(x); }

double kahan_range(const std::function<double(double)>& f, std::int64_t a, std::int64_t b) {
    double sum = 0.0, comp = 0.0;
    for (std::int64_t n = a; n <= b; ++n) {
        double y = f(static_cast<double>(n)) - comp;
        double nx = sum + y;
        comp = (nx - sum) - y;
        sum = nx;
    }
    return sum;
}

double deriv(const std::function<double(double)>& f, double x) {
    double h = 1e-4 * x;
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// sum_{n=a}^{b} f(n) for smooth f: exact head, Euler-Maclaurin on geometric blocks beyond it
double smooth_sum(const std::function<double(double)>& f, std::int64_t a, std::int64_t b) {
    if (b < a) return 0.0;
    constexpr std::int64_t direct = 200'000;
    if (b - a + 1 <= direct) return kahan_range(f, a, b);
    const std::int64_t c = a + direct / 2;
    double total = kahan_range(f, a, c - 1);
    FnParams par{&f};
    gsl_function F{&call_fn, &par};
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
    auto old = gsl_set_error_handler_off();
    double integral = 0.0;
    double lo = static_cast<double>(c);
    const double hi = static_cast<double>(b);
    while (lo < hi) {
        double up = std::min(hi, 2.0 * lo);
        double v = 0.0, err = 0.0;
        gsl_integration_qag(&F, lo, up, 0.0, 1e-11, 1000, GSL_INTEG_GAUSS21, ws, &v, &err);
        integral += v;
        lo = up;
    }
    gsl_set_error_handler(old);
    gsl_integration_workspace_free(ws);
    const double fc = f(static_cast<double>(c)), fb = f(hi);
    total += integral + 0.5 * (fc + fb) + (deriv(f, hi) - deriv(f, static_cast<double>(c))) / 12.0;
    return total;
}

// min{n : rho(n) >= r / kappa}
std::int64_t n_minus(const EnvelopeSpec& s, double r) {
    const double target = r / s.kappa;
    auto n = static_cast<std::int64_t>(std::ceil(std::pow(target, s.gamma)));
    n = std::max<std::int64_t>(n, 1);
    while (n > 1 && s.rho(static_cast<double>(n - 1)) >= target) --n;
    while (s.rho(static_cast<double>(n)) < target) ++n;
    return n;
}

}  // namespace

std::vector<double> default_r_grid() {
    std::vector<double> r;
    for (int k = 8; k <= 32; ++k) r.push_back(std::pow(10.0, k / 8.0));
    return r;
}

TauberianReport tr_alpha_ratio(const EnvelopeSpec& spec, const std::vector<double>& r_grid) {
    spec.validate();
    if (r_grid.empty()) throw std::invalid_argument("tr_alpha_ratio: empty grid");
    TauberianReport rep;
    rep.r = r_grid;
    const std::size_t N = r_grid.size();
    rep.m.resize(N);
    rep.lhs.resize(N);
    rep.rhs.resize(N);
    rep.ratio.resize(N);
    parallel_for(N, [&](std::size_t i) {
        const double r = r_grid[i];
        const std::int64_t m = n_minus(spec, r);
        std::function<double(double)> g = [&](double n) {
            double rh = spec.rho(n);
            return spec.phi_value(r / (2.0 * rh)) / (spec.vol(rh) * std::pow(rh, spec.alpha));
        };
        rep.m[i] = m;
        rep.lhs[i] = smooth_sum(g, 1, m - 1);
        rep.rhs[i] = std::pow(spec.rho(static_cast<double>(m)), -spec.alpha) * near_diag_tail(spec, m, m + 4096).value();
        rep.ratio[i] = rep.lhs[i] / rep.rhs[i];
    });
    const double r_max = *std::max_element(r_grid.begin(), r_grid.end());
    const double tol = 1.0 + 1e-9;
    bool have_prev = false, have_top = false;
    for (std::size_t i = 0; i < N; ++i) {
        const double r = r_grid[i];
        if (r * 10.0 > r_max * tol) {
            rep.top_decade_max = std::max(rep.top_decade_max, rep.ratio[i]);
            have_top = true;
        } else if (r * 100.0 > r_max * tol) {
            rep.prev_decade_max = std::max(rep.prev_decade_max, rep.ratio[i]);
            have_prev = true;
        }
    }
    if (!have_prev || !have_top) throw std::invalid_argument("tr_alpha_ratio: grid must span two decades");
    rep.bounded = rep.top_decade_max <= 1.2 * rep.prev_decade_max;
    return rep;
}

ConvolutionPowers::ConvolutionPowers(const StepMeasure& mu, std::size_t support_cap)
    : mu_(mu), atoms_(mu.atoms()), cap_(support_cap) {
    if (!mu.finite_support()) throw std::invalid_argument("convolution powers need a finite law");
    ElementMap<double> p0;
    p0.emplace(mu.group().identity(), 1.0);
    powers_.push_back(std::move(p0));
}

bool ConvolutionPowers::extend_to(int n) {
    const Group& g = mu_.group();
    while (computed() < n) {
        const auto& prev = powers_.back();
        ElementMap<double> next;
        next.reserve(std::min(cap_ + 1, prev.size() * atoms_.size()));
        for (const auto& [x, p] : prev) {
            for (const auto& a : atoms_) {
                next[g.mul(x, a.g)] += p * a.p;
                if (next.size() > cap_) return false;
            }
        }
        powers_.push_back(std::move(next));
    }
    return true;
}

double ConvolutionPowers::return_prob(int j, int k) const {
    const auto& A = power(j);
    const auto& B = power(k);
    const Group& g = mu_.group();
    const bool swap = A.size() > B.size();
    const auto& small = swap ? B : A;
    const auto& big = swap ? A : B;
    double s = 0.0;
    for (const auto& [x, p] : small) {
        auto it = big.find(g.inv(x));
        if (it != big.end()) s += p * it->second;
    }
    return s;
}

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return f;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

}  // namespace

OnDiagonalSeries on_diagonal_probe(const StepMeasure& mu, int m_max, std::size_t support_cap, std::size_t mc_trials,
                                   std::uint64_t seed) {
    if (m_max < 1) throw std::invalid_argument("on_diagonal_probe: m_max must be >= 1");
    if (!mu.symmetric()) throw std::invalid_argument("on_diagonal_probe: symmetric law required");
    ConvolutionPowers cp(mu, support_cap);
    cp.extend_to(m_max);
    const int exact_max = cp.computed();
    OnDiagonalSeries s;
    const Group& g = mu.group();
    for (int m = 1; m <= m_max; ++m) {
        s.m.push_back(m);
        if (m <= exact_max) {
            s.p2m.push_back(cp.return_prob(m, m));
            s.ci.push_back(0.0);
            s.exact.push_back(true);
        } else {
            Rng rng = make_stream(seed, "on-diagonal", static_cast<std::uint64_t>(m));
            std::size_t hits = 0;
            Element x, step;
            for (std::size_t t = 0; t < mc_trials; ++t) {
                x = g.identity();
                for (int k = 0; k < 2 * m; ++k) {
                    mu.sample_into(step, rng);
                    g.mul_inplace(x, step);
                }
                if (g.is_identity(x)) ++hits;
            }
            double p = static_cast<double>(hits) / static_cast<double>(mc_trials);
            s.p2m.push_back(p);
            s.ci.push_back(1.96 * std::sqrt(std::max(p * (1 - p), 1.0 / static_cast<double>(mc_trials)) /
                                            static_cast<double>(mc_trials)));
            s.exact.push_back(false);
        }
        s.root.push_back(s.p2m.back() > 0 ? std::pow(s.p2m.back(), 1.0 / (2.0 * m)) : 0.0);
    }
    std::vector<double> lx, ly, mx, my;
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        if (!s.exact[i] || !(s.p2m[i] > 0.0) || !(s.p2m[i] < 1.0)) continue;
        lx.push_back(std::log(2.0 * s.m[i]));
        ly.push_back(std::log(-std::log(s.p2m[i])));
        mx.push_back(static_cast<double>(s.m[i]));
        my.push_back(std::log(s.p2m[i]));
    }
    auto bf = fit_line(lx, ly);
    s.beta_hat = bf.slope;
    s.beta_fit_residual = bf.rms;
    s.log_slope = fit_line(mx, my).slope;
    for (std::size_t i = 1; i + 1 < s.m.size(); ++i) {
        if (!s.exact[i + 1]) break;
        if (s.p2m[i] * s.p2m[i] > s.p2m[i - 1] * s.p2m[i + 1] * (1.0 + 1e-12)) s.log_convex = false;
    }
    return s;
}

ParityReport parity_bridge_check(const StepMeasure& nu, int k_max) {
    if (!nu.symmetric()) throw std::invalid_argument("parity bridge: asymmetric law");
    if (k_max < 1) throw std::invalid_argument("parity bridge: k_max must be >= 1");
    ConvolutionPowers cp(nu);
    if (!cp.extend_to((k_max + 1) / 2)) throw CapExceeded("parity bridge: support cap exceeded");
    ParityReport rep;
    bool first = true;
    for (int k = 1; k <= k_max; ++k) {
        const int lo = k / 2, hi = (k + 1) / 2;
        double nk = cp.return_prob(lo, hi);
        double even_lo = cp.return_prob(lo, lo), even_hi = cp.return_prob(hi, hi);
        double slack = std::sqrt(even_lo * even_hi) - nk;
        rep.k.push_back(k);
        rep.slack.push_back(slack);
        if (slack < -8.0 * DBL_EPSILON * std::max(nk, 1e-300)) ++rep.violations;
        rep.worst = first ? slack : std::min(rep.worst, slack);
        first = false;
    }
    return rep;
}

HolderReport holder_constant_probe(const StepMeasure& mu, const std::vector<std::int64_t>& n_list, const Element& a,
                                   const Element& b, double alpha) {
    const Group& g = mu.group();
    if (g.spec().kind() != BackendKind::Lattice) throw BackendMismatch("holder probe is lattice-only");
    if (!mu.finite_support()) throw std::invalid_argument("holder probe: finite law required");
    if (n_list.empty()) throw std::invalid_argument("holder probe: empty n list");
    const int d = g.spec().rank();
    const auto& atoms = mu.atoms();
    std::int64_t L = 0;
    std::vector<double> var(static_cast<std::size_t>(d), 0.0);
    for (const auto& at : atoms)
        for (int i = 0; i < d; ++i) {
            L = std::max<std::int64_t>(L, std::abs(at.g.v[static_cast<std::size_t>(i)]));
            var[static_cast<std::size_t>(i)] += at.p * static_cast<double>(at.g.v[static_cast<std::size_t>(i)] * at.g.v[static_cast<std::size_t>(i)]);
        }
    const std::int64_t n_max = *std::max_element(n_list.begin(), n_list.end());
    const double vmax = *std::max_element(var.begin(), var.end());
    std::int64_t shift = 0;
    for (int i = 0; i < d; ++i)
        shift = std::max({shift, std::abs(a.v[static_cast<std::size_t>(i)]), std::abs(b.v[static_cast<std::size_t>(i)])});
    const std::int64_t W = std::min(n_max * L, static_cast<std::int64_t>(std::ceil(12.0 * std::sqrt(vmax * static_cast<double>(n_max)))) + L);
    // padding wide enough that neither a step nor the a -> b shift wraps a row
    const std::int64_t Pd = L + shift;
    const std::int64_t side = 2 * (W + Pd) + 1;
    double cells = std::pow(static_cast<double>(side), d);
    if (cells > 2e8) throw CapExceeded("holder probe: lattice box too large");
    const std::size_t total = static_cast<std::size_t>(cells);
    std::vector<std::int64_t> stride(static_cast<std::size_t>(d));
    std::int64_t st = 1;
    for (int i = d - 1; i >= 0; --i) {
        stride[static_cast<std::size_t>(i)] = st;
        st *= side;
    }
    auto offset = [&](const Element& x) {
        std::int64_t o = 0;
        for (int i = 0; i < d; ++i) o += x.v[static_cast<std::size_t>(i)] * stride[static_cast<std::size_t>(i)];
        return o;
    };
    std::vector<std::uint8_t> pad(total, 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::int64_t rem = static_cast<std::int64_t>(idx);
        for (int i = 0; i < d; ++i) {
            std::int64_t c = rem / stride[static_cast<std::size_t>(i)] - (W + Pd);
            rem %= stride[static_cast<std::size_t>(i)];
            if (std::abs(c) > W) pad[idx] = 1;
        }
    }
    const std::int64_t centre = (W + Pd) * (st - 1) / (side - 1);
    std::vector<std::int64_t> step_off;
    std::vector<double> step_p;
    for (const auto& at : atoms) {
        step_off.push_back(offset(at.g));
        step_p.push_back(at.p);
    }
    std::vector<double> P(total, 0.0), Q(total, 0.0);
    P[static_cast<std::size_t>(centre)] = 1.0;
    HolderReport rep;
    std::vector<std::int64_t> wanted = n_list;
    std::sort(wanted.begin(), wanted.end());
    const std::int64_t oa = offset(a), ob = offset(b);
    double dab = 0.0;
    for (int i = 0; i < d; ++i) dab += static_cast<double>(std::abs(a.v[static_cast<std::size_t>(i)] - b.v[static_cast<std::size_t>(i)]));
    std::vector<double> by_n(wanted.size(), 0.0);
    std::size_t next = 0;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        std::fill(Q.begin(), Q.end(), 0.0);
        for (std::size_t x = 0; x < total; ++x) {
            const double px = P[x];
            if (px == 0.0) continue;
            for (std::size_t j = 0; j < step_off.size(); ++j)
                Q[static_cast<std::size_t>(static_cast<std::int64_t>(x) + step_off[j])] += px * step_p[j];
        }
        for (std::size_t x = 0; x < total; ++x)
            if (pad[x] && Q[x] != 0.0) {
                rep.truncated_mass += Q[x];
                Q[x] = 0.0;
            }
        std::swap(P, Q);
        while (next < wanted.size() && wanted[next] == n) {
            double best = 0.0;
            if (dab > 0.0) {
                // p_n(a,x) - p_n(b,x) = P[x - a] - P[x - b]; the differenced index is y = x - a
                for (std::size_t y = 0; y < total; ++y) {
                    std::int64_t yb = static_cast<std::int64_t>(y) + oa - ob;
                    double pa = P[y];
                    double pb = (yb >= 0 && yb < static_cast<std::int64_t>(total)) ? P[static_cast<std::size_t>(yb)] : 0.0;
                    best = std::max(best, std::abs(pa - pb));
                }
                // x with P[x - a] = 0 but P[x - b] > 0
                for (std::size_t y = 0; y < total; ++y) {
                    std::int64_t ya = static_cast<std::int64_t>(y) + ob - oa;
                    if (ya >= 0 && ya < static_cast<std::int64_t>(total)) continue;
                    best = std::max(best, P[y]);
                }
                const double rho = std::sqrt(static_cast<double>(n));
                best *= std::pow(rho, d) * std::pow(rho / dab, alpha);
            }
            by_n[next] = best;
            ++next;
        }
    }
    rep.n = wanted;
    rep.value = by_n;
    rep.max = by_n.empty() ? 0.0 : *std::max_element(by_n.begin(), by_n.end());
    return rep;
}

ExpGrowthReport exp_growth_sum_probe(const GreenOracle& G, const std::vector<int>& n_list, double delta, int n0,
                                     double c_star) {
    const Group& g = G.group();
    if (g.spec().kind() != BackendKind::Free) throw BackendMismatch("exp growth probe needs a free group");
    const int k = g.spec().rank();
    const double q = 2.0 * k - 1.0;
    const Element e = g.identity();
    const double gee = G.value(e, e);
    const auto gens = g.standard_generators();
    ExpGrowthReport rep;
    for (int n : n_list) {
        if (n < 1) throw std::invalid_argument("exp growth probe: n must be >= 1");
        const double count = 2.0 * k * std::pow(q, n - 1);
        double sum = 0.0;
        if (n <= sphere_cap(g.spec())) {
            for (const auto& y : sphere(g, gens, n)) sum += G.value(e, y);
        } else if (G.translation_invariant() && G.name() == "tree-closed-form") {
            // radial closed form: every y in S(e,n) has the same Green value
            sum = count * G.value(e, g.axis_power(0, n));
        } else {
            throw OutOfRange("exp growth probe: sphere beyond enumeration cap");
        }
        double contrast = gee * count * std::pow(1.0 - delta, n - n0) * std::pow(c_star, n0);
        rep.n.push_back(n);
        rep.sphere_sum.push_back(sum);
        rep.contrast.push_back(contrast);
        if (!rep.first_contradiction && contrast > sum * (1.0 + 1e-12)) rep.first_contradiction = n;
    }
    return rep;
}

}  // namespace greenlab
