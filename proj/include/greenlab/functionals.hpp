#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "greenlab/domain.hpp"
#include "greenlab/green.hpp"
#include "greenlab/green_oracle.hpp"

namespace greenlab {

// Interval-evaluated max over dS of |G(a,x) - G(b,x)| / G(a,x).
struct DeltaResult {
    double value = 0.0;  // on interval midpoints
    double lo = 0.0;     // max over x of the worst-case lower ratio
    double hi = 0.0;     // max over x of the worst-case upper ratio
    double err = 0.0;    // max(hi - value, value - lo)
    Element argmax;      // first maximiser in lexicographic order
};

// Throws NumericError when some G(a,x) interval reaches 0.
DeltaResult delta(const Domain& S, const Element& a, const Element& b, const GreenOracle& G);

struct EpsilonResult {
    double value = 0.0;
    Element argmax;
    std::size_t excluded = 0;  // boundary points with mu_S(a,x) = 0
};

// max over dS of |mu_S(a,x) - mu_S(b,x)| / mu_S(a,x)
EpsilonResult epsilon(const ExitDistribution& from_a, const ExitDistribution& from_b);

struct BandCheck {
    double eta_hat = 0.0;  // max over z and over both basepoints of |theta(z)|
    double delta = 0.0;
    double epsilon = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool band_ok = false;
    bool band_void = false;  // eta_hat >= 1
};

// theta_c(z) = mu_S(c,z) G(o,z) / (mu_S(o,z) G(c,z)) - 1 for c in {a, b}
BandCheck eps_delta_band_check(const Domain& S, const Element& a, const Element& b, const GreenOracle& G,
                               const ExitDistribution& from_o, const ExitDistribution& from_a,
                               const ExitDistribution& from_b);

struct KernelValue {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// K(x,y) = G(x,y) / G(e,y)
KernelValue martin_kernel(const Element& x, const Element& y, const GreenOracle& G);

struct KernelSequence {
    std::vector<Element> v;
    std::vector<Element> x;
    std::vector<std::vector<double>> psi;     // psi[k][j] = G(v_j, x_k) / G(a, x_k)
    std::vector<std::vector<double>> defect;  // |psi(v) - sum_s mu(s) psi(v s)|, NaN at v = x_k
};

KernelSequence normalized_kernel_sequence(const std::vector<Element>& v, const Element& a, const std::vector<Element>& x,
                                          const GreenOracle& G, const StepMeasure& mu);

struct GreenDistance {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// log G(e,e) - log G(x,y)
GreenDistance green_distance(const Element& x, const Element& y, const GreenOracle& G);

struct TelescopeResult {
    double ratio_residual = 0.0;  // |G(e,x)/G(e,e) - prod_i K(t_i^{-1}, t_{i+1}...t_n)|
    double dg_residual = 0.0;     // |d_G(e,x) - sum_i phi_i|
    double bound = 0.0;           // propagated interval error of the left-hand sides
};

// word = geodesic generators t_1..t_n of x = t_1...t_n; needs a translation-invariant oracle.
TelescopeResult telescoping_check(const std::vector<Element>& word, const GreenOracle& G, const WordMetric& metric);

// dist({a,b}, dS)
std::int64_t boundary_distance(const Domain& S, const Element& a, const Element& b, const WordMetric& metric);

struct DeltaScanRow {
    std::string label;
    std::int64_t R = 0;        // exhaustion parameter
    std::int64_t R_ab = 0;     // dist({a,b}, dS)
    std::int64_t d_ab = 0;
    double delta = 0.0;
    double delta_err = 0.0;
    std::string argmax;
    std::optional<double> epsilon;
    std::optional<double> eta_hat;
    std::optional<bool> band_ok;
};

struct DeltaScan {
    std::string backend;
    std::string measure;
    Element a, b;
    std::vector<DeltaScanRow> rows;
};

struct RateFit {
    double alpha = 0.0;
    double C = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
    std::size_t excluded = 0;
    bool decays = false;  // false when Delta is flat across scales
};

// Least squares log Delta = log C + alpha log(d_ab / R_ab); needs >= 4 positive rows.
RateFit delta_rate_fit(const DeltaScan& scan);

struct EheResult {
    std::vector<double> per_scale;  // NaN for scales with d(a,b) > theta R_k
    double sup = 0.0;
};

// sup over k and x in dF_k of |G(a,x)-G(b,x)| / ((d(a,b)/R_k)^alpha min(G(a,x),G(b,x)))
EheResult ehe_probe(const std::vector<const Domain*>& exhaustion, const Element& a, const Element& b, double alpha,
                    const GreenOracle& G, const WordMetric& metric, double theta = 0.5);

struct TreeKernel {
    std::int64_t exponent = 0;  // K = q^{-exponent}
    double value = 1.0;
};

// K(x, xi) = q^{-(|x| - 2 cp(x, xi))} on F_k; xi is a reduced ray prefix with |xi| >= |x| + 2.
TreeKernel tree_martin_kernel(const Element& ray_prefix, const Element& x, int q);

}  // namespace greenlab
