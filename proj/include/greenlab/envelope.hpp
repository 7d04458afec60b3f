#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "greenlab/green_oracle.hpp"
#include "greenlab/step_measure.hpp"

namespace greenlab {

struct EnvelopeSpec {
    enum class Phi { Stretched, Polynomial };

    double d_star = 3.0;   // volume exponent, Vol(r) = r^{d*}
    double gamma = 2.0;    // rho(n) = n^{1/gamma}
    Phi phi = Phi::Stretched;
    double eta = 2.0;      // stretched: exp(-c t^eta)
    double c = 1.0;
    double delta = 5.0;    // polynomial: (1 + t)^{-delta}
    double alpha = 1.0;    // Hoelder exponent in (0, 1]
    double kappa = 1.0;
    double theta = 0.25;   // interior fraction, <= kappa / 4
    double beta = 1.0;     // on-diagonal stretch

    static EnvelopeSpec stretched(double d_star, double gamma, double alpha, double eta = 2.0, double c = 1.0);
    static EnvelopeSpec polynomial(double d_star, double gamma, double alpha, double delta);

    // throws std::invalid_argument on violated constraints
    void validate() const;
    double p() const { return d_star / gamma; }
    double rho(double n) const;
    double vol(double r) const;
    double phi_value(double t) const;
};

// A(m) = sum_{n >= m} n^{-d*/gamma}: exact sum over [m, horizon) plus an integral bracket for n >= horizon.
struct NearDiagTail {
    double partial = 0.0;
    double tail_lo = 0.0;
    double tail_hi = 0.0;
    double rounding = 0.0;
    double value() const { return partial + 0.5 * (tail_lo + tail_hi); }
    // half-width of the bracket around value()
    double bound() const { return 0.5 * (tail_hi - tail_lo) + rounding; }
};

NearDiagTail near_diag_tail(const EnvelopeSpec& spec, std::int64_t m, std::int64_t horizon);

struct TauberianReport {
    std::vector<double> r;
    std::vector<std::int64_t> m;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> ratio;
    double top_decade_max = 0.0;
    double prev_decade_max = 0.0;
    bool bounded = false;
    std::string verdict() const { return bounded ? "bounded" : "diverging"; }
};

// default grid r = 10^{k/8}, k = 8..32
std::vector<double> default_r_grid();
TauberianReport tr_alpha_ratio(const EnvelopeSpec& spec, const std::vector<double>& r_grid);

// Exact n-step distributions of a finite law by sparse convolution.
class ConvolutionPowers {
public:
    ConvolutionPowers(const StepMeasure& mu, std::size_t support_cap = 1'000'000);
    // p_k for k <= n; false when the support cap stops the computation
    bool extend_to(int n);
    int computed() const { return static_cast<int>(powers_.size()) - 1; }
    const ElementMap<double>& power(int k) const { return powers_.at(static_cast<std::size_t>(k)); }
    // nu^{(j+k)}(e) = sum_x p_j(x) p_k(x^{-1}), needs j, k <= computed()
    double return_prob(int j, int k) const;

private:
    StepMeasure mu_;
    std::vector<Atom> atoms_;
    std::size_t cap_;
    std::vector<ElementMap<double>> powers_;
};

struct OnDiagonalSeries {
    std::vector<int> m;
    std::vector<double> p2m;       // p_{2m}(e,e)
    std::vector<double> ci;        // 0 for exact values
    std::vector<double> root;      // p_{2m}^{1/2m}
    std::vector<bool> exact;
    double beta_hat = 0.0;         // slope of log(-log p_{2m}) against log(2m)
    double beta_fit_residual = 0.0;
    double log_slope = 0.0;        // slope of log p_{2m} against m
    bool log_convex = true;
};

OnDiagonalSeries on_diagonal_probe(const StepMeasure& mu, int m_max, std::size_t support_cap = 1'000'000,
                                   std::size_t mc_trials = 200'000, std::uint64_t seed = 1);

struct ParityReport {
    std::vector<int> k;
    std::vector<double> slack;  // sqrt(nu^(2 floor(k/2))(e) nu^(2 ceil(k/2))(e)) - nu^(k)(e)
    double worst = 0.0;
    std::size_t violations = 0;
};

ParityReport parity_bridge_check(const StepMeasure& nu, int k_max);

struct HolderReport {
    std::vector<std::int64_t> n;
    std::vector<double> value;  // per-n max over x
    double max = 0.0;
    double truncated_mass = 0.0;
};

// Dense n-step pmfs on Z^d; rho(n) = sqrt(n), Vol = rho^d.
HolderReport holder_constant_probe(const StepMeasure& mu, const std::vector<std::int64_t>& n_list, const Element& a,
                                   const Element& b, double alpha = 1.0);

struct ExpGrowthReport {
    std::vector<int> n;
    std::vector<double> sphere_sum;    // sum over S(e,n) of G(e,y)
    std::vector<double> contrast;      // G(e,e) |S(e,n)| (1-delta)^{n-n0} c_*^{n0}
    std::optional<int> first_contradiction;  // first n with contrast > sphere_sum
};

ExpGrowthReport exp_growth_sum_probe(const GreenOracle& G, const std::vector<int>& n_list, double delta = 0.1,
                                     int n0 = 29, double c_star = 1.0 / 3.0);

}  // namespace greenlab
