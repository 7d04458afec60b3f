#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greenlab/domain.hpp"
#include "greenlab/step_measure.hpp"

namespace greenlab {

// Killed Green values G_Omega(a, .) for each source a.
struct GreenTable {
    std::shared_ptr<const Domain> domain;
    std::vector<Element> sources;
    std::vector<std::vector<double>> values;  // values[s][i] = G_Omega(sources[s], domain->element(i))
    double residual = 0.0;                    // max over sources of |delta_a - (I - P)v|_inf
    double max_exit_time = 0.0;               // |(I - P)^{-1}|_inf = max_y E_y[tau_Omega]
    double error_bound = 0.0;                 // residual * max_exit_time, bounds |v - G_Omega|_inf
    double tol = 0.0;
    double laziness = 0.0;
    std::string measure_hash;
    std::string measure_descriptor;

    std::int64_t source_index(const Element& a) const;
    // G_Omega(sources[s], x); 0 outside Omega
    double value(std::size_t s, const Element& x) const;
    // G_Omega(a, x) when a or x is a source (symmetry of the kernel)
    std::optional<double> lookup(const Element& a, const Element& x) const;
    double at(const Element& a, const Element& x) const;
};

// Number of single-source solves performed by this process.
std::uint64_t solve_count();

// Solves (I - P_Omega) v = delta_a for each source; dense Cholesky below
// dense_below unknowns, conjugate gradients otherwise.
GreenTable killed_green_solve(std::shared_ptr<const Domain> omega, const std::vector<Element>& sources,
                              const StepMeasure& mu, double tol = 1e-10, std::size_t dense_below = 4000);

struct GreenBracket {
    double lower = 0.0;
    double upper = 0.0;
    double ratio = 0.0;
    bool extrapolated = false;
    bool infinite = false;
    double g_r1 = 0.0, g_mid = 0.0, g_r2 = 0.0;
};

// lower = G_{B(R1)}(a,x); upper from the geometric increment ratio over R1 < (R1+R2)/2 < R2
GreenBracket green_bracket(const Element& a, const Element& x, const StepMeasure& mu, int R1, int R2, double tol = 1e-10);

struct McEstimate {
    double estimate = 0.0;
    double ci_half = 0.0;  // 95% band plus truncation bias term
    double hit_prob = 0.0;
    double hit_ci = 0.0;
    double bias_bound = 0.0;
    bool bias_flag = false;
    std::size_t trials = 0;
};

// Expected visits to e before path_cap, started at e.
McEstimate mc_green_diagonal(const StepMeasure& mu, std::size_t trials, std::size_t path_cap, std::uint64_t seed);
// G(a,x) = F(a,x) G(e,e) with F the empirical hitting frequency within path_cap.
McEstimate mc_hitting_green(const StepMeasure& mu, const Element& a, const Element& x, std::size_t trials,
                            std::size_t path_cap, const McEstimate& g_ee, std::uint64_t seed);

struct ExitDistribution {
    std::shared_ptr<const Domain> domain;
    Element start;
    std::vector<double> prob;  // indexed like domain->boundary()
    std::size_t trials = 0;    // 0 for solved laws
    double solver_residual = 0.0;

    double at(const Element& z) const;
    double mass() const;
};

enum class ExitMethod { Solve, MonteCarlo };

ExitDistribution exit_distribution(std::shared_ptr<const Domain> S, const Element& a, const StepMeasure& mu,
                                   ExitMethod method = ExitMethod::Solve, std::size_t trials = 0, std::uint64_t seed = 0,
                                   double tol = 1e-12);
// From a killed table on S whose sources include a.
ExitDistribution exit_from_table(const GreenTable& on_S, const Element& a, const StepMeasure& mu);

struct ExitCheck {
    double residual = 0.0;
    double bound = 0.0;
};

// |G(a,x) - sum_z mu_S(a,z) G(z,x)| with G read from a table on an enclosing domain
// whose sources include x.
ExitCheck verify_exit_decomposition(const ExitDistribution& exit, const Element& x, const GreenTable& enclosing);

struct BoundaryGreenMatrix {
    Eigen::MatrixXd M;            // M[x,z] = G(z,x), x,z in dS
    std::vector<Element> index;   // dS in lexicographic order
    bool spd = false;             // Cholesky succeeded
    double min_eigenvalue = 0.0;
    double vector_residual = -1;  // |M mu_S(a) - g_S(a)|_inf when an exit law is given
};

// Throws InvariantViolation when the factorisation fails.
BoundaryGreenMatrix boundary_green_matrix(const Domain& S, const GreenTable& enclosing,
                                          const ExitDistribution* exit = nullptr);

// SRW on Z^2 killed outside [1,L]^2
GreenTable quadrant_killed_green(int L, const std::vector<Element>& sources, double tol = 1e-12);

}  // namespace greenlab
