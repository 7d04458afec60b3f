#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "greenlab/green_oracle.hpp"
#include "greenlab/pmf_z.hpp"
#include "greenlab/step_measure.hpp"

namespace greenlab {

struct WalkSummary {
    std::vector<std::int64_t> checkpoints;
    std::vector<std::int64_t> length;   // |X_n| at each checkpoint
    std::vector<MetricMode> mode;       // how each length was obtained
    std::vector<Element> position;
    std::uint64_t seed = 0;
};

// checkpoints must be strictly increasing, all <= n
WalkSummary simulate_walk(const StepMeasure& mu, std::int64_t n, const std::vector<std::int64_t>& checkpoints,
                          const WordMetric& metric, std::uint64_t seed, std::uint64_t replica = 0);

struct SpeedRow {
    std::int64_t n = 0;
    double eps = 0.0;
    double prob = 0.0;
    double ci = 0.0;  // 95% normal half-width
    std::size_t trials = 0;
};

struct SpeedTable {
    std::vector<SpeedRow> rows;
    MetricMode mode = MetricMode::ExactFormula;  // coarsest mode seen
};

// P(|X_n|/n > eps); every eps reuses the same trajectories
SpeedTable speed_in_probability(const StepMeasure& mu, const std::vector<std::int64_t>& n_list,
                                const std::vector<double>& eps_list, std::size_t trials, const WordMetric& metric,
                                std::uint64_t seed);

struct IncrementRatioRow {
    std::int64_t n = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

// running max over k <= n of |S_k| / k for the i.i.d. increments S_k
std::vector<IncrementRatioRow> increment_ratio_max(const StepMeasure& mu, const std::vector<std::int64_t>& checkpoints,
                                                   std::size_t trials, const WordMetric& metric, std::uint64_t seed);

struct GreenSpeedRow {
    std::int64_t n = 0;
    double mean = 0.0;  // mean of d_G(e, X_n) / n
    double ci = 0.0;
    std::size_t trials = 0;
};

// Throws TransienceError on recurrent backends.
std::vector<GreenSpeedRow> green_speed_estimate(const StepMeasure& mu, const std::vector<std::int64_t>& n_list,
                                                std::size_t trials, const GreenOracle& G, std::uint64_t seed);

struct DispersionRow {
    std::int64_t n = 0;
    double tv = 0.0;
    double tv_err = 0.0;  // >= trunc
    double trunc = 0.0;
};

struct DispersionCurve {
    std::int64_t shift = 0;
    bool periodic = false;  // support gcd > 1
    std::int64_t gcd = 1;
    std::vector<DispersionRow> rows;
};

DispersionCurve tv_dispersion_z(const StepMeasure& mu_z, std::int64_t k, const std::vector<std::int64_t>& n_list,
                                std::int64_t K);

struct ProductDispersionRow {
    std::int64_t n = 0;
    double tv_product = 0.0;
    double tv_h = 0.0;
    double tv_z = 0.0;
    double slack = 0.0;  // tv_h + tv_z - tv_product
};

struct ProductDispersion {
    std::vector<ProductDispersionRow> rows;
    bool holds = true;
};

// nu finite on Z^d (d <= 2), mu = nu (x) mu_z; z = (z_H, z_Z)
ProductDispersion product_dispersion_bound(const StepMeasure& nu, const StepMeasure& mu_z, const Element& z_h,
                                           std::int64_t z_z, const std::vector<std::int64_t>& n_list, std::int64_t K);

struct MalcevCoords {
    std::int64_t x1 = 0, x2 = 0;  // weight-1 block
    std::int64_t c = 0;           // weight-2 central coordinate
    std::int64_t N = 0;           // |x1| + |x2| + ceil(sqrt|c|)
};

MalcevCoords malcev_coords(const Element& g);

struct MalcevGrowth {
    int r_max = 0;
    double max_ratio = 0.0;       // max |c| / |g|^2 over 0 < |g| <= r_max
    std::size_t violations = 0;   // |c| > |g|^2/4 + |g|
    std::size_t checked = 0;
};

MalcevGrowth malcev_growth_check(int r_max = 12);

struct TruncatedMoments {
    std::int64_t n = 0;
    double weight1 = 0.0;       // E[x1^2 + x2^2] / n^2
    double weight2 = 0.0;       // E[c^2] / n^4
    double weight1_se = 0.0;
    double weight2_se = 0.0;
    double coupling_failure = 0.0;  // n P(|S_1| > n)
};

// X_bar_n built from increments S with |S| <= n (others replaced by e)
std::vector<TruncatedMoments> truncated_coordinate_moments(const StepMeasure& mu, const std::vector<std::int64_t>& n_list,
                                                           std::size_t trials, std::uint64_t seed);

struct ConeReport {
    std::vector<std::int64_t> n;
    std::vector<double> ratio;  // G_K(x, y_n) / G_K(x*, y_n), y_n = (n, n)
    double target = 0.0;        // h(x) / h(x*), h = x1 x2
    double homogeneity_degree = 0.0;
    std::int64_t harmonic_defect = 0;  // max |4h(x) - sum of neighbours| over interior points
};

ConeReport cone_martin_experiment(int L, const Element& x, const Element& x_star, const std::vector<std::int64_t>& n_list);

}  // namespace greenlab
