#pragma once

#include <cstdint>
#include <vector>

#include "greenlab/step_measure.hpp"

namespace greenlab {

// Probability mass on the integer window [lo, lo + p.size()), with the mass
// lost to truncation tracked in `trunc` (sum p + trunc = 1).
struct PmfOnZ {
    std::int64_t lo = 0;
    std::vector<double> p;
    double trunc = 0.0;

    static PmfOnZ delta(std::int64_t k = 0);
    // restriction of a law on Z to [-K, K]; the clipped mass goes to trunc
    static PmfOnZ from_measure(const StepMeasure& mu, std::int64_t K);

    std::int64_t hi() const { return lo + static_cast<std::int64_t>(p.size()) - 1; }
    double at(std::int64_t k) const {
        return (k < lo || k > hi()) ? 0.0 : p[static_cast<std::size_t>(k - lo)];
    }
    double mass() const;
};

// Exact convolution restricted to |k| <= K; direct summation for small inputs, FFT otherwise.
PmfOnZ convolve_z(const PmfOnZ& a, const PmfOnZ& b, std::int64_t K);
// n-fold convolution power by repeated squaring (caps applied after every product).
PmfOnZ convolution_power(const PmfOnZ& a, std::int64_t n, std::int64_t K);

// (1/2) sum_m |p(m) - p(m - k)|
double tv_shift(const PmfOnZ& a, std::int64_t k);

// gcd of pairwise differences of the support (1 = aperiodic)
std::int64_t support_gcd(const PmfOnZ& a);
std::int64_t support_gcd(const std::vector<std::int64_t>& support);

}  // namespace greenlab
