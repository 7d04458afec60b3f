#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "greenlab/group.hpp"
#include "greenlab/rng.hpp"

namespace greenlab {

struct Atom {
    Element g;
    double p;
};

// Per-radius law f(r) on r >= r_min, normalised by Z = sum f.
//   shell: f(r) = 1/(r^2 log r)
//   power: f(r) = r^{-1-alpha}
// Exact prefix sums up to table_cap, Euler-Maclaurin tail beyond.
class RadiusLaw {
public:
    enum class Kind { Shell, Power };
    static constexpr std::int64_t hard_cap = std::int64_t{1} << 40;

    static RadiusLaw shell(std::int64_t r0, std::int64_t table_cap = 100'000);
    static RadiusLaw power(double alpha, std::int64_t table_cap = 100'000);

    Kind kind() const { return kind_; }
    std::int64_t r_min() const { return r_min_; }
    std::int64_t table_cap() const { return table_cap_; }
    double alpha() const { return alpha_; }

    double weight(std::int64_t r) const;
    // sum_{s >= r} f(s)
    double tail_weight(std::int64_t r) const;
    double normalizer() const { return z_; }
    double prob(std::int64_t r) const { return weight(r) / z_; }
    double tail_prob(std::int64_t r) const { return tail_weight(r) / z_; }
    // probability of radii above hard_cap, lumped into hard_cap by the sampler
    double clamp_loss() const { return tail_prob(hard_cap + 1); }

    std::int64_t sample(Rng& rng) const;

private:
    RadiusLaw() = default;
    double analytic_tail(std::int64_t r) const;
    void fill_suffix();
    Kind kind_ = Kind::Shell;
    std::int64_t r_min_ = 1;
    std::int64_t table_cap_ = 0;
    double alpha_ = 1.0;
    double z_ = 1.0;
    std::vector<double> prefix_;  // prefix_[i] = sum_{r_min <= s <= r_min + i} f(s)
    std::vector<double> suffix_;  // suffix_[i] = sum_{r_min + i <= s <= table_cap} f(s)
};

class StepMeasure {
public:
    // Explicit finite law; total mass must be 1 within 1e-12.
    static StepMeasure finite(const Group& g, std::vector<Atom> atoms, std::string descriptor = "");
    static StepMeasure uniform_on_generators(const Group& g, const GeneratorSet& gens);
    static StepMeasure srw(const Group& g) { return uniform_on_generators(g, g.standard_generators()); }
    // 10% uniform on unit generators, 90% on axis powers x^{+-r} with law 1/(r^2 log r), r >= r0
    static StepMeasure shell(const Group& g, std::int64_t r0, std::int64_t r_cap = 100'000);
    // mu(k) = C |k|^{-1-alpha} on Z
    static StepMeasure stable_z(double alpha, std::int64_t r_cap = 100'000);

    // eps * delta_e + (1 - eps) * mu
    StepMeasure lazy(double eps) const;

    const Group& group() const { return group_; }
    bool finite_support() const { return !tail_; }
    bool symmetric() const { return symmetric_; }
    double laziness() const { return lazy_; }
    // finite law (lazy mass included); for tail laws the unit-generator part before laziness
    const std::vector<Atom>& atoms() const { return atoms_; }
    const RadiusLaw* radius_law() const { return tail_.get(); }
    // mass of the radial part before laziness
    double tail_mass() const { return tail_mass_; }

    double pmf(const Element& g) const;
    // mass of radius r (all directions), laziness included
    double radius_mass(std::int64_t r) const;
    void sample_into(Element& out, Rng& rng) const;
    Element sample(Rng& rng) const;

    const std::string& descriptor() const { return descriptor_; }
    std::string hash() const;
    // -1 for unbounded support
    std::int64_t max_step_length(const WordMetric& m) const;
    double first_moment_partial(std::int64_t R, const WordMetric& m) const;
    // two-sided constants (c1, c2) with p_r in [c1, c2] / (r^2 log r) for r >= r0
    std::pair<double, double> shell_constants() const;
    // support elements other than e (finite laws only)
    std::vector<Atom> steps() const;
    // BFS over the support from e reaches every element of the standard B(e,2)
    bool certify_generation() const;

private:
    explicit StepMeasure(const Group& g) : group_(g) {}
    void build_sampler();
    Group group_;
    std::vector<Atom> atoms_;
    std::vector<double> cdf_;
    std::shared_ptr<const RadiusLaw> tail_;
    double tail_mass_ = 0.0;
    double lazy_ = 0.0;
    bool symmetric_ = true;
    std::string descriptor_;
};

}  // namespace greenlab
