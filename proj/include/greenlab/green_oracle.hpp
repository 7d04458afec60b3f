#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "greenlab/green.hpp"

namespace greenlab {

struct GreenInterval {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
    double half_width() const { return 0.5 * (hi - lo); }
};

// Source of (interval-valued) Green function values G(x, y).
class GreenOracle {
public:
    virtual ~GreenOracle() = default;
    virtual GreenInterval green(const Element& x, const Element& y) const = 0;
    virtual std::string name() const = 0;
    // G(x, y) = G(e, x^{-1} y) for every pair
    virtual bool translation_invariant() const = 0;
    virtual const Group& group() const = 0;
    double value(const Element& x, const Element& y) const { return green(x, y).mid(); }
};

// Killed-table values; intervals carry the propagated solver error.
class TableGreenOracle : public GreenOracle {
public:
    explicit TableGreenOracle(std::shared_ptr<const GreenTable> t) : table_(std::move(t)) {}
    GreenInterval green(const Element& x, const Element& y) const override;
    std::string name() const override { return "killed:" + table_->domain->label(); }
    bool translation_invariant() const override { return false; }
    const Group& group() const override { return table_->domain->group(); }
    const GreenTable& table() const { return *table_; }

private:
    std::shared_ptr<const GreenTable> table_;
};

// SRW on the free group F_k: G(x,y) = q/(q-1) q^{-d(x,y)}, q = 2k - 1, scaled by 1/(1-eps) when lazy.
class TreeGreenOracle : public GreenOracle {
public:
    TreeGreenOracle(int rank, double laziness = 0.0);
    GreenInterval green(const Element& x, const Element& y) const override;
    std::string name() const override { return "tree-closed-form"; }
    bool translation_invariant() const override { return true; }
    const Group& group() const override { return group_; }
    double q() const { return q_; }

private:
    Group group_;
    double q_;
    double scale_;
};

// SRW on Z^d, d >= 3: G(0,x) = d * int_0^inf prod_i e^{-u} I_{x_i}(u) du (continuous-time embedding),
// adaptive quadrature on [0,U] plus a second-order asymptotic tail.
class LatticeGreenOracle : public GreenOracle {
public:
    LatticeGreenOracle(int d, double laziness = 0.0);
    GreenInterval green(const Element& x, const Element& y) const override;
    std::string name() const override { return "lattice-integral"; }
    bool translation_invariant() const override { return true; }
    const Group& group() const override { return group_; }

private:
    GreenInterval compute(std::vector<long> absx) const;
    Group group_;
    int d_;
    double scale_;
    mutable std::mutex mu_;
    mutable std::map<std::vector<long>, GreenInterval> cache_;
};

}  // namespace greenlab
