#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace greenlab {

enum class BackendKind { Lattice, Free, Heisenberg, ProductZ };

class GroupSpec {
public:
    static GroupSpec lattice(int d);
    static GroupSpec free(int k);
    static GroupSpec heisenberg();
    static GroupSpec product_with_z(const GroupSpec& inner);
    // "Z3", "F2", "H3", "Z2xZ", "H3xZ", ...
    static GroupSpec parse(std::string_view name);

    BackendKind kind() const { return kind_; }
    // lattice dimension or free rank; for products, the inner one
    int rank() const { return rank_; }
    BackendKind inner_kind() const { return inner_kind_; }
    GroupSpec inner() const;

    std::string name() const;
    // polynomial growth degree, or -1 for exponential growth
    int growth_degree() const;
    // transient for simple random walk
    bool transient() const;

    bool operator==(const GroupSpec&) const = default;

private:
    GroupSpec(BackendKind k, int r, BackendKind ik) : kind_(k), rank_(r), inner_kind_(ik) {}
    BackendKind kind_;
    int rank_;
    BackendKind inner_kind_;
};

// Canonical payload.
//   lattice: d coordinates
//   free: reduced word, letter i in 1..k is the i-th generator, -i its inverse
//   Heisenberg: (a, b, c) with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')
//   product: inner payload followed by the Z coordinate
struct Element {
    std::vector<std::int64_t> v;

    Element() = default;
    explicit Element(std::vector<std::int64_t> c) : v(std::move(c)) {}
    Element(std::initializer_list<std::int64_t> c) : v(c) {}

    bool operator==(const Element&) const = default;
    std::strong_ordering operator<=>(const Element& o) const {
        return std::lexicographical_compare_three_way(v.begin(), v.end(), o.v.begin(), o.v.end());
    }
};

struct ElementHash {
    std::size_t operator()(const Element& g) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ g.v.size();
        for (auto x : g.v) {
            h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

template <class T>
using ElementMap = std::unordered_map<Element, T, ElementHash>;

class Group;

class GeneratorSet {
public:
    GeneratorSet(const Group& g, std::vector<Element> gens);

    const std::vector<Element>& elements() const { return gens_; }
    std::size_t size() const { return gens_.size(); }
    const Element& operator[](std::size_t i) const { return gens_[i]; }
    std::size_t inverse_index(std::size_t i) const { return inv_[i]; }

private:
    std::vector<Element> gens_;
    std::vector<std::size_t> inv_;
};

class Group {
public:
    explicit Group(GroupSpec spec);

    const GroupSpec& spec() const { return spec_; }
    Element identity() const;
    bool is_identity(const Element& g) const;
    bool is_valid(const Element& g) const;

    Element mul(const Element& g, const Element& h) const;
    Element inv(const Element& g) const;
    // g <- g*h; only h is validated, so walks stay O(|h|)
    void mul_inplace(Element& g, const Element& h) const;

    GeneratorSet standard_generators() const;
    std::vector<Element> neighbors(const Element& g, const GeneratorSet& gens) const;

    std::string format(const Element& g) const;
    Element parse(std::string_view s) const;

    // x^r along designated axis i (lattice e_i; Heisenberg 0 -> x, 1 -> y)
    Element axis_power(int axis, std::int64_t r) const;
    int axis_count() const;

private:
    void check(const Element& g, const char* what) const;
    void mul_into(Element& g, const Element& h) const;
    GroupSpec spec_;
};

enum class MetricMode { ExactFormula, BfsTable, HomogeneousQuasiNorm };
const char* to_string(MetricMode m);

struct WordLength {
    std::int64_t value;
    MetricMode mode;
};

// Homogeneous quasi-norm N(a,b,c) = |a| + |b| + ceil(sqrt|c|).
std::int64_t heisenberg_quasi_norm(const Element& g);

class WordMetric {
public:
    // Exact formula for standard generators (lattice L1, reduced free length,
    // products add |z|); Heisenberg gets BFS to 14 with quasi-norm fallback.
    static WordMetric standard(const Group& g);
    static WordMetric bfs(const Group& g, const GeneratorSet& gens, int r_max, bool quasi_fallback = false);
    static WordMetric quasi_norm(const Group& g);

    WordLength length(const Element& g) const;
    MetricMode mode() const { return mode_; }
    int r_max() const { return r_max_; }

    // (A, B) with A^{-1}N - B <= |g| <= A N + B over the BFS table
    struct BiLipschitz {
        double A;
        double B;
    };
    BiLipschitz fit_bilipschitz(double a_max = 4.0) const;
    const ElementMap<int>& table() const { return *table_; }

private:
    WordMetric(const Group& g, MetricMode m) : group_(g), mode_(m) {}
    Group group_;
    MetricMode mode_;
    int r_max_ = 0;
    bool quasi_fallback_ = false;
    std::shared_ptr<const ElementMap<int>> table_ = std::make_shared<ElementMap<int>>();
};

// Default caps: lattices 40, free groups 10, Heisenberg 12, products follow the inner group.
int sphere_cap(const GroupSpec& spec);

// Elements at distance exactly r from e in the Cayley graph of gens (lexicographic order).
std::vector<Element> sphere(const Group& g, const GeneratorSet& gens, int r);

// BFS layers 0..r without the sphere cap; aborts past max_size elements.
std::vector<std::vector<Element>> bfs_layers(const Group& g, const GeneratorSet& gens, int r,
                                             std::size_t max_size = 20'000'000);

}  // namespace greenlab
