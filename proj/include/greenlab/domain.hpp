#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "greenlab/group.hpp"

namespace greenlab {

// Finite set S with its outer boundary dS = {y t not in S : y in S, t in T}.
// T is the step support without the identity.
class Domain {
public:
    // B(e,R) for the standard generators
    static std::shared_ptr<const Domain> ball(const Group& g, int R, const std::vector<Element>& T,
                                              std::size_t max_size = 8'000'000);
    // [-R,R]^d on a lattice
    static std::shared_ptr<const Domain> box(const Group& g, int R, const std::vector<Element>& T);
    static std::shared_ptr<const Domain> from_elements(const Group& g, std::vector<Element> S,
                                                       const std::vector<Element>& T, std::string label);

    const Group& group() const { return group_; }
    const std::string& label() const { return label_; }
    const std::vector<Element>& steps() const { return steps_; }

    std::size_t size() const { return elems_.size(); }
    const std::vector<Element>& elements() const { return elems_; }
    const Element& element(std::size_t i) const { return elems_[i]; }
    // -1 when absent
    std::int64_t index(const Element& g) const;
    bool contains(const Element& g) const { return index(g) >= 0; }

    // lexicographically sorted
    const std::vector<Element>& boundary() const { return boundary_; }
    std::int64_t boundary_index(const Element& g) const;

    // neighbor(i, j) for element i and step j: >= 0 index in S, otherwise -(boundary index + 1)
    std::int32_t neighbor(std::size_t i, std::size_t j) const { return nb_[i * steps_.size() + j]; }

private:
    Domain(const Group& g) : group_(g) {}
    void finalize();
    Group group_;
    std::string label_;
    std::vector<Element> steps_;
    std::vector<Element> elems_;
    ElementMap<std::uint32_t> index_;
    std::vector<Element> boundary_;
    ElementMap<std::uint32_t> bindex_;
    std::vector<std::int32_t> nb_;
};

}  // namespace greenlab
