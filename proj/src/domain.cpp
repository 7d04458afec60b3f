#include "greenlab/domain.hpp"

#include <algorithm>
#include <stdexcept>

#include "greenlab/error.hpp"

namespace greenlab {

std::shared_ptr<const Domain> Domain::ball(const Group& g, int R, const std::vector<Element>& T, std::size_t max_size) {
    auto layers = bfs_layers(g, g.standard_generators(), R, max_size);
    std::vector<Element> S;
    for (auto& l : layers)
        for (auto& x : l) S.push_back(std::move(x));
    return from_elements(g, std::move(S), T, "ball:" + std::to_string(R));
}

std::shared_ptr<const Domain> Domain::box(const Group& g, int R, const std::vector<Element>& T) {
    if (g.spec().kind() != BackendKind::Lattice) throw BackendMismatch("boxes are lattice-only");
    const int d = g.spec().rank();
    std::vector<Element> S;
    std::vector<std::int64_t> c(static_cast<std::size_t>(d), -R);
    while (true) {
        S.emplace_back(c);
        int i = 0;
        while (i < d && c[static_cast<std::size_t>(i)] == R) c[static_cast<std::size_t>(i++)] = -R;
        if (i == d) break;
        ++c[static_cast<std::size_t>(i)];
    }
    return from_elements(g, std::move(S), T, "box:" + std::to_string(R));
}

std::shared_ptr<const Domain> Domain::from_elements(const Group& g, std::vector<Element> S, const std::vector<Element>& T,
                                                    std::string label) {
    if (S.empty()) throw std::invalid_argument("empty domain");
    std::shared_ptr<Domain> d(new Domain(g));
    d->label_ = std::move(label);
    for (const auto& t : T) {
        if (!g.is_valid(t)) throw BackendMismatch("step is not a " + g.spec().name() + " element");
        if (!g.is_identity(t)) d->steps_.push_back(t);
    }
    if (d->steps_.empty()) throw std::invalid_argument("domain needs a nonempty step support");
    d->elems_ = std::move(S);
    d->finalize();
    return d;
}

void Domain::finalize() {
    index_.reserve(elems_.size());
    for (std::size_t i = 0; i < elems_.size(); ++i) {
        if (!group_.is_valid(elems_[i])) throw BackendMismatch("domain element is not canonical");
        if (!index_.emplace(elems_[i], static_cast<std::uint32_t>(i)).second) throw std::invalid_argument("duplicate domain element");
    }
    const std::size_t m = steps_.size();
    nb_.assign(elems_.size() * m, 0);
    std::vector<std::pair<std::size_t, Element>> outside;
    for (std::size_t i = 0; i < elems_.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            Element y = group_.mul(elems_[i], steps_[j]);
            auto it = index_.find(y);
            if (it != index_.end()) {
                nb_[i * m + j] = static_cast<std::int32_t>(it->second);
            } else {
                auto [bt, fresh] = bindex_.emplace(y, static_cast<std::uint32_t>(boundary_.size()));
                if (fresh) boundary_.push_back(std::move(y));
                nb_[i * m + j] = -static_cast<std::int32_t>(bt->second) - 1;
            }
        }
    }
    // sort boundary lexicographically and remap
    std::vector<std::uint32_t> order(boundary_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return boundary_[a] < boundary_[b]; });
    std::vector<std::uint32_t> rank(order.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    std::vector<Element> sorted(boundary_.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) sorted[r] = std::move(boundary_[order[r]]);
    boundary_ = std::move(sorted);
    for (auto& kv : bindex_) kv.second = rank[kv.second];
    for (auto& v : nb_)
        if (v < 0) v = -static_cast<std::int32_t>(rank[static_cast<std::size_t>(-v - 1)]) - 1;
}

std::int64_t Domain::index(const Element& g) const {
    auto it = index_.find(g);
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::int64_t Domain::boundary_index(const Element& g) const {
    auto it = bindex_.find(g);
    return it == bindex_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

}  // namespace greenlab
