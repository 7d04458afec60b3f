#include "greenlab/group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "greenlab/error.hpp"

namespace greenlab {

namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw NumericError("integer overflow in group law");
    return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw NumericError("integer overflow in group law");
    return r;
}

std::int64_t isqrt_ceil(std::int64_t n) {
    if (n <= 0) return 0;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while (r * r < n) ++r;
    return r;
}

}  // namespace

GroupSpec GroupSpec::lattice(int d) {
    if (d < 1) throw std::invalid_argument("lattice dimension must be >= 1");
    return {BackendKind::Lattice, d, BackendKind::Lattice};
}

GroupSpec GroupSpec::free(int k) {
    if (k < 2 || k > 26) throw std::invalid_argument("free group rank must be in [2,26]");
    return {BackendKind::Free, k, BackendKind::Free};
}

GroupSpec GroupSpec::heisenberg() { return {BackendKind::Heisenberg, 0, BackendKind::Heisenberg}; }

GroupSpec GroupSpec::product_with_z(const GroupSpec& inner) {
    if (inner.kind_ == BackendKind::ProductZ) throw std::invalid_argument("ProductWithZ nesting depth is at most 1");
    return {BackendKind::ProductZ, inner.rank_, inner.kind_};
}

GroupSpec GroupSpec::inner() const {
    if (kind_ != BackendKind::ProductZ) throw BackendMismatch("not a product backend");
    switch (inner_kind_) {
        case BackendKind::Lattice: return lattice(rank_);
        case BackendKind::Free: return free(rank_);
        default: return heisenberg();
    }
}

GroupSpec GroupSpec::parse(std::string_view name) {
    std::string s(name);
    if (s.size() > 2 && s.substr(s.size() - 2) == "xZ") return product_with_z(parse(s.substr(0, s.size() - 2)));
    if (s == "H3" || s == "H") return heisenberg();
    if (s.size() >= 2 && (s[0] == 'Z' || s[0] == 'F')) {
        char* end = nullptr;
        long r = std::strtol(s.c_str() + 1, &end, 10);
        if (end && *end == '\0') return s[0] == 'Z' ? lattice(static_cast<int>(r)) : free(static_cast<int>(r));
    }
    throw std::invalid_argument("unknown backend '" + s + "'");
}

std::string GroupSpec::name() const {
    switch (kind_) {
        case BackendKind::Lattice: return "Z" + std::to_string(rank_);
        case BackendKind::Free: return "F" + std::to_string(rank_);
        case BackendKind::Heisenberg: return "H3";
        case BackendKind::ProductZ: return inner().name() + "xZ";
    }
    return {};
}

int GroupSpec::growth_degree() const {
    switch (kind_) {
        case BackendKind::Lattice: return rank_;
        case BackendKind::Free: return -1;
        case BackendKind::Heisenberg: return 4;
        case BackendKind::ProductZ: {
            int g = inner().growth_degree();
            return g < 0 ? -1 : g + 1;
        }
    }
    return 0;
}

bool GroupSpec::transient() const {
    int g = growth_degree();
    return g < 0 || g >= 3;
}

GeneratorSet::GeneratorSet(const Group& g, std::vector<Element> gens) : gens_(std::move(gens)) {
    if (gens_.empty()) throw std::invalid_argument("empty generator set");
    ElementMap<std::size_t> pos;
    for (std::size_t i = 0; i < gens_.size(); ++i) {
        if (!g.is_valid(gens_[i])) throw BackendMismatch("generator does not belong to " + g.spec().name());
        if (g.is_identity(gens_[i])) throw std::invalid_argument("generator set contains the identity");
        if (!pos.emplace(gens_[i], i).second) throw std::invalid_argument("duplicate generator");
    }
    inv_.resize(gens_.size());
    for (std::size_t i = 0; i < gens_.size(); ++i) {
        auto it = pos.find(g.inv(gens_[i]));
        if (it == pos.end()) throw std::invalid_argument("generator set is not symmetric");
        inv_[i] = it->second;
    }
}

Group::Group(GroupSpec spec) : spec_(spec) {}

Element Group::identity() const {
    switch (spec_.kind()) {
        case BackendKind::Lattice: return Element(std::vector<std::int64_t>(spec_.rank(), 0));
        case BackendKind::Free: return Element();
        case BackendKind::Heisenberg: return Element({0, 0, 0});
        case BackendKind::ProductZ: {
            Element e = Group(spec_.inner()).identity();
            e.v.push_back(0);
            return e;
        }
    }
    return {};
}

bool Group::is_identity(const Element& g) const {
    return std::all_of(g.v.begin(), g.v.end(), [](std::int64_t x) { return x == 0; }) &&
           (spec_.kind() != BackendKind::Free || g.v.empty()) &&
           (spec_.kind() != BackendKind::ProductZ || spec_.inner_kind() != BackendKind::Free || g.v.size() == 1);
}

bool Group::is_valid(const Element& g) const {
    auto free_ok = [](const std::int64_t* p, std::size_t n, int k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] == 0 || p[i] > k || p[i] < -k) return false;
            if (i > 0 && p[i] == -p[i - 1]) return false;
        }
        return true;
    };
    switch (spec_.kind()) {
        case BackendKind::Lattice: return g.v.size() == static_cast<std::size_t>(spec_.rank());
        case BackendKind::Free: return free_ok(g.v.data(), g.v.size(), spec_.rank());
        case BackendKind::Heisenberg: return g.v.size() == 3;
        case BackendKind::ProductZ:
            if (g.v.empty()) return false;
            switch (spec_.inner_kind()) {
                case BackendKind::Lattice: return g.v.size() == static_cast<std::size_t>(spec_.rank()) + 1;
                case BackendKind::Heisenberg: return g.v.size() == 4;
                default: return free_ok(g.v.data(), g.v.size() - 1, spec_.rank());
            }
    }
    return false;
}

void Group::check(const Element& g, const char* what) const {
    if (!is_valid(g)) throw BackendMismatch(std::string(what) + ": element is not a canonical " + spec_.name() + " element");
}

void Group::mul_into(Element& g, const Element& h) const {
    auto& a = g.v;
    const auto& b = h.v;
    auto free_mul = [](std::vector<std::int64_t>& w, const std::int64_t* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!w.empty() && w.back() == -p[i]) w.pop_back();
            else w.push_back(p[i]);
        }
    };
    switch (spec_.kind()) {
        case BackendKind::Lattice:
            for (std::size_t i = 0; i < a.size(); ++i) a[i] = checked_add(a[i], b[i]);
            return;
        case BackendKind::Free: free_mul(a, b.data(), b.size()); return;
        case BackendKind::Heisenberg:
            a[2] = checked_add(checked_add(a[2], b[2]), checked_mul(a[0], b[1]));
            a[0] = checked_add(a[0], b[0]);
            a[1] = checked_add(a[1], b[1]);
            return;
        case BackendKind::ProductZ: {
            std::int64_t z = checked_add(a.back(), b.back());
            a.pop_back();
            if (spec_.inner_kind() == BackendKind::Free) {
                free_mul(a, b.data(), b.size() - 1);
            } else if (spec_.inner_kind() == BackendKind::Heisenberg) {
                a[2] = checked_add(checked_add(a[2], b[2]), checked_mul(a[0], b[1]));
                a[0] = checked_add(a[0], b[0]);
                a[1] = checked_add(a[1], b[1]);
            } else {
                for (std::size_t i = 0; i < a.size(); ++i) a[i] = checked_add(a[i], b[i]);
            }
            a.push_back(z);
            return;
        }
    }
}

Element Group::mul(const Element& g, const Element& h) const {
    check(g, "mul");
    check(h, "mul");
    Element r = g;
    mul_into(r, h);
    return r;
}

void Group::mul_inplace(Element& g, const Element& h) const {
    check(h, "mul_inplace");
    const bool word_payload = spec_.kind() == BackendKind::Free ||
                              (spec_.kind() == BackendKind::ProductZ && spec_.inner_kind() == BackendKind::Free);
    if (word_payload ? (spec_.kind() == BackendKind::ProductZ && g.v.empty()) : g.v.size() != h.v.size())
        throw BackendMismatch("mul_inplace: shape mismatch");
    mul_into(g, h);
}

Element Group::inv(const Element& g) const {
    check(g, "inv");
    Element r = g;
    auto& a = r.v;
    switch (spec_.kind()) {
        case BackendKind::Lattice:
            for (auto& x : a) x = -x;
            break;
        case BackendKind::Free:
            std::reverse(a.begin(), a.end());
            for (auto& x : a) x = -x;
            break;
        case BackendKind::Heisenberg:
            a[2] = checked_add(-a[2], checked_mul(a[0], a[1]));
            a[0] = -a[0];
            a[1] = -a[1];
            break;
        case BackendKind::ProductZ:
            if (spec_.inner_kind() == BackendKind::Free) {
                std::reverse(a.begin(), a.end() - 1);
                for (auto& x : a) x = -x;
            } else if (spec_.inner_kind() == BackendKind::Heisenberg) {
                a[2] = checked_add(-a[2], checked_mul(a[0], a[1]));
                a[0] = -a[0];
                a[1] = -a[1];
                a[3] = -a[3];
            } else {
                for (auto& x : a) x = -x;
            }
            break;
    }
    return r;
}

GeneratorSet Group::standard_generators() const {
    std::vector<Element> gens;
    switch (spec_.kind()) {
        case BackendKind::Lattice:
        case BackendKind::Heisenberg:
            for (int i = 0; i < axis_count(); ++i) {
                gens.push_back(axis_power(i, 1));
                gens.push_back(axis_power(i, -1));
            }
            break;
        case BackendKind::Free:
            for (int i = 1; i <= spec_.rank(); ++i) {
                gens.push_back(Element({i}));
                gens.push_back(Element({-i}));
            }
            break;
        case BackendKind::ProductZ: {
            Group in(spec_.inner());
            const GeneratorSet inner_gens = in.standard_generators();
            for (const auto& t : inner_gens.elements()) {
                Element u = t;
                u.v.push_back(0);
                gens.push_back(u);
            }
            Element up = in.identity(), down = in.identity();
            up.v.push_back(1);
            down.v.push_back(-1);
            gens.push_back(up);
            gens.push_back(down);
            break;
        }
    }
    return GeneratorSet(*this, std::move(gens));
}

std::vector<Element> Group::neighbors(const Element& g, const GeneratorSet& gens) const {
    check(g, "neighbors");
    std::vector<Element> out;
    out.reserve(gens.size());
    for (const auto& t : gens.elements()) {
        Element r = g;
        mul_into(r, t);
        out.push_back(std::move(r));
    }
    return out;
}

int Group::axis_count() const {
    switch (spec_.kind()) {
        case BackendKind::Lattice: return spec_.rank();
        case BackendKind::Free: return spec_.rank();
        case BackendKind::Heisenberg: return 2;
        case BackendKind::ProductZ: return Group(spec_.inner()).axis_count() + 1;
    }
    return 0;
}

Element Group::axis_power(int axis, std::int64_t r) const {
    if (axis < 0 || axis >= axis_count()) throw std::out_of_range("axis index");
    switch (spec_.kind()) {
        case BackendKind::Lattice: {
            Element e = identity();
            e.v[axis] = r;
            return e;
        }
        case BackendKind::Free: {
            std::int64_t letter = r >= 0 ? axis + 1 : -(axis + 1);
            return Element(std::vector<std::int64_t>(static_cast<std::size_t>(std::llabs(r)), letter));
        }
        case BackendKind::Heisenberg: {
            Element e({0, 0, 0});
            e.v[axis] = r;
            return e;
        }
        case BackendKind::ProductZ: {
            Group in(spec_.inner());
            if (axis == axis_count() - 1) {
                Element e = in.identity();
                e.v.push_back(r);
                return e;
            }
            Element e = in.axis_power(axis, r);
            e.v.push_back(0);
            return e;
        }
    }
    return {};
}

std::string Group::format(const Element& g) const {
    check(g, "format");
    auto tuple = [](const std::int64_t* p, std::size_t n) {
        std::string s = "(";
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s += ',';
            s += std::to_string(p[i]);
        }
        return s + ")";
    };
    auto word = [](const std::int64_t* p, std::size_t n) {
        if (n == 0) return std::string("e");
        std::string s;
        for (std::size_t i = 0; i < n; ++i)
            s += p[i] > 0 ? static_cast<char>('a' + p[i] - 1) : static_cast<char>('A' - p[i] - 1);
        return s;
    };
    switch (spec_.kind()) {
        case BackendKind::Lattice:
        case BackendKind::Heisenberg: return tuple(g.v.data(), g.v.size());
        case BackendKind::Free: return word(g.v.data(), g.v.size());
        case BackendKind::ProductZ: {
            std::size_t n = g.v.size() - 1;
            std::string in = spec_.inner_kind() == BackendKind::Free ? word(g.v.data(), n) : tuple(g.v.data(), n);
            return in + ";" + std::to_string(g.v.back());
        }
    }
    return {};
}

Element Group::parse(std::string_view s) const {
    auto parse_tuple = [](std::string_view t) {
        if (t.size() < 2 || t.front() != '(' || t.back() != ')') throw std::invalid_argument("bad tuple '" + std::string(t) + "'");
        std::vector<std::int64_t> out;
        std::string body(t.substr(1, t.size() - 2));
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            out.push_back(std::stoll(item, &used));
            if (used != item.size()) throw std::invalid_argument("bad integer '" + item + "'");
        }
        return out;
    };
    auto parse_word = [this](std::string_view t) {
        std::vector<std::int64_t> out;
        if (t == "e") return out;
        for (char c : t) {
            if (c >= 'a' && c <= 'z') out.push_back(c - 'a' + 1);
            else if (c >= 'A' && c <= 'Z') out.push_back(-(c - 'A' + 1));
            else throw std::invalid_argument("bad word letter");
        }
        // reduce freely so that non-reduced input still parses to the canonical form
        std::vector<std::int64_t> red;
        for (auto x : out) {
            if (!red.empty() && red.back() == -x) red.pop_back();
            else red.push_back(x);
        }
        (void)this;
        return red;
    };
    Element g;
    switch (spec_.kind()) {
        case BackendKind::Lattice:
        case BackendKind::Heisenberg: g.v = parse_tuple(s); break;
        case BackendKind::Free: g.v = parse_word(s); break;
        case BackendKind::ProductZ: {
            auto semi = s.rfind(';');
            if (semi == std::string_view::npos) throw std::invalid_argument("product element needs ';'");
            auto in = s.substr(0, semi);
            g.v = spec_.inner_kind() == BackendKind::Free ? parse_word(in) : parse_tuple(in);
            g.v.push_back(std::stoll(std::string(s.substr(semi + 1))));
            break;
        }
    }
    check(g, "parse");
    return g;
}

const char* to_string(MetricMode m) {
    switch (m) {
        case MetricMode::ExactFormula: return "exact";
        case MetricMode::BfsTable: return "bfs";
        case MetricMode::HomogeneousQuasiNorm: return "quasi-norm";
    }
    return "?";
}

std::int64_t heisenberg_quasi_norm(const Element& g) {
    if (g.v.size() < 3) throw BackendMismatch("quasi-norm needs a Heisenberg element");
    return std::llabs(g.v[0]) + std::llabs(g.v[1]) + isqrt_ceil(std::llabs(g.v[2]));
}

WordMetric WordMetric::standard(const Group& g) {
    switch (g.spec().kind()) {
        case BackendKind::Lattice:
        case BackendKind::Free: return WordMetric(g, MetricMode::ExactFormula);
        case BackendKind::Heisenberg: return bfs(g, g.standard_generators(), 14, true);
        case BackendKind::ProductZ:
            if (g.spec().inner_kind() != BackendKind::Heisenberg) return WordMetric(g, MetricMode::ExactFormula);
            return bfs(g, g.standard_generators(), 12, true);
    }
    return WordMetric(g, MetricMode::ExactFormula);
}

WordMetric WordMetric::bfs(const Group& g, const GeneratorSet& gens, int r_max, bool quasi_fallback) {
    WordMetric m(g, MetricMode::BfsTable);
    m.r_max_ = r_max;
    m.quasi_fallback_ = quasi_fallback;
    auto table = std::make_shared<ElementMap<int>>();
    auto layers = bfs_layers(g, gens, r_max);
    for (std::size_t r = 0; r < layers.size(); ++r)
        for (auto& x : layers[r]) table->emplace(std::move(x), static_cast<int>(r));
    m.table_ = std::move(table);
    return m;
}

WordMetric WordMetric::quasi_norm(const Group& g) {
    if (g.spec().kind() != BackendKind::Heisenberg &&
        !(g.spec().kind() == BackendKind::ProductZ && g.spec().inner_kind() == BackendKind::Heisenberg))
        throw BackendMismatch("quasi-norm mode is Heisenberg-only");
    return WordMetric(g, MetricMode::HomogeneousQuasiNorm);
}

WordLength WordMetric::length(const Element& g) const {
    const auto& spec = group_.spec();
    auto quasi = [&]() -> WordLength {
        std::int64_t n = heisenberg_quasi_norm(g);
        if (spec.kind() == BackendKind::ProductZ) n += std::llabs(g.v.back());
        return {n, MetricMode::HomogeneousQuasiNorm};
    };
    switch (mode_) {
        case MetricMode::ExactFormula: {
            if (!group_.is_valid(g)) throw BackendMismatch("word_length: foreign element");
            std::int64_t s = 0;
            bool free_inner = spec.kind() == BackendKind::Free ||
                              (spec.kind() == BackendKind::ProductZ && spec.inner_kind() == BackendKind::Free);
            if (free_inner) {
                s = static_cast<std::int64_t>(g.v.size());
                if (spec.kind() == BackendKind::ProductZ) s = s - 1 + std::llabs(g.v.back());
            } else {
                for (auto x : g.v) s += std::llabs(x);
            }
            return {s, MetricMode::ExactFormula};
        }
        case MetricMode::BfsTable: {
            auto it = table_->find(g);
            if (it != table_->end()) return {it->second, MetricMode::BfsTable};
            if (quasi_fallback_) return quasi();
            throw OutOfRange("word_length: element beyond BFS radius " + std::to_string(r_max_));
        }
        case MetricMode::HomogeneousQuasiNorm: return quasi();
    }
    return {0, mode_};
}

WordMetric::BiLipschitz WordMetric::fit_bilipschitz(double a_max) const {
    if (table_->empty()) throw std::logic_error("fit_bilipschitz needs a BFS table");
    std::vector<std::pair<double, double>> pts;  // (N, |g|)
    pts.reserve(table_->size());
    for (const auto& [g, len] : *table_) pts.emplace_back(static_cast<double>(heisenberg_quasi_norm(g)), len);
    BiLipschitz best{1.0, std::numeric_limits<double>::infinity()};
    for (double A = 1.0; A <= a_max + 1e-12; A += 0.01) {
        double B = 0.0;
        for (auto [n, l] : pts) B = std::max({B, n / A - l, l - A * n});
        if (B < best.B - 1e-12) best = {A, B};
    }
    return best;
}

int sphere_cap(const GroupSpec& spec) {
    switch (spec.kind()) {
        case BackendKind::Lattice: return 40;
        case BackendKind::Free: return 10;
        case BackendKind::Heisenberg: return 12;
        case BackendKind::ProductZ: return sphere_cap(spec.inner());
    }
    return 0;
}

std::vector<std::vector<Element>> bfs_layers(const Group& g, const GeneratorSet& gens, int r, std::size_t max_size) {
    if (r < 0) throw std::invalid_argument("negative radius");
    std::unordered_set<Element, ElementHash> seen;
    std::vector<std::vector<Element>> layers;
    layers.push_back({g.identity()});
    seen.insert(layers[0][0]);
    for (int k = 1; k <= r; ++k) {
        std::vector<Element> next;
        for (const auto& x : layers.back()) {
            for (const auto& t : gens.elements()) {
                Element y = g.mul(x, t);
                if (seen.insert(y).second) next.push_back(std::move(y));
            }
        }
        if (seen.size() > max_size) throw CapExceeded("ball enumeration exceeds " + std::to_string(max_size) + " elements");
        layers.push_back(std::move(next));
    }
    return layers;
}

std::vector<Element> sphere(const Group& g, const GeneratorSet& gens, int r) {
    if (r > sphere_cap(g.spec()))
        throw CapExceeded("sphere radius " + std::to_string(r) + " exceeds cap " + std::to_string(sphere_cap(g.spec())));
    auto layers = bfs_layers(g, gens, r);
    auto out = std::move(layers[r]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace greenlab
