#include "greenlab/step_measure.hpp"

#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

#include "greenlab/error.hpp"

namespace greenlab {

RadiusLaw RadiusLaw::shell(std::int64_t r0, std::int64_t table_cap) {
    if (r0 < 3) throw std::invalid_argument("shell measure needs r0 >= 3");
    if (table_cap < r0) throw std::invalid_argument("R_cap must be >= r0");
    RadiusLaw L;
    L.kind_ = Kind::Shell;
    L.r_min_ = r0;
    L.table_cap_ = table_cap;
    double s = 0.0;
    for (std::int64_t r = r0; r <= table_cap; ++r) {
        s += L.weight(r);
        L.prefix_.push_back(s);
    }
    L.fill_suffix();
    L.z_ = L.tail_weight(r0);
    return L;
}

RadiusLaw RadiusLaw::power(double alpha, std::int64_t table_cap) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("stable index alpha must lie in (0,2)");
    RadiusLaw L;
    L.kind_ = Kind::Power;
    L.alpha_ = alpha;
    L.r_min_ = 1;
    L.table_cap_ = table_cap;
    double s = 0.0;
    for (std::int64_t r = 1; r <= table_cap; ++r) {
        s += L.weight(r);
        L.prefix_.push_back(s);
    }
    L.fill_suffix();
    L.z_ = L.tail_weight(1);
    return L;
}

void RadiusLaw::fill_suffix() {
    suffix_.assign(prefix_.size(), 0.0);
    double t = 0.0;
    for (std::size_t i = prefix_.size(); i-- > 0;) {
        t += weight(r_min_ + static_cast<std::int64_t>(i));
        suffix_[i] = t;
    }
}

double RadiusLaw::weight(std::int64_t r) const {
    if (r < r_min_) return 0.0;
    double x = static_cast<double>(r);
    if (kind_ == Kind::Shell) return 1.0 / (x * x * std::log(x));
    return std::pow(x, -1.0 - alpha_);
}

double RadiusLaw::analytic_tail(std::int64_t r) const {
    // Euler-Maclaurin: sum_{s>=r} f(s) = int_r^inf f + f(r)/2 - f'(r)/12 + f'''(r)/720 - ...
    double x = static_cast<double>(r);
    if (kind_ == Kind::Shell) {
        double lx = std::log(x);
        double integral = gsl_sf_expint_E1(lx);
        double f = 1.0 / (x * x * lx);
        double fp = -(2.0 * lx + 1.0) / (x * x * x * lx * lx);
        return integral + 0.5 * f - fp / 12.0;
    }
    double s = 1.0 + alpha_;
    double f = std::pow(x, -s);
    double fp = -s * f / x;
    double fppp = -s * (s + 1.0) * (s + 2.0) * f / (x * x * x);
    return std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * f - fp / 12.0 + fppp / 720.0;
}

double RadiusLaw::tail_weight(std::int64_t r) const {
    if (r < r_min_) r = r_min_;
    if (r > table_cap_) return analytic_tail(r);
    // sum the table part from the top for accuracy
    return analytic_tail(table_cap_ + 1) + suffix_[static_cast<std::size_t>(r - r_min_)];
}

std::int64_t RadiusLaw::sample(Rng& rng) const {
    double u = uniform01(rng) * z_;
    if (u < prefix_.back()) {
        auto it = std::upper_bound(prefix_.begin(), prefix_.end(), u);
        return r_min_ + static_cast<std::int64_t>(it - prefix_.begin());
    }
    // conditional tail: R = max{r : T(r) >= w T(cap+1)}
    double target = uniform01_open_low(rng) * analytic_tail(table_cap_ + 1);
    std::int64_t lo = table_cap_ + 1, hi = hard_cap;
    if (analytic_tail(hi) >= target) return hi;
    while (hi - lo > 1) {
        std::int64_t mid = lo + (hi - lo) / 2;
        if (analytic_tail(mid) >= target) lo = mid;
        else hi = mid;
    }
    return lo;
}

namespace {

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

const Atom* find_atom(const std::vector<Atom>& atoms, const Element& g) {
    auto it = std::lower_bound(atoms.begin(), atoms.end(), g, [](const Atom& a, const Element& x) { return a.g < x; });
    if (it != atoms.end() && it->g == g) return &*it;
    return nullptr;
}

}  // namespace

StepMeasure StepMeasure::finite(const Group& g, std::vector<Atom> atoms, std::string descriptor) {
    StepMeasure m(g);
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.g < b.g; });
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!g.is_valid(a.g)) throw BackendMismatch("measure atom is not a " + g.spec().name() + " element");
        if (!(a.p >= 0.0)) throw std::invalid_argument("negative probability");
        if (!m.atoms_.empty() && m.atoms_.back().g == a.g) m.atoms_.back().p += a.p;
        else if (a.p > 0.0) m.atoms_.push_back(a);
        total += a.p;
    }
    if (m.atoms_.empty()) throw std::invalid_argument("empty measure");
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("measure mass " + fmt_double(total) + " != 1");
    for (const auto& a : m.atoms_) {
        const Atom* b = find_atom(m.atoms_, g.inv(a.g));
        if (!b || std::abs(b->p - a.p) > 1e-15) {
            m.symmetric_ = false;
            break;
        }
    }
    if (const Atom* e = find_atom(m.atoms_, g.identity())) m.lazy_ = e->p;
    if (descriptor.empty()) {
        std::string s;
        for (const auto& a : m.atoms_) s += g.format(a.g) + ":" + fmt_double(a.p) + ";";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
        descriptor = "finite(" + g.spec().name() + ";n=" + std::to_string(m.atoms_.size()) + ";" + buf + ")";
    }
    m.descriptor_ = std::move(descriptor);
    m.build_sampler();
    return m;
}

StepMeasure StepMeasure::uniform_on_generators(const Group& g, const GeneratorSet& gens) {
    std::vector<Atom> atoms;
    for (const auto& t : gens.elements()) atoms.push_back({t, 1.0 / static_cast<double>(gens.size())});
    bool standard = gens.elements() == g.standard_generators().elements();
    std::string d = standard ? "srw(" + g.spec().name() + ")"
                             : "uniform(" + g.spec().name() + ";n=" + std::to_string(gens.size()) + ")";
    StepMeasure m = finite(g, std::move(atoms), d);
    m.lazy_ = 0.0;
    return m;
}

StepMeasure StepMeasure::shell(const Group& g, std::int64_t r0, std::int64_t r_cap) {
    auto k = g.spec().kind();
    if (k != BackendKind::Lattice && k != BackendKind::Heisenberg)
        throw BackendMismatch("shell measure needs designated axes (lattice or Heisenberg)");
    if (r0 < 3) throw std::invalid_argument("shell measure needs r0 >= 3");
    StepMeasure m(g);
    auto law = std::make_shared<RadiusLaw>(RadiusLaw::shell(r0, r_cap));
    auto gens = g.standard_generators();
    const double unit = 0.1;
    for (const auto& t : gens.elements()) m.atoms_.push_back({t, unit / static_cast<double>(gens.size())});
    std::sort(m.atoms_.begin(), m.atoms_.end(), [](const Atom& a, const Atom& b) { return a.g < b.g; });
    m.tail_ = std::move(law);
    m.tail_mass_ = 1.0 - unit;
    m.descriptor_ = "shell(" + g.spec().name() + ";r0=" + std::to_string(r0) + ";cap=" + std::to_string(r_cap) +
                    ";unit=0.1;axis-powers)";
    m.build_sampler();
    return m;
}

StepMeasure StepMeasure::stable_z(double alpha, std::int64_t r_cap) {
    StepMeasure m(Group(GroupSpec::lattice(1)));
    m.tail_ = std::make_shared<RadiusLaw>(RadiusLaw::power(alpha, r_cap));
    m.tail_mass_ = 1.0;
    m.descriptor_ = "stable(alpha=" + fmt_double(alpha) + ";cap=" + std::to_string(r_cap) + ")";
    m.build_sampler();
    return m;
}

StepMeasure StepMeasure::lazy(double eps) const {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("laziness must lie in [0,1)");
    StepMeasure m = *this;
    m.lazy_ = 1.0 - (1.0 - lazy_) * (1.0 - eps);
    m.descriptor_ = "lazy(" + fmt_double(eps) + "," + descriptor_ + ")";
    if (!tail_) {
        Element e = group_.identity();
        bool has_e = false;
        for (auto& a : m.atoms_) {
            if (a.g == e) {
                a.p = eps + (1.0 - eps) * a.p;
                has_e = true;
            } else {
                a.p = (1.0 - eps) * a.p;
            }
        }
        if (!has_e && eps > 0.0) {
            m.atoms_.push_back({e, eps});
            std::sort(m.atoms_.begin(), m.atoms_.end(), [](const Atom& a, const Atom& b) { return a.g < b.g; });
        }
    }
    m.build_sampler();
    return m;
}

void StepMeasure::build_sampler() {
    cdf_.clear();
    double s = 0.0;
    for (const auto& a : atoms_) {
        s += a.p;
        cdf_.push_back(s);
    }
}

double StepMeasure::pmf(const Element& g) const {
    if (!group_.is_valid(g)) throw BackendMismatch("pmf: foreign element");
    if (!tail_) {
        const Atom* a = find_atom(atoms_, g);
        return a ? a->p : 0.0;
    }
    double base = 0.0;
    if (const Atom* a = find_atom(atoms_, g)) base += a->p;
    // axis power test: exactly one nonzero axis coordinate (Heisenberg: central part 0)
    std::size_t axes = static_cast<std::size_t>(group_.axis_count());
    std::int64_t r = 0;
    int nonzero = 0;
    for (std::size_t i = 0; i < axes; ++i)
        if (g.v[i] != 0) {
            ++nonzero;
            r = std::llabs(g.v[i]);
        }
    bool central_ok = group_.spec().kind() != BackendKind::Heisenberg || g.v[2] == 0;
    if (nonzero == 1 && central_ok && r >= tail_->r_min())
        base += tail_mass_ * tail_->prob(r) / static_cast<double>(2 * axes);
    double p = (1.0 - lazy_) * base;
    if (group_.is_identity(g)) p += lazy_;
    return p;
}

double StepMeasure::radius_mass(std::int64_t r) const {
    if (!tail_) {
        WordMetric wm = WordMetric::standard(group_);
        double s = 0.0;
        for (const auto& a : atoms_)
            if (wm.length(a.g).value == r) s += a.p;
        return s;
    }
    double s = tail_mass_ * tail_->prob(r);
    if (r == 1)
        for (const auto& a : atoms_) s += a.p;
    return (1.0 - lazy_) * s + (r == 0 ? lazy_ : 0.0);
}

void StepMeasure::sample_into(Element& out, Rng& rng) const {
    if (!tail_) {
        double u = uniform01(rng) * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        out.v.assign(atoms_[static_cast<std::size_t>(it - cdf_.begin())].g.v.begin(),
                     atoms_[static_cast<std::size_t>(it - cdf_.begin())].g.v.end());
        return;
    }
    const std::size_t dim = group_.spec().kind() == BackendKind::Heisenberg ? 3 : static_cast<std::size_t>(group_.spec().rank());
    double u = uniform01(rng);
    if (u < lazy_) {
        out.v.assign(dim, 0);
        return;
    }
    double unit = cdf_.empty() ? 0.0 : cdf_.back();
    double v = (u - lazy_) / (1.0 - lazy_);
    if (v < unit) {
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
        if (it == cdf_.end()) --it;
        const auto& g = atoms_[static_cast<std::size_t>(it - cdf_.begin())].g;
        out.v.assign(g.v.begin(), g.v.end());
        return;
    }
    std::int64_t r = tail_->sample(rng);
    auto dir = rng() % static_cast<std::uint64_t>(2 * group_.axis_count());
    out.v.assign(dim, 0);
    out.v[dir / 2] = (dir % 2 == 0) ? r : -r;
}

Element StepMeasure::sample(Rng& rng) const {
    Element g;
    sample_into(g, rng);
    return g;
}

std::string StepMeasure::hash() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(descriptor_)));
    return buf;
}

std::int64_t StepMeasure::max_step_length(const WordMetric& m) const {
    if (tail_) return -1;
    std::int64_t mx = 0;
    for (const auto& a : atoms_) mx = std::max(mx, m.length(a.g).value);
    return mx;
}

double StepMeasure::first_moment_partial(std::int64_t R, const WordMetric& m) const {
    double s = 0.0;
    if (!tail_) {
        for (const auto& a : atoms_) {
            auto l = m.length(a.g).value;
            if (l <= R) s += static_cast<double>(l) * a.p;
        }
        return s;
    }
    if (R >= 1)
        for (const auto& a : atoms_) s += a.p;
    double t = 0.0;
    for (std::int64_t r = tail_->r_min(); r <= R; ++r) t += static_cast<double>(r) * tail_->weight(r);
    s += tail_mass_ * t / tail_->normalizer();
    return (1.0 - lazy_) * s;
}

std::pair<double, double> StepMeasure::shell_constants() const {
    if (!tail_ || tail_->kind() != RadiusLaw::Kind::Shell) throw std::logic_error("not a shell measure");
    double c = (1.0 - lazy_) * tail_mass_ / tail_->normalizer();
    return {c, c};
}

std::vector<Atom> StepMeasure::steps() const {
    if (tail_) throw std::logic_error("steps() needs finite support");
    std::vector<Atom> out;
    for (const auto& a : atoms_)
        if (!group_.is_identity(a.g)) out.push_back(a);
    return out;
}

bool StepMeasure::certify_generation() const {
    std::vector<Element> supp;
    for (const auto& a : atoms_)
        if (!group_.is_identity(a.g)) supp.push_back(a.g);
    if (supp.empty()) return false;
    auto gens = group_.standard_generators();
    auto layers = bfs_layers(group_, gens, 2);
    std::unordered_set<Element, ElementHash> need;
    for (auto& l : layers)
        for (auto& x : l) need.insert(x);
    std::unordered_set<Element, ElementHash> seen{group_.identity()};
    std::vector<Element> frontier{group_.identity()};
    std::size_t found = 1;
    for (int depth = 0; depth < 12 && found < need.size() && !frontier.empty(); ++depth) {
        std::vector<Element> next;
        for (const auto& x : frontier)
            for (const auto& t : supp) {
                Element y = group_.mul(x, t);
                if (seen.size() > 200'000) break;
                if (seen.insert(y).second) {
                    if (need.count(y)) ++found;
                    next.push_back(std::move(y));
                }
            }
        frontier = std::move(next);
    }
    return found == need.size();
}

}  // namespace greenlab
