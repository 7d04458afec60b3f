#include "greenlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "greenlab/asymptotics.hpp"
#include "greenlab/cache.hpp"
#include "greenlab/envelope.hpp"
#include "greenlab/error.hpp"
#include "greenlab/functionals.hpp"
#include "greenlab/green.hpp"
#include "greenlab/green_oracle.hpp"
#include "greenlab/parallel.hpp"

namespace greenlab {

using nlohmann::json;

namespace {

const std::set<std::string> kKinds = {"delta-scan", "eps-delta", "green-table", "envelope", "speed",
                                      "dispersion", "green-speed", "cone", "increment-probe", "on-diagonal"};

std::set<std::string> allowed_keys(const std::string& kind) {
    std::set<std::string> k = {"kind", "seed", "output", "cache_dir"};
    auto add = [&](std::initializer_list<const char*> xs) {
        for (auto x : xs) k.insert(x);
    };
    if (kind != "envelope" && kind != "cone") add({"backend", "measure"});
    if (kind == "delta-scan") add({"scales", "a", "b", "exhaustion", "green", "omega_scale", "tol"});
    if (kind == "eps-delta") add({"scales", "a", "b", "green", "omega_scale", "tol"});
    if (kind == "green-table") add({"scales", "sources", "tol"});
    if (kind == "envelope") add({"envelope", "d_star", "gamma", "alpha", "delta", "eta", "c", "r_grid"});
    if (kind == "speed") add({"checkpoints", "eps", "metric", "trials"});
    if (kind == "dispersion") add({"checkpoints", "shift", "cap"});
    if (kind == "green-speed") add({"checkpoints", "trials"});
    if (kind == "cone") add({"L", "x", "x_star", "checkpoints", "tol"});
    if (kind == "increment-probe") add({"checkpoints", "metric", "trials"});
    if (kind == "on-diagonal") add({"m_max", "support_cap", "trials"});
    return k;
}

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

std::int64_t get_int(const json& c, const char* key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
    if (!c.contains(key)) return def;
    const auto& v = c.at(key);
    if (!v.is_number_integer() && !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()))
        bad(std::string("'") + key + "' must be an integer");
    auto x = v.is_number_integer() ? v.get<std::int64_t>() : static_cast<std::int64_t>(v.get<double>());
    if (x < lo || x > hi) bad(std::string("'") + key + "' out of range");
    return x;
}

double get_num(const json& c, const char* key, double def, double lo, double hi) {
    if (!c.contains(key)) return def;
    const auto& v = c.at(key);
    if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
    double x = v.get<double>();
    if (!(x >= lo && x <= hi)) bad(std::string("'") + key + "' out of range");
    return x;
}

std::string get_str(const json& c, const char* key, const std::string& def, std::initializer_list<const char*> choices = {}) {
    if (!c.contains(key)) return def;
    const auto& v = c.at(key);
    if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
    std::string s = v.get<std::string>();
    if (choices.size()) {
        bool ok = false;
        for (auto ch : choices) ok = ok || s == ch;
        if (!ok) bad(std::string("'") + key + "' has unsupported value '" + s + "'");
    }
    return s;
}

std::vector<std::int64_t> get_int_list(const json& c, const char* key, std::vector<std::int64_t> def, std::int64_t lo,
                                       bool required = false) {
    if (!c.contains(key)) {
        if (required) bad(std::string("missing '") + key + "'");
        return def;
    }
    const auto& v = c.at(key);
    if (!v.is_array() || v.empty()) bad(std::string("'") + key + "' must be a nonempty array");
    std::vector<std::int64_t> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) bad(std::string("'") + key + "' entries must be integers");
        out.push_back(e.get<std::int64_t>());
        if (out.back() < lo) bad(std::string("'") + key + "' entries out of range");
    }
    return out;
}

std::vector<double> get_num_list(const json& c, const char* key, std::vector<double> def) {
    if (!c.contains(key)) return def;
    const auto& v = c.at(key);
    if (!v.is_array() || v.empty()) bad(std::string("'") + key + "' must be a nonempty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) bad(std::string("'") + key + "' entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void require_increasing(const std::vector<std::int64_t>& v, const char* key) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] <= v[i - 1]) bad(std::string("'") + key + "' must be strictly increasing");
}

GroupSpec backend_of(const json& c, const char* def) {
    std::string b = get_str(c, "backend", def);
    try {
        GroupSpec s = GroupSpec::parse(b);
        Group check(s);
        (void)check;
        return s;
    } catch (const std::exception& e) {
        bad("bad backend: " + std::string(e.what()));
    }
}

Element element_of(const Group& g, const json& c, const char* key, const Element& def) {
    if (!c.contains(key)) return def;
    if (!c.at(key).is_string()) bad(std::string("'") + key + "' must be an element string");
    try {
        return g.parse(c.at(key).get<std::string>());
    } catch (const std::exception& e) {
        bad(std::string("'") + key + "': " + e.what());
    }
}

}  // namespace

StepMeasure measure_from_json(const Group& g, const json& m) {
    if (!m.is_object()) bad("'measure' must be an object");
    static const std::set<std::string> keys = {"name", "laziness", "r0", "r_cap", "alpha"};
    for (const auto& [k, v] : m.items())
        if (!keys.count(k)) bad("unknown measure key '" + k + "'");
    std::string name = get_str(m, "name", "srw", {"srw", "shell", "stable"});
    double lazy = get_num(m, "laziness", 0.0, 0.0, 0.999999);
    std::int64_t cap = get_int(m, "r_cap", 100'000, 10, 100'000'000);
    try {
        StepMeasure mu = [&] {
            if (name == "srw") {
                if (m.contains("r0") || m.contains("alpha")) bad("srw takes no r0/alpha");
                return StepMeasure::srw(g);
            }
            if (name == "shell") {
                if (m.contains("alpha")) bad("shell takes no alpha");
                return StepMeasure::shell(g, get_int(m, "r0", 3, 3, 1'000'000), cap);
            }
            if (m.contains("r0")) bad("stable takes no r0");
            if (!(g.spec() == GroupSpec::lattice(1))) bad("stable measure lives on Z1");
            return StepMeasure::stable_z(get_num(m, "alpha", 1.0, 1e-6, 2.0 - 1e-6), cap);
        }();
        return lazy > 0.0 ? mu.lazy(lazy) : mu;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad(std::string("measure: ") + e.what());
    }
}

void validate_config(const json& cfg) {
    if (!cfg.is_object()) bad("config must be a JSON object");
    if (!cfg.contains("kind") || !cfg.at("kind").is_string()) bad("missing string 'kind'");
    const std::string kind = cfg.at("kind").get<std::string>();
    if (!kKinds.count(kind)) bad("unknown kind '" + kind + "'");
    const auto allowed = allowed_keys(kind);
    for (const auto& [k, v] : cfg.items())
        if (!allowed.count(k)) bad("unknown key '" + k + "' for kind " + kind);
    get_int(cfg, "seed", 1, 0, std::numeric_limits<std::int64_t>::max());
    get_str(cfg, "output", "");
    get_str(cfg, "cache_dir", "");
    if (allowed.count("trials")) get_int(cfg, "trials", 1, 1, 100'000'000);
    if (allowed.count("tol")) get_num(cfg, "tol", 1e-10, 1e-15, 1e-3);
    if (allowed.count("backend")) {
        Group g(backend_of(cfg, kind == "dispersion" ? "Z1" : "Z3"));
        measure_from_json(g, cfg.contains("measure") ? cfg.at("measure") : json::object());
        element_of(g, cfg, "a", g.identity());
        element_of(g, cfg, "b", g.identity());
    }
    if (kind == "delta-scan" || kind == "eps-delta" || kind == "green-table") {
        auto s = get_int_list(cfg, "scales", {}, 1, true);
        require_increasing(s, "scales");
        get_str(cfg, "exhaustion", "ball", {"ball", "box"});
        get_str(cfg, "green", "auto", {"auto", "solver", "oracle"});
        get_int(cfg, "omega_scale", 2, 1, 16);
        if (cfg.contains("sources")) {
            if (!cfg.at("sources").is_array() || cfg.at("sources").empty()) bad("'sources' must be a nonempty array");
            Group g(backend_of(cfg, kind == "dispersion" ? "Z1" : "Z3"));
            for (const auto& s2 : cfg.at("sources")) {
                if (!s2.is_string()) bad("'sources' entries must be element strings");
                try {
                    g.parse(s2.get<std::string>());
                } catch (const std::exception& e) {
                    bad(std::string("'sources': ") + e.what());
                }
            }
        }
    }
    if (kind == "envelope") {
        get_str(cfg, "envelope", "", {"stretched", "polynomial"});
        if (!cfg.contains("envelope")) bad("missing 'envelope'");
        get_num(cfg, "d_star", 3, 1e-9, 1e6);
        get_num(cfg, "gamma", 2, 1e-9, 1e6);
        get_num(cfg, "alpha", 1, 1e-9, 1);
        get_num(cfg, "delta", 5, 1e-9, 1e6);
        get_num(cfg, "eta", 2, 1e-9, 1e6);
        get_num(cfg, "c", 1, 1e-9, 1e6);
        auto grid = get_num_list(cfg, "r_grid", {1.0});
        for (double r : grid)
            if (!(r >= 1.0 && r <= 1e6)) bad("'r_grid' entries must lie in [1, 1e6]");
    }
    if (kind == "speed" || kind == "dispersion" || kind == "green-speed" || kind == "increment-probe") {
        auto cp = get_int_list(cfg, "checkpoints", {}, 1, true);
        require_increasing(cp, "checkpoints");
    }
    if (kind == "speed") {
        for (double e : get_num_list(cfg, "eps", {0.5}))
            if (!(e >= 0.0)) bad("'eps' entries must be nonnegative");
    }
    if (kind == "speed" || kind == "increment-probe") get_str(cfg, "metric", "word", {"word", "quasi"});
    if (kind == "dispersion") {
        if (!(backend_of(cfg, "Z1") == GroupSpec::lattice(1))) bad("dispersion runs on Z1");
        get_int(cfg, "shift", 1, -1'000'000, 1'000'000);
        get_int(cfg, "cap", 1 << 20, 1, std::int64_t{1} << 26);
    }
    if (kind == "cone") {
        std::int64_t L = get_int(cfg, "L", 60, 2, 400);
        Group z2(GroupSpec::lattice(2));
        element_of(z2, cfg, "x", Element{2, 3});
        element_of(z2, cfg, "x_star", Element{1, 1});
        auto cp = get_int_list(cfg, "checkpoints", {L / 2}, 1);
        for (auto n : cp)
            if (n > L) bad("cone checkpoints must be <= L");
    }
    if (kind == "on-diagonal") {
        get_int(cfg, "m_max", 12, 1, 10'000);
        get_int(cfg, "support_cap", 1'000'000, 1, 50'000'000);
    }
}

namespace {

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Context {
    json cfg;
    std::string kind;
    std::uint64_t seed = 1;
    std::unique_ptr<GreenCache> cache;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> prefix;  // universal row prefix
    std::vector<std::string> prefix_cols = {"seed", "code_version", "backend", "measure_hash"};
};

CsvTable make_table(Context& ctx, std::vector<std::string> cols) {
    CsvTable t;
    t.columns = ctx.prefix_cols;
    for (auto& c : cols) t.columns.push_back(std::move(c));
    return t;
}

void add_row(Context& ctx, CsvTable& t, std::vector<std::string> cells) {
    std::vector<std::string> row = ctx.prefix;
    for (auto& c : cells) row.push_back(std::move(c));
    t.add(std::move(row));
}

std::string b2s(bool b) { return b ? "true" : "false"; }

// infinite-volume Green oracle for SRW when a closed form or quadrature exists
std::unique_ptr<GreenOracle> invariant_oracle(const Group& g, const StepMeasure& mu) {
    if (!mu.finite_support()) return nullptr;
    const double eps = mu.laziness();
    StepMeasure ref = StepMeasure::srw(g);
    if (eps > 0.0) ref = ref.lazy(eps);
    if (ref.hash() != mu.hash()) return nullptr;
    if (g.spec().kind() == BackendKind::Free) return std::make_unique<TreeGreenOracle>(g.spec().rank(), eps);
    if (g.spec().kind() == BackendKind::Lattice && g.spec().rank() >= 3)
        return std::make_unique<LatticeGreenOracle>(g.spec().rank(), eps);
    return nullptr;
}

std::vector<Element> step_elements(const StepMeasure& mu) {
    std::vector<Element> T;
    for (const auto& a : mu.steps()) T.push_back(a.g);
    return T;
}

struct GreenSource {
    std::unique_ptr<GreenOracle> oracle;
    std::string label;
};

// Green function used for Delta at scale R
GreenSource green_for_scale(Context& ctx, const Group& g, const StepMeasure& mu, std::int64_t R, const Element& a,
                            const Element& b, const std::string& mode, double tol) {
    if (mode != "solver") {
        if (auto o = invariant_oracle(g, mu)) {
            std::string label = "oracle:" + o->name();
            return {std::move(o), label};
        }
        if (mode == "oracle") bad("no infinite-volume Green oracle for " + g.spec().name() + " / " + mu.descriptor());
    }
    const std::int64_t scale = get_int(ctx.cfg, "omega_scale", 2, 1, 16);
    auto omega = Domain::ball(g, static_cast<int>(scale * R + 2), step_elements(mu));
    std::vector<Element> src{a};
    if (!(b == a)) src.push_back(b);
    auto tab = std::make_shared<const GreenTable>(cached_killed_green(ctx.cache.get(), omega, src, mu, tol));
    return {std::make_unique<TableGreenOracle>(tab), "killed:" + omega->label()};
}

std::shared_ptr<const Domain> exhaustion_domain(const Group& g, const std::string& ex, std::int64_t R,
                                                const std::vector<Element>& T) {
    if (ex == "box") return Domain::box(g, static_cast<int>(R), T);
    return Domain::ball(g, static_cast<int>(R), T);
}

void check_basepoints(const Domain& S, const Element& a, const Element& b) {
    if (!S.contains(a) || !S.contains(b)) bad("basepoints must lie inside every exhaustion domain (" + S.label() + ")");
}

CsvTable run_delta_scan(Context& ctx, const Group& g, const StepMeasure& mu) {
    const auto scales = get_int_list(ctx.cfg, "scales", {}, 1, true);
    const Element a = element_of(g, ctx.cfg, "a", g.identity());
    const Element b = element_of(g, ctx.cfg, "b", g.standard_generators()[0]);
    const std::string ex = get_str(ctx.cfg, "exhaustion", "ball");
    const std::string mode = get_str(ctx.cfg, "green", "auto");
    const double tol = get_num(ctx.cfg, "tol", 1e-10, 1e-15, 1e-3);
    const WordMetric metric = WordMetric::standard(g);
    CsvTable t = make_table(ctx, {"R", "R_ab", "d_ab", "delta", "delta_err", "argmax", "green_source"});
    DeltaScan scan;
    scan.backend = g.spec().name();
    scan.measure = mu.descriptor();
    scan.a = a;
    scan.b = b;
    const auto T = step_elements(mu);
    const std::int64_t dab = metric.length(g.mul(g.inv(a), b)).value;
    for (std::int64_t R : scales) {
        auto S = exhaustion_domain(g, ex, R, T);
        check_basepoints(*S, a, b);
        GreenSource gs = green_for_scale(ctx, g, mu, R, a, b, mode, tol);
        DeltaResult d = delta(*S, a, b, *gs.oracle);
        DeltaScanRow row;
        row.label = S->label();
        row.R = R;
        row.R_ab = boundary_distance(*S, a, b, metric);
        row.d_ab = dab;
        row.delta = d.value;
        row.delta_err = d.err;
        row.argmax = g.format(d.argmax);
        scan.rows.push_back(row);
        add_row(ctx, t, {std::to_string(R), std::to_string(row.R_ab), std::to_string(dab), fmt_num(d.value), fmt_num(d.err),
                         row.argmax, gs.label});
    }
    try {
        RateFit f = delta_rate_fit(scan);
        ctx.meta.push_back({"fit_alpha", fmt_num(f.alpha)});
        ctx.meta.push_back({"fit_C", fmt_num(f.C)});
        ctx.meta.push_back({"fit_r2", fmt_num(f.r2)});
        ctx.meta.push_back({"decays", b2s(f.decays)});
    } catch (const NumericError&) {
        ctx.meta.push_back({"fit", "unavailable"});
    }
    return t;
}

CsvTable run_eps_delta(Context& ctx, const Group& g, const StepMeasure& mu) {
    const auto scales = get_int_list(ctx.cfg, "scales", {}, 1, true);
    const Element o = g.identity();
    const Element a = element_of(g, ctx.cfg, "a", g.identity());
    const Element b = element_of(g, ctx.cfg, "b", g.standard_generators()[0]);
    const std::string mode = get_str(ctx.cfg, "green", "auto");
    const double tol = get_num(ctx.cfg, "tol", 1e-10, 1e-15, 1e-3);
    const WordMetric metric = WordMetric::standard(g);
    const auto T = step_elements(mu);
    CsvTable t = make_table(ctx, {"measure", "R", "d_ab", "delta", "delta_err", "argmax", "epsilon", "eta_hat", "band_ok"});
    const std::int64_t dab = metric.length(g.mul(g.inv(a), b)).value;
    for (std::int64_t R : scales) {
        auto S = Domain::ball(g, static_cast<int>(R), T);
        check_basepoints(*S, a, b);
        std::vector<Element> src{o};
        for (const auto& c : {a, b})
            if (std::find(src.begin(), src.end(), c) == src.end()) src.push_back(c);
        GreenTable onS = cached_killed_green(ctx.cache.get(), S, src, mu, tol);
        ExitDistribution eo = exit_from_table(onS, o, mu), ea = exit_from_table(onS, a, mu), eb = exit_from_table(onS, b, mu);
        GreenSource gs = green_for_scale(ctx, g, mu, R, a, b, mode, tol);
        DeltaResult d = delta(*S, a, b, *gs.oracle);
        BandCheck bc = eps_delta_band_check(*S, a, b, *gs.oracle, eo, ea, eb);
        add_row(ctx, t, {mu.descriptor(), std::to_string(R), std::to_string(dab), fmt_num(d.value), fmt_num(d.err),
                         g.format(d.argmax), fmt_num(bc.epsilon), fmt_num(bc.eta_hat), b2s(bc.band_ok)});
    }
    return t;
}

CsvTable run_green_table(Context& ctx, const Group& g, const StepMeasure& mu) {
    const auto scales = get_int_list(ctx.cfg, "scales", {}, 1, true);
    const double tol = get_num(ctx.cfg, "tol", 1e-10, 1e-15, 1e-3);
    std::vector<Element> sources;
    if (ctx.cfg.contains("sources"))
        for (const auto& s : ctx.cfg.at("sources")) sources.push_back(g.parse(s.get<std::string>()));
    else
        sources.push_back(g.identity());
    const auto T = step_elements(mu);
    CsvTable t = make_table(ctx, {"domain", "source", "target", "G", "error_bound"});
    for (std::int64_t R : scales) {
        auto om = Domain::ball(g, static_cast<int>(R), T);
        for (const auto& s : sources)
            if (!om->contains(s)) bad("source " + g.format(s) + " outside " + om->label());
        GreenTable tab = cached_killed_green(ctx.cache.get(), om, sources, mu, tol);
        ctx.meta.push_back({"residual_" + om->label(), fmt_num(tab.residual)});
        for (std::size_t s = 0; s < sources.size(); ++s)
            for (std::size_t i = 0; i < om->size(); ++i)
                add_row(ctx, t, {om->label(), g.format(sources[s]), g.format(om->element(i)), fmt_num(tab.values[s][i]),
                                 fmt_num(tab.error_bound)});
    }
    return t;
}

CsvTable run_envelope(Context& ctx) {
    const std::string kind = get_str(ctx.cfg, "envelope", "stretched");
    const double d = get_num(ctx.cfg, "d_star", 3, 1e-9, 1e6), gam = get_num(ctx.cfg, "gamma", 2, 1e-9, 1e6),
                 al = get_num(ctx.cfg, "alpha", 1, 1e-9, 1);
    EnvelopeSpec spec;
    try {
        spec = kind == "stretched"
                   ? EnvelopeSpec::stretched(d, gam, al, get_num(ctx.cfg, "eta", 2, 1e-9, 1e6), get_num(ctx.cfg, "c", 1, 1e-9, 1e6))
                   : EnvelopeSpec::polynomial(d, gam, al, get_num(ctx.cfg, "delta", d + gam, 1e-9, 1e6));
    } catch (const std::invalid_argument& e) {
        bad(e.what());
    }
    auto grid = get_num_list(ctx.cfg, "r_grid", default_r_grid());
    TauberianReport rep;
    try {
        rep = tr_alpha_ratio(spec, grid);
    } catch (const std::invalid_argument& e) {
        bad(e.what());
    }
    CsvTable t = make_table(ctx, {"r", "m", "lhs", "rhs", "ratio"});
    for (std::size_t i = 0; i < rep.r.size(); ++i)
        add_row(ctx, t, {fmt_num(rep.r[i]), std::to_string(rep.m[i]), fmt_num(rep.lhs[i]), fmt_num(rep.rhs[i]), fmt_num(rep.ratio[i])});
    ctx.meta.push_back({"verdict", rep.verdict()});
    ctx.meta.push_back({"top_decade_max", fmt_num(rep.top_decade_max)});
    ctx.meta.push_back({"prev_decade_max", fmt_num(rep.prev_decade_max)});
    return t;
}

WordMetric metric_for(const Context& ctx, const Group& g) {
    std::string m = get_str(ctx.cfg, "metric", "word");
    if (m == "quasi") {
        if (g.spec().kind() != BackendKind::Heisenberg) bad("quasi-norm metric is Heisenberg-only");
        return WordMetric::quasi_norm(g);
    }
    return WordMetric::standard(g);
}

CsvTable run_speed(Context& ctx, const Group& g, const StepMeasure& mu) {
    const auto cps = get_int_list(ctx.cfg, "checkpoints", {}, 1, true);
    const auto eps = get_num_list(ctx.cfg, "eps", {0.5});
    const auto trials = static_cast<std::size_t>(get_int(ctx.cfg, "trials", 2000, 1, 100'000'000));
    WordMetric metric = metric_for(ctx, g);
    SpeedTable st = speed_in_probability(mu, cps, eps, trials, metric, ctx.seed);
    CsvTable t = make_table(ctx, {"n", "eps", "prob", "ci", "trials", "metric"});
    for (const auto& r : st.rows)
        add_row(ctx, t, {std::to_string(r.n), fmt_num(r.eps), fmt_num(r.prob), fmt_num(r.ci), std::to_string(r.trials),
                         to_string(st.mode)});
    ctx.meta.push_back({"metric", to_string(st.mode)});
    return t;
}

CsvTable run_dispersion(Context& ctx, const StepMeasure& mu) {
    const auto cps = get_int_list(ctx.cfg, "checkpoints", {}, 1, true);
    const std::int64_t k = get_int(ctx.cfg, "shift", 1, -1'000'000, 1'000'000);
    const std::int64_t K = get_int(ctx.cfg, "cap", 1 << 20, 1, std::int64_t{1} << 26);
    DispersionCurve c = tv_dispersion_z(mu, k, cps, K);
    CsvTable t = make_table(ctx, {"n", "tv", "tv_err", "trunc", "periodic"});
    for (const auto& r : c.rows)
        add_row(ctx, t, {std::to_string(r.n), fmt_num(r.tv), fmt_num(r.tv_err), fmt_num(r.trunc), b2s(c.periodic)});
    ctx.meta.push_back({"support_gcd", std::to_string(c.gcd)});
    return t;
}

CsvTable run_green_speed(Context& ctx, const Group& g, const StepMeasure& mu) {
    const auto cps = get_int_list(ctx.cfg, "checkpoints", {}, 1, true);
    const auto trials = static_cast<std::size_t>(get_int(ctx.cfg, "trials", 2000, 1, 100'000'000));
    auto oracle = invariant_oracle(g, mu);
    if (!oracle) bad("green-speed: no Green oracle for " + g.spec().name() + " / " + mu.descriptor());
    auto rows = green_speed_estimate(mu, cps, trials, *oracle, ctx.seed);
    CsvTable t = make_table(ctx, {"n", "mean", "ci", "trials"});
    for (const auto& r : rows) add_row(ctx, t, {std::to_string(r.n), fmt_num(r.mean), fmt_num(r.ci), std::to_string(r.trials)});
    ctx.meta.push_back({"green_oracle", oracle->name()});
    return t;
}

CsvTable run_cone(Context& ctx) {
    const std::int64_t L = get_int(ctx.cfg, "L", 60, 2, 400);
    Group z2(GroupSpec::lattice(2));
    const Element x = element_of(z2, ctx.cfg, "x", Element{2, 3});
    const Element xs = element_of(z2, ctx.cfg, "x_star", Element{1, 1});
    const auto cps = get_int_list(ctx.cfg, "checkpoints", {L / 2}, 1);
    ConeReport rep;
    try {
        rep = cone_martin_experiment(static_cast<int>(L), x, xs, cps);
    } catch (const OutOfRange& e) {
        bad(e.what());
    }
    CsvTable t = make_table(ctx, {"n", "ratio", "target"});
    for (std::size_t i = 0; i < rep.n.size(); ++i)
        add_row(ctx, t, {std::to_string(rep.n[i]), fmt_num(rep.ratio[i]), fmt_num(rep.target)});
    ctx.meta.push_back({"harmonic_defect", std::to_string(rep.harmonic_defect)});
    ctx.meta.push_back({"homogeneity_degree", fmt_num(rep.homogeneity_degree)});
    if (rep.harmonic_defect != 0) throw InvariantViolation("x1*x2 is not harmonic in the box interior");
    return t;
}

CsvTable run_increment_probe(Context& ctx, const Group& g, const StepMeasure& mu) {
    const auto cps = get_int_list(ctx.cfg, "checkpoints", {}, 1, true);
    const auto trials = static_cast<std::size_t>(get_int(ctx.cfg, "trials", 2000, 1, 100'000'000));
    WordMetric metric = metric_for(ctx, g);
    auto rows = increment_ratio_max(mu, cps, trials, metric, ctx.seed);
    CsvTable t = make_table(ctx, {"n", "median", "q25", "q75"});
    for (const auto& r : rows) add_row(ctx, t, {std::to_string(r.n), fmt_num(r.median), fmt_num(r.q25), fmt_num(r.q75)});
    return t;
}

CsvTable run_on_diagonal(Context& ctx, const StepMeasure& mu) {
    const int m_max = static_cast<int>(get_int(ctx.cfg, "m_max", 12, 1, 10'000));
    const auto cap = static_cast<std::size_t>(get_int(ctx.cfg, "support_cap", 1'000'000, 1, 50'000'000));
    const auto trials = static_cast<std::size_t>(get_int(ctx.cfg, "trials", 200'000, 1, 100'000'000));
    if (!mu.finite_support()) bad("on-diagonal needs a finite-support measure");
    OnDiagonalSeries s = on_diagonal_probe(mu, m_max, cap, trials, ctx.seed);
    CsvTable t = make_table(ctx, {"m", "p2m", "root", "ci", "exact"});
    for (std::size_t i = 0; i < s.m.size(); ++i)
        add_row(ctx, t, {std::to_string(s.m[i]), fmt_num(s.p2m[i]), fmt_num(s.root[i]), fmt_num(s.ci[i]), b2s(s.exact[i])});
    ctx.meta.push_back({"beta_hat", fmt_num(s.beta_hat)});
    ctx.meta.push_back({"log_slope", fmt_num(s.log_slope)});
    ctx.meta.push_back({"log_convex", b2s(s.log_convex)});
    return t;
}

// contradiction flags and finiteness, with the offending row
void check_rows(const std::string& kind, const CsvTable& t) {
    auto col = [&](const char* name) -> int {
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            if (t.columns[i] == name) return static_cast<int>(i);
        return -1;
    };
    struct Rule {
        const char* column;
        double lo, hi;
        const char* what;
    };
    std::vector<Rule> rules;
    if (kind == "delta-scan" || kind == "eps-delta") rules.push_back({"delta", 0.0, HUGE_VAL, "negative Delta"});
    if (kind == "eps-delta") rules.push_back({"epsilon", 0.0, HUGE_VAL, "negative epsilon"});
    if (kind == "dispersion") rules.push_back({"tv", -1e-12, 1.0 + 1e-12, "TV outside [0,1]"});
    if (kind == "speed") rules.push_back({"prob", 0.0, 1.0, "probability outside [0,1]"});
    if (kind == "on-diagonal") rules.push_back({"p2m", 0.0, 1.0, "return probability outside [0,1]"});
    if (kind == "envelope")
        for (const char* c : {"lhs", "rhs", "ratio"}) rules.push_back({c, 1e-300, HUGE_VAL, "nonpositive Tauberian entry"});
    if (kind == "green-table") rules.push_back({"G", 0.0, HUGE_VAL, "negative Green value"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            const std::string& cell = t.rows[r][c];
            if (cell == "nan" || cell == "inf" || cell == "-inf")
                throw NumericError("non-finite value in row " + std::to_string(r + 1) + ", column " + t.columns[c]);
        }
        for (const auto& rule : rules) {
            int c = col(rule.column);
            if (c < 0) continue;
            double v = std::strtod(t.rows[r][static_cast<std::size_t>(c)].c_str(), nullptr);
            if (!(v >= rule.lo && v <= rule.hi))
                throw InvariantViolation(std::string(rule.what) + " at row " + std::to_string(r + 1) + " (" + rule.column +
                                         "=" + t.rows[r][static_cast<std::size_t>(c)] + ")");
        }
        if (kind == "eps-delta") {
            int c = col("band_ok");
            if (c >= 0 && t.rows[r][static_cast<std::size_t>(c)] != "true")
                throw InvariantViolation("epsilon outside the cancellation band at row " + std::to_string(r + 1));
        }
    }
}

std::pair<std::string, std::string> plot_axes(const std::string& kind) {
    static const std::map<std::string, std::pair<std::string, std::string>> m = {
        {"delta-scan", {"R", "delta"}},   {"eps-delta", {"R", "eta_hat"}}, {"green-table", {"", "G"}},
        {"envelope", {"r", "ratio"}},     {"speed", {"n", "prob"}},        {"dispersion", {"n", "tv"}},
        {"green-speed", {"n", "mean"}},   {"cone", {"n", "ratio"}},        {"increment-probe", {"n", "median"}},
        {"on-diagonal", {"m", "root"}}};
    return m.at(kind);
}

std::string plot_script(const std::string& csv_path, const std::string& kind) {
    auto [x, y] = plot_axes(kind);
    std::ostringstream s;
    s << "import csv\n"
      << "import matplotlib\n"
      << "matplotlib.use(\"Agg\")\n"
      << "import matplotlib.pyplot as plt\n\n"
      << "PATH = " << json(csv_path).dump() << "\n"
      << "with open(PATH, newline=\"\") as f:\n"
      << "    rows = [r for r in csv.reader(f) if r and not r[0].startswith(\"#\")]\n"
      << "header, body = rows[0], rows[1:]\n"
      << "y = [float(r[header.index(" << json(y).dump() << ")]) for r in body]\n";
    if (x.empty())
        s << "x = list(range(len(y)))\n";
    else
        s << "x = [float(r[header.index(" << json(x).dump() << ")]) for r in body]\n";
    s << "plt.plot(x, y, \"o-\")\n"
      << "plt.xlabel(" << json(x.empty() ? "index" : x).dump() << ")\n"
      << "plt.ylabel(" << json(y).dump() << ")\n"
      << "plt.title(" << json(kind).dump() << ")\n"
      << "plt.savefig(PATH + \".png\", dpi=120)\n";
    return s.str();
}

std::string resolve_cache_dir(const json& cfg, const RunOptions& opts) {
    if (opts.cache_dir) return *opts.cache_dir;
    if (const char* env = std::getenv("GREENLAB_CACHE"); env && *env) return env;
    if (cfg.contains("cache_dir")) return cfg.at("cache_dir").get<std::string>();
    return "greenlab-cache";
}

}  // namespace

RunResult run_experiment(const json& cfg, const RunOptions& opts) {
    RunResult res;
    const std::uint64_t solves0 = solve_count();
    const int jobs_before = default_jobs().load();
    try {
        validate_config(cfg);
        if (opts.jobs > 0) default_jobs().store(opts.jobs);
        Context ctx;
        ctx.cfg = cfg;
        ctx.kind = cfg.at("kind").get<std::string>();
        ctx.seed = opts.seed ? *opts.seed : static_cast<std::uint64_t>(get_int(cfg, "seed", 1, 0, std::numeric_limits<std::int64_t>::max()));
        const std::set<std::string> solver_kinds = {"delta-scan", "eps-delta", "green-table"};
        if (solver_kinds.count(ctx.kind)) ctx.cache = std::make_unique<GreenCache>(resolve_cache_dir(cfg, opts), opts.force_recompute);

        std::optional<Group> g;
        std::optional<StepMeasure> mu;
        if (ctx.kind == "cone") {
            g.emplace(GroupSpec::lattice(2));
            mu.emplace(StepMeasure::srw(*g));
        } else if (ctx.kind != "envelope") {
            g.emplace(backend_of(cfg, ctx.kind == "dispersion" ? "Z1" : "Z3"));
            mu.emplace(measure_from_json(*g, cfg.contains("measure") ? cfg.at("measure") : json::object()));
        }
        ctx.prefix = {std::to_string(ctx.seed), GREENLAB_VERSION, g ? g->spec().name() : "none", mu ? mu->hash() : "none"};

        CsvTable t;
        if (ctx.kind == "delta-scan") t = run_delta_scan(ctx, *g, *mu);
        else if (ctx.kind == "eps-delta") t = run_eps_delta(ctx, *g, *mu);
        else if (ctx.kind == "green-table") t = run_green_table(ctx, *g, *mu);
        else if (ctx.kind == "envelope") t = run_envelope(ctx);
        else if (ctx.kind == "speed") t = run_speed(ctx, *g, *mu);
        else if (ctx.kind == "dispersion") t = run_dispersion(ctx, *mu);
        else if (ctx.kind == "green-speed") t = run_green_speed(ctx, *g, *mu);
        else if (ctx.kind == "cone") t = run_cone(ctx);
        else if (ctx.kind == "increment-probe") t = run_increment_probe(ctx, *g, *mu);
        else t = run_on_diagonal(ctx, *mu);

        check_rows(ctx.kind, t);

        std::ostringstream meta;
        meta << "greenlab " << GREENLAB_VERSION << "; kind=" << ctx.kind;
        if (g) meta << "; backend=" << g->spec().name();
        if (mu) meta << "; measure=" << mu->descriptor();
        meta << "; seed=" << ctx.seed;
        if (cfg.contains("trials")) meta << "; trials=" << cfg.at("trials").dump();
        for (const auto& [k, v] : ctx.meta) meta << "; " << k << "=" << v;
        meta << "; timestamp=" << utc_timestamp();
        t.meta = meta.str();

        res.output_path = cfg.contains("output") ? cfg.at("output").get<std::string>() : "greenlab-" + ctx.kind + ".csv";
        t.write(res.output_path);
        if (opts.emit_plot_script) {
            res.plot_script_path = res.output_path + ".plot.py";
            write_file_atomic(res.plot_script_path, plot_script(res.output_path, ctx.kind));
        }
        res.rows = t.rows.size();
        res.cache_hits = ctx.cache ? ctx.cache->hits() : 0;
        res.table = std::move(t);
        res.status = kOk;
    } catch (const ConfigError& e) {
        res.status = kConfigError;
        res.message = std::string("config error: ") + e.what();
    } catch (const json::exception& e) {
        res.status = kConfigError;
        res.message = std::string("config error: ") + e.what();
    } catch (const InvariantViolation& e) {
        res.status = kInvariantViolation;
        res.message = std::string("invariant violation: ") + e.what();
    } catch (const std::exception& e) {
        res.status = kNumericError;
        res.message = std::string("numeric failure: ") + e.what();
    }
    default_jobs().store(jobs_before);
    res.solves = solve_count() - solves0;
    return res;
}

RunResult run_experiment_file(const std::string& path, const RunOptions& opts) {
    std::ifstream f(path);
    if (!f) {
        RunResult r;
        r.status = kConfigError;
        r.message = "config error: cannot read " + path;
        return r;
    }
    json cfg;
    try {
        cfg = json::parse(f);
    } catch (const json::exception& e) {
        RunResult r;
        r.status = kConfigError;
        r.message = std::string("config error: ") + e.what();
        return r;
    }
    return run_experiment(cfg, opts);
}

}  // namespace greenlab
