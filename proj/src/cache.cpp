#include "greenlab/cache.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "greenlab/csv.hpp"
#include "greenlab/rng.hpp"
#include "json.hpp"

namespace greenlab {

namespace {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string tol_text(double tol) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", tol);
    return buf;
}

}  // namespace

std::string CacheKey::file_stem() const {
    return hex64(fnv1a(backend + "|" + measure_hash + "|" + domain_label + "|" + sources_digest + "|" + tol_text(tol)));
}

CacheKey make_cache_key(const Domain& omega, const std::vector<Element>& sources, const StepMeasure& mu, double tol) {
    std::string s;
    for (const auto& a : sources) s += omega.group().format(a) + ";";
    return CacheKey{omega.group().spec().name(), mu.hash(), omega.label(), hex64(fnv1a(s)), tol};
}

GreenCache::GreenCache(std::string dir, bool force_recompute) : dir_(std::move(dir)), force_(force_recompute) {
    std::filesystem::create_directories(dir_);
}

std::string GreenCache::path_for(const CacheKey& key) const {
    return (std::filesystem::path(dir_) / (key.file_stem() + ".gtab")).string();
}

std::optional<GreenTable> GreenCache::lookup(const CacheKey& key, std::shared_ptr<const Domain> omega,
                                             const std::vector<Element>& sources) {
    const std::string path = path_for(key);
    if (force_ || !std::filesystem::exists(path)) {
        ++misses_;
        return std::nullopt;
    }
    auto corrupt = [&](const std::string& why) -> std::optional<GreenTable> {
        std::cerr << "warning: ignoring corrupt cache file " << path << ": " << why << "\n";
        ++misses_;
        return std::nullopt;
    };
    std::ifstream f(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8) return corrupt("short header");
    std::uint64_t mlen = 0;
    std::memcpy(&mlen, bytes.data(), 8);
    if (mlen > bytes.size() - 8) return corrupt("metadata length past end of file");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(bytes.substr(8, mlen));
    } catch (const std::exception& e) {
        return corrupt(std::string("metadata: ") + e.what());
    }
    try {
        if (meta.at("version").get<std::string>() != GREENLAB_VERSION || meta.at("backend").get<std::string>() != key.backend ||
            meta.at("measure_hash").get<std::string>() != key.measure_hash ||
            meta.at("domain_label").get<std::string>() != key.domain_label ||
            meta.at("sources_digest").get<std::string>() != key.sources_digest || meta.at("tol").get<double>() != key.tol ||
            meta.at("domain_size").get<std::size_t>() != omega->size()) {
            ++misses_;
            return std::nullopt;
        }
        std::vector<std::string> src = meta.at("sources").get<std::vector<std::string>>();
        if (src.size() != sources.size()) {
            ++misses_;
            return std::nullopt;
        }
        for (std::size_t i = 0; i < src.size(); ++i)
            if (src[i] != omega->group().format(sources[i])) {
                ++misses_;
                return std::nullopt;
            }
        const std::size_t nv = meta.at("n_values").get<std::size_t>();
        if (nv != sources.size() * omega->size()) return corrupt("value count mismatch");
        if (bytes.size() - 8 - mlen != nv * 8) return corrupt("truncated value block");
        GreenTable t;
        t.domain = std::move(omega);
        t.sources = sources;
        t.residual = meta.at("residual").get<double>();
        t.max_exit_time = meta.at("max_exit_time").get<double>();
        t.error_bound = meta.at("error_bound").get<double>();
        t.tol = key.tol;
        t.laziness = meta.at("laziness").get<double>();
        t.measure_hash = key.measure_hash;
        t.measure_descriptor = meta.at("measure_descriptor").get<std::string>();
        const char* p = bytes.data() + 8 + mlen;
        const std::size_t n = t.domain->size();
        t.values.assign(sources.size(), std::vector<double>(n));
        for (std::size_t s = 0; s < sources.size(); ++s) {
            std::memcpy(t.values[s].data(), p, n * 8);
            p += n * 8;
        }
        ++hits_;
        return t;
    } catch (const std::exception& e) {
        return corrupt(std::string("metadata: ") + e.what());
    }
}

void GreenCache::store(const CacheKey& key, const GreenTable& t) {
    nlohmann::json meta;
    meta["version"] = GREENLAB_VERSION;
    meta["backend"] = key.backend;
    meta["measure_hash"] = key.measure_hash;
    meta["measure_descriptor"] = t.measure_descriptor;
    meta["domain_label"] = key.domain_label;
    meta["domain_size"] = t.domain->size();
    meta["sources_digest"] = key.sources_digest;
    std::vector<std::string> src;
    for (const auto& a : t.sources) src.push_back(t.domain->group().format(a));
    meta["sources"] = src;
    meta["tol"] = key.tol;
    meta["residual"] = t.residual;
    meta["max_exit_time"] = t.max_exit_time;
    meta["error_bound"] = t.error_bound;
    meta["laziness"] = t.laziness;
    meta["n_values"] = t.sources.size() * t.domain->size();
    const std::string m = meta.dump();
    std::string bytes(8, '\0');
    const std::uint64_t mlen = m.size();
    std::memcpy(bytes.data(), &mlen, 8);
    bytes += m;
    for (const auto& row : t.values) bytes.append(reinterpret_cast<const char*>(row.data()), row.size() * 8);
    write_file_atomic(path_for(key), bytes);
}

GreenTable cached_killed_green(GreenCache* cache, std::shared_ptr<const Domain> omega, const std::vector<Element>& sources,
                               const StepMeasure& mu, double tol) {
    if (!cache) return killed_green_solve(omega, sources, mu, tol);
    CacheKey key = make_cache_key(*omega, sources, mu, tol);
    if (auto hit = cache->lookup(key, omega, sources)) return std::move(*hit);
    GreenTable t = killed_green_solve(omega, sources, mu, tol);
    cache->store(key, t);
    return t;
}

}  // namespace greenlab
