#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greenlab/green.hpp"

namespace greenlab {

struct CacheKey {
    std::string backend;
    std::string measure_hash;
    std::string domain_label;
    std::string sources_digest;
    double tol = 0.0;

    std::string file_stem() const;
};

CacheKey make_cache_key(const Domain& omega, const std::vector<Element>& sources, const StepMeasure& mu, double tol);

// Binary Green-table cache: u64 LE metadata length, JSON metadata, f64 LE values.
class GreenCache {
public:
    explicit GreenCache(std::string dir, bool force_recompute = false);

    const std::string& dir() const { return dir_; }
    std::string path_for(const CacheKey& key) const;
    // miss on absent, stale (version or parameter mismatch) or corrupt files; corrupt files warn on stderr
    std::optional<GreenTable> lookup(const CacheKey& key, std::shared_ptr<const Domain> omega,
                                     const std::vector<Element>& sources);
    void store(const CacheKey& key, const GreenTable& t);

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    std::string dir_;
    bool force_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

// killed_green_solve behind the cache; a null cache always solves
GreenTable cached_killed_green(GreenCache* cache, std::shared_ptr<const Domain> omega, const std::vector<Element>& sources,
                               const StepMeasure& mu, double tol);

}  // namespace greenlab
