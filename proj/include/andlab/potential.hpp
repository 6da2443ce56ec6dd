#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace andlab {

// Potential values on a finite region, with the frozen part kept separately.
class PotentialField {
public:
    PotentialField() = default;
    PotentialField(SiteSet region, std::vector<double> values, std::uint64_t seed = 0,
                   std::map<Site, int> frozen = {})
        : region_(std::move(region)), values_(std::move(values)), seed_(seed),
          frozen_(std::move(frozen)) {
        require(values_.size() == region_.size(), "one value per region site");
        for (double v : values_) require(v >= 0.0 && v <= 1.0, "potential values lie in [0, 1]");
    }

    static PotentialField constant(const SiteSet& region, double v) {
        return PotentialField(region, std::vector<double>(region.size(), v));
    }

    const SiteSet& region() const { return region_; }
    const std::vector<double>& values() const { return values_; }
    std::uint64_t seed() const { return seed_; }
    const std::map<Site, int>& frozen() const { return frozen_; }

    bool has(Site p) const { return region_.contains(p); }

    double operator()(Site p) const {
        const long i = region_.index_of(p);
        if (i < 0)
            throw MissingSite("potential undefined at (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ")");
        return values_[static_cast<std::size_t>(i)];
    }
    double at_index(std::size_t i) const { return values_[i]; }

    // Sites carrying the value 1.
    SiteSet ones() const {
        std::vector<Site> out;
        for (std::size_t i = 0; i < region_.size(); ++i)
            if (values_[i] == 1.0) out.push_back(region_[i]);
        return SiteSet::from_sorted(std::move(out));
    }

    friend bool operator==(const PotentialField&, const PotentialField&) = default;

private:
    SiteSet region_;
    std::vector<double> values_;
    std::uint64_t seed_ = 0;
    std::map<Site, int> frozen_;
};

// Bernoulli(1/2) value of a free site; a pure function of (seed, site).
inline int bernoulli_bit(std::uint64_t seed, Site p) {
    return static_cast<int>(hash_site(seed, p.x, p.y) >> 63);
}

inline PotentialField sample_potential(const SiteSet& region, std::uint64_t seed,
                                       const std::map<Site, int>& frozen = {}) {
    for (const auto& [p, v] : frozen) {
        if (v != 0 && v != 1) throw PreconditionError("frozen values must be 0 or 1");
        require(region.contains(p), "frozen sites must lie in the region");
    }
    std::vector<double> values(region.size());
    for (std::size_t i = 0; i < region.size(); ++i) {
        const Site p = region[i];
        auto it = frozen.find(p);
        values[i] = it != frozen.end() ? it->second : bernoulli_bit(seed, p);
    }
    return PotentialField(region, std::move(values), seed, frozen);
}

inline std::map<Site, int> freeze(const SiteSet& F, int value) {
    std::map<Site, int> out;
    for (const Site& p : F) out[p] = value;
    return out;
}

}  // namespace andlab
