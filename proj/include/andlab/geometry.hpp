#pragma once

#include <algorithm>
#include <bit>
#include <iterator>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace andlab {

struct Site {
    int x = 0;
    int y = 0;

    int s() const { return x + y; }
    int t() const { return x - y; }

    // Inverse of (s, t); requires s - t even.
    static Site from_st(int s, int t) {
        require(((s - t) & 1) == 0, "tilted coordinates need s - t even");
        return Site{(s + t) / 2, (s - t) / 2};
    }

    friend constexpr bool operator==(Site, Site) = default;
    // Row-major by (y, x).
    friend constexpr std::strong_ordering operator<=>(Site a, Site b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
};

inline Site operator+(Site a, Site b) { return {a.x + b.x, a.y + b.y}; }
inline Site operator-(Site a, Site b) { return {a.x - b.x, a.y - b.y}; }

inline constexpr Site kNeighbourOffsets[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

inline double distance(Site a, Site b) {
    return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}
inline long long distance_sq(Site a, Site b) {
    const long long dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}
inline int l1_distance(Site a, Site b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }
inline bool adjacent(Site a, Site b) { return l1_distance(a, b) == 1; }

// Finite set of sites kept sorted in row-major (y, x) order.
class SiteSet {
public:
    SiteSet() = default;
    explicit SiteSet(std::vector<Site> sites) : sites_(std::move(sites)) {
        std::sort(sites_.begin(), sites_.end());
        sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
    }
    SiteSet(std::initializer_list<Site> sites) : SiteSet(std::vector<Site>(sites)) {}

    std::size_t size() const { return sites_.size(); }
    bool empty() const { return sites_.empty(); }
    const Site& operator[](std::size_t i) const { return sites_[i]; }
    auto begin() const { return sites_.begin(); }
    auto end() const { return sites_.end(); }
    const std::vector<Site>& sites() const { return sites_; }

    bool contains(Site p) const { return std::binary_search(sites_.begin(), sites_.end(), p); }

    // Position of p in the ordering, or -1.
    long index_of(Site p) const {
        auto it = std::lower_bound(sites_.begin(), sites_.end(), p);
        if (it == sites_.end() || *it != p) return -1;
        return static_cast<long>(it - sites_.begin());
    }

    bool subset_of(const SiteSet& other) const {
        return std::includes(other.begin(), other.end(), begin(), end());
    }

    friend SiteSet set_union(const SiteSet& a, const SiteSet& b) {
        std::vector<Site> out;
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return from_sorted(std::move(out));
    }
    friend SiteSet set_difference(const SiteSet& a, const SiteSet& b) {
        std::vector<Site> out;
        std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return from_sorted(std::move(out));
    }
    friend SiteSet set_intersection(const SiteSet& a, const SiteSet& b) {
        std::vector<Site> out;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return from_sorted(std::move(out));
    }

    friend bool operator==(const SiteSet&, const SiteSet&) = default;

    static SiteSet from_sorted(std::vector<Site> sorted) {
        SiteSet s;
        s.sites_ = std::move(sorted);
        return s;
    }

private:
    std::vector<Site> sites_;
};

// Axis-parallel square with side 2^log2_side; the corner is its minimal site.
struct DyadicSquare {
    Site corner{};
    int log2_side = 0;

    int side() const { return 1 << log2_side; }
    long long area() const { return static_cast<long long>(side()) * side(); }

    bool contains(Site p) const {
        return p.x >= corner.x && p.x < corner.x + side() && p.y >= corner.y &&
               p.y < corner.y + side();
    }
    bool contains(const DyadicSquare& q) const {
        return q.corner.x >= corner.x && q.corner.y >= corner.y &&
               q.corner.x + q.side() <= corner.x + side() &&
               q.corner.y + q.side() <= corner.y + side();
    }
    bool intersects(const DyadicSquare& q) const {
        return q.corner.x < corner.x + side() && corner.x < q.corner.x + q.side() &&
               q.corner.y < corner.y + side() && corner.y < q.corner.y + q.side();
    }

    // Corner coordinates divisible by side/2.
    bool half_aligned() const {
        const int h = std::max(1, side() / 2);
        auto div = [h](int v) { return ((v % h) + h) % h == 0; };
        return div(corner.x) && div(corner.y);
    }

    // Concentric square of half the side. For side 2 the corner stays put.
    DyadicSquare halved() const {
        require(log2_side >= 1, "cannot halve a unit square");
        const int q = side() / 4;
        return {{corner.x + q, corner.y + q}, log2_side - 1};
    }
    DyadicSquare doubled() const {
        const int h = side() / 2;
        return {{corner.x - h, corner.y - h}, log2_side + 1};
    }

    SiteSet sites() const {
        std::vector<Site> out;
        out.reserve(static_cast<std::size_t>(area()));
        for (int y = corner.y; y < corner.y + side(); ++y)
            for (int x = corner.x; x < corner.x + side(); ++x) out.push_back({x, y});
        return SiteSet::from_sorted(std::move(out));
    }

    // Euclidean distance from p to the nearest site of the square.
    double distance_to(Site p) const {
        const int cx = std::clamp(p.x, corner.x, corner.x + side() - 1);
        const int cy = std::clamp(p.y, corner.y, corner.y + side() - 1);
        return distance(p, {cx, cy});
    }

    friend bool operator==(const DyadicSquare&, const DyadicSquare&) = default;
};

inline DyadicSquare square_at(int x0, int y0, int side) {
    require(side >= 1 && (side & (side - 1)) == 0, "square side must be a power of two");
    return {{x0, y0}, std::countr_zero(static_cast<unsigned>(side))};
}

// Sites of the w-by-h box with minimal corner (x0, y0), any side lengths.
inline SiteSet box_sites(int x0, int y0, int w, int h) {
    std::vector<Site> out;
    out.reserve(std::size_t(std::max(0, w)) * std::size_t(std::max(0, h)));
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) out.push_back({x, y});
    return SiteSet::from_sorted(std::move(out));
}

// Closed integer interval [lo, hi]; lo > hi is empty. `bounded == false` means all of Z.
struct Interval {
    long lo = 1;
    long hi = 0;
    bool bounded = true;

    static Interval all() { return {0, -1, false}; }
    bool empty() const { return bounded && lo > hi; }
    long size() const { return (!bounded || lo > hi) ? 0 : hi - lo + 1; }
    bool contains(long v) const { return !bounded || (v >= lo && v <= hi); }
    friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval intersect(const Interval& a, const Interval& b) {
    if (!a.bounded) return b;
    if (!b.bounded) return a;
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi), true};
}

enum class Sign { plus, minus };
enum class SignSelection { plus, minus, both };

// {x : s(x) in I, t(x) in J} with s = x + y, t = x - y.
struct TiltedRectangle {
    Interval s_interval;
    Interval t_interval;

    bool bounded() const { return s_interval.bounded && t_interval.bounded; }
    bool is_square() const { return bounded() && s_interval.size() == t_interval.size(); }
    bool contains(Site p) const { return s_interval.contains(p.s()) && t_interval.contains(p.t()); }
    friend bool operator==(const TiltedRectangle&, const TiltedRectangle&) = default;
};

inline TiltedRectangle tilted(long s0, long s1, long t0, long t1) {
    return {{s0, s1, true}, {t0, t1, true}};
}

// Number of v in [lo, hi] with v = parity (mod 2).
inline long count_parity(long lo, long hi, long parity) {
    if (lo > hi) return 0;
    const long first = lo + (((parity - lo) % 2) + 2) % 2;
    return first > hi ? 0 : (hi - first) / 2 + 1;
}

inline long tilted_count(const TiltedRectangle& r) {
    require(r.bounded(), "region must be bounded");
    const long even_s = count_parity(r.s_interval.lo, r.s_interval.hi, 0);
    const long odd_s = r.s_interval.size() - even_s;
    return even_s * count_parity(r.t_interval.lo, r.t_interval.hi, 0) +
           odd_s * count_parity(r.t_interval.lo, r.t_interval.hi, 1);
}

inline SiteSet tilted_sites(const TiltedRectangle& r) {
    require(r.bounded(), "region must be bounded");
    std::vector<Site> out;
    for (long s = r.s_interval.lo; s <= r.s_interval.hi; ++s) {
        const long t0 = r.t_interval.lo + (((s - r.t_interval.lo) % 2) + 2) % 2;
        for (long t = t0; t <= r.t_interval.hi; t += 2)
            out.push_back(Site::from_st(static_cast<int>(s), static_cast<int>(t)));
    }
    return SiteSet(std::move(out));
}

// D_k^+ = {s = k}, D_k^- = {t = k}, intersected with R.
inline SiteSet diagonal_slice(const TiltedRectangle& r, long k, Sign sign) {
    require(r.bounded(), "region must be bounded");
    std::vector<Site> out;
    if (sign == Sign::plus) {
        if (!r.s_interval.contains(k)) return {};
        for (long t = r.t_interval.lo; t <= r.t_interval.hi; ++t)
            if (((k - t) & 1) == 0) out.push_back(Site::from_st(int(k), int(t)));
    } else {
        if (!r.t_interval.contains(k)) return {};
        for (long s = r.s_interval.lo; s <= r.s_interval.hi; ++s)
            if (((s - k) & 1) == 0) out.push_back(Site::from_st(int(s), int(k)));
    }
    return SiteSet(std::move(out));
}

inline long diagonal_size(const TiltedRectangle& r, long k, Sign sign) {
    if (sign == Sign::plus)
        return r.s_interval.contains(k) ? count_parity(r.t_interval.lo, r.t_interval.hi, k & 1) : 0;
    return r.t_interval.contains(k) ? count_parity(r.s_interval.lo, r.s_interval.hi, k & 1) : 0;
}

struct SparsityVerdict {
    bool sparse_plus = true;
    bool sparse_minus = true;
    long worst_k = 0;
    Sign worst_sign = Sign::plus;
    double worst_ratio = 0.0;

    bool sparse(SignSelection sel) const {
        switch (sel) {
            case SignSelection::plus: return sparse_plus;
            case SignSelection::minus: return sparse_minus;
            default: return sparse_plus && sparse_minus;
        }
    }
};

// Diagonal-wise density of F inside R. worst_* refer to the selected signs.
inline SparsityVerdict check_sparse(const SiteSet& F, const TiltedRectangle& r, double delta,
                                    SignSelection sel = SignSelection::both) {
    require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
    require(r.bounded(), "region must be bounded");
    SparsityVerdict v;
    const long ns = r.s_interval.size(), nt = r.t_interval.size();
    std::vector<long> cs(static_cast<std::size_t>(ns), 0), ct(static_cast<std::size_t>(nt), 0);
    for (const Site& p : F) {
        if (!r.contains(p)) continue;
        ++cs[static_cast<std::size_t>(p.s() - r.s_interval.lo)];
        ++ct[static_cast<std::size_t>(p.t() - r.t_interval.lo)];
    }
    bool first = true;
    auto scan = [&](Sign sign, const std::vector<long>& counts, long lo, bool& flag, bool track) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const long k = lo + static_cast<long>(i);
            const long n = diagonal_size(r, k, sign);
            if (n == 0) continue;
            if (static_cast<double>(counts[i]) > delta * static_cast<double>(n)) flag = false;
            const double ratio = static_cast<double>(counts[i]) / static_cast<double>(n);
            if (track && (first || ratio > v.worst_ratio)) {
                v.worst_ratio = ratio;
                v.worst_k = k;
                v.worst_sign = sign;
                first = false;
            }
        }
    };
    scan(Sign::plus, cs, r.s_interval.lo, v.sparse_plus, sel != SignSelection::minus);
    scan(Sign::minus, ct, r.t_interval.lo, v.sparse_minus, sel != SignSelection::plus);
    return v;
}

}  // namespace andlab
