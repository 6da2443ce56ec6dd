#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace andlab {

using Mask = std::uint32_t;

struct SetFamily {
    int n = 0;
    std::vector<Mask> members;
    std::optional<std::vector<Mask>> witness;  // witness[i] = B(members[i])

    void validate() const {
        require(n >= 0 && n <= 24, "ground set size must be at most 24");
        const Mask full = n == 32 ? ~Mask(0) : ((Mask(1) << n) - 1);
        std::vector<Mask> sorted = members;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "family members must be distinct");
        for (Mask m : members) require((m & ~full) == 0, "member outside the ground set");
        if (witness) {
            require(witness->size() == members.size(), "one witness per member");
            for (std::size_t i = 0; i < members.size(); ++i)
                require(((*witness)[i] & members[i]) == 0 && ((*witness)[i] & ~full) == 0,
                        "witness must be disjoint from its member");
        }
    }
};

inline Mask full_mask(int n) { return n >= 32 ? ~Mask(0) : ((Mask(1) << n) - 1); }
inline int popcount(Mask m) { return std::popcount(m); }

// Smallest integer size allowed for B(A) when |A| = k.
inline int min_witness_size(int n, int k, double rho) {
    return int(std::ceil(rho * double(n - k) - 1e-12));
}

inline bool is_rho_sperner(const SetFamily& fam, double rho) {
    require(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    if (!fam.witness) throw PreconditionError("is_rho_sperner needs a witness map");
    fam.validate();
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        const Mask A = fam.members[i], B = (*fam.witness)[i];
        if (popcount(B) < min_witness_size(fam.n, popcount(A), rho)) return false;
        for (Mask Ap : fam.members)
            if ((A & ~Ap) == 0 && (Ap & B) != 0) return false;
    }
    return true;
}

// The largest possible witness: everything outside the members containing A.
inline SetFamily with_canonical_witness(SetFamily fam) {
    std::vector<Mask> w(fam.members.size());
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
        Mask u = fam.members[i];
        for (Mask Ap : fam.members)
            if ((fam.members[i] & ~Ap) == 0) u |= Ap;
        w[i] = full_mask(fam.n) & ~u;
    }
    fam.witness = std::move(w);
    return fam;
}

// Whether some witness makes the family rho-Sperner (the canonical one is optimal).
inline bool admits_witness(const SetFamily& fam, double rho) {
    SetFamily f = fam;
    f.witness.reset();
    return is_rho_sperner(with_canonical_witness(std::move(f)), rho);
}

inline double sperner_bound(int n, double rho) {
    require(n >= 1 && rho > 0.0 && rho <= 1.0, "sperner_bound needs n >= 1 and 0 < rho <= 1");
    return std::ldexp(1.0, n) / std::sqrt(double(n)) / rho;
}

// Symmetric chain decomposition of the subsets of {0..n-1} (de Bruijn's construction).
inline std::vector<std::vector<Mask>> symmetric_chains(int n) {
    std::vector<std::vector<Mask>> chains{{0}};
    for (int e = 0; e < n; ++e) {
        std::vector<std::vector<Mask>> next;
        const Mask bit = Mask(1) << e;
        for (const auto& c : chains) {
            std::vector<Mask> up = c;
            up.push_back(c.back() | bit);
            next.push_back(std::move(up));
            if (c.size() > 1) {
                std::vector<Mask> side;
                for (std::size_t i = 0; i + 1 < c.size(); ++i) side.push_back(c[i] | bit);
                next.push_back(std::move(side));
            }
        }
        chains = std::move(next);
    }
    return chains;
}

struct MaxFamilyOptions {
    std::uint64_t node_budget = 500000000;
    // Stop as soon as a family larger than this is found; prune branches that cannot exceed it.
    std::optional<long> threshold;
};

struct MaxFamilyResult {
    long size = 0;            // best family found
    SetFamily example;
    bool proven = false;      // search completed: size is the maximum (or, with a threshold, the maximum is <= threshold when size <= threshold)
    std::uint64_t nodes = 0;
};

namespace detail {

// Branch and bound over the subfamilies of a fixed collection of sets, in
// decreasing size. When a set is decided all its supersets in the collection
// are already decided, so the canonical witness condition for it is final.
// The bound adds, per chain of the supplied partition, the most undecided
// members the chain could still take.
class FamilySearch {
public:
    // chains: a partition of `sets` into chains, each listed by increasing size
    FamilySearch(int n, double rho, std::vector<Mask> sets, const std::vector<std::vector<Mask>>& chains)
        : n_(n), sets_(std::move(sets)) {
        std::stable_sort(sets_.begin(), sets_.end(), [](Mask a, Mask b) { return popcount(a) > popcount(b); });
        const std::size_t N = sets_.size();
        std::unordered_map<Mask, int> where;
        for (std::size_t i = 0; i < N; ++i) where.emplace(sets_[i], int(i));
        require(where.size() == N, "search sets must be distinct");
        need_.resize(std::size_t(n) + 1);
        for (int k = 0; k <= n; ++k) need_[std::size_t(k)] = min_witness_size(n, k, rho);
        chain_of_.assign(N, -1);
        for (const auto& c : chains) {
            std::vector<int> idx;
            for (Mask m : c) {
                const auto it = where.find(m);
                require(it != where.end(), "chain member outside the search sets");
                require(idx.empty() || (sets_[std::size_t(idx.back())] & ~m) == 0, "chain must increase");
                require(chain_of_[std::size_t(it->second)] < 0, "chains must be disjoint");
                chain_of_[std::size_t(it->second)] = int(chains_.size());
                idx.push_back(it->second);
            }
            chains_.push_back(std::move(idx));
        }
        for (int c : chain_of_) require(c >= 0, "chains must cover the search sets");
        // proper subsets of each set that come later in the order
        subs_.resize(N);
        const bool full = N == (std::size_t(1) << n);
        for (std::size_t i = 0; i < N; ++i) {
            const Mask a = sets_[i];
            if (full) {
                for (Mask s = (a - 1) & a;; s = (s - 1) & a) {
                    subs_[i].push_back(where[s]);
                    if (s == 0) break;
                }
                if (a == 0) subs_[i].clear();
            } else {
                for (std::size_t j = i + 1; j < N; ++j)
                    if (sets_[j] != a && (sets_[j] & ~a) == 0) subs_[i].push_back(int(j));
            }
        }
    }

    MaxFamilyResult run(const MaxFamilyOptions& opt, std::vector<Mask> incumbent = {}) {
        const std::size_t N = sets_.size();
        U_ = sets_;
        decided_.assign(N, 0);
        cap_.assign(chains_.size(), 0);
        cap_total_ = 0;
        for (std::size_t c = 0; c < chains_.size(); ++c) cap_total_ += cap_[c] = chain_capacity(c);
        is_pending_.assign(chains_.size(), 0);
        res_ = {};
        res_.example.n = n_;
        res_.size = long(incumbent.size());
        res_.example.members = std::move(incumbent);
        opt_ = &opt;
        stop_ = false;
        current_ = 0;
        if (opt.threshold && res_.size > *opt.threshold) stop_ = true;
        else rec(0);
        res_.proven = !stop_ || (opt.threshold && res_.size > *opt.threshold);
        res_.example = with_canonical_witness(res_.example);
        return res_;
    }

private:
    bool ok(std::size_t i, Mask extra) const {
        return n_ - popcount(U_[i] | extra) >= need_[std::size_t(popcount(sets_[i]))];
    }

    long chain_capacity(std::size_t ci) const {
        const auto& c = chains_[ci];
        // undecided members form a prefix of the chain
        std::size_t q = 0;
        while (q < c.size() && !decided_[std::size_t(c[q])]) ++q;
        long best = 0;
        for (std::size_t h = q; h-- > 0;) {
            if (long(h) + 1 <= best) break;
            const auto top = std::size_t(c[h]);
            if (!ok(top, 0)) continue;
            long cnt = 1;
            for (std::size_t i = 0; i < h; ++i) cnt += ok(std::size_t(c[i]), sets_[top]) ? 1 : 0;
            best = std::max(best, cnt);
        }
        return best;
    }

    // cached chain capacities are refreshed lazily and restored on backtracking
    void touch(std::size_t i) {
        const int c = chain_of_[i];
        if (!is_pending_[std::size_t(c)]) is_pending_[std::size_t(c)] = 1, pending_.push_back(c);
    }
    void refresh() {
        for (int c : pending_) {
            is_pending_[std::size_t(c)] = 0;
            const long v = chain_capacity(std::size_t(c));
            if (v != cap_[std::size_t(c)]) {
                cap_undo_.emplace_back(c, cap_[std::size_t(c)]);
                cap_total_ += v - cap_[std::size_t(c)];
                cap_[std::size_t(c)] = v;
            }
        }
        pending_.clear();
    }
    void rewind(std::size_t mark) {
        for (int c : pending_) is_pending_[std::size_t(c)] = 0;
        pending_.clear();
        while (cap_undo_.size() > mark) {
            const auto [c, v] = cap_undo_.back();
            cap_total_ += v - cap_[std::size_t(c)];
            cap_[std::size_t(c)] = v;
            cap_undo_.pop_back();
        }
    }

    void rec(std::size_t idx) {
        const std::size_t N = sets_.size();
        if (stop_) return;
        if (++res_.nodes > opt_->node_budget) {
            stop_ = true;
            return;
        }
        if (current_ > res_.size) {
            res_.size = current_;
            res_.example.members = chosen_;
            if (opt_->threshold && current_ > *opt_->threshold) {
                stop_ = true;
                return;
            }
        }
        const std::size_t cap_mark = cap_undo_.size();
        // sets that can no longer be included are excluded without branching
        const std::size_t first = idx;
        while (idx < N && !ok(idx, 0)) {
            decided_[idx] = 1;
            touch(idx++);
        }
        auto release = [&] {
            for (std::size_t k = first; k < idx; ++k) decided_[k] = 0;
            rewind(cap_mark);
        };
        if (idx == N) return release();
        refresh();
        const long limit = opt_->threshold ? *opt_->threshold : res_.size;
        if (current_ + cap_total_ <= limit) return release();
        const Mask a = sets_[idx];
        {
            const std::size_t mark = undo_.size(), inner = cap_undo_.size();
            decided_[idx] = 1;
            touch(idx);
            for (int j : subs_[idx]) {
                const auto sj = std::size_t(j);
                if (!decided_[sj] && (U_[sj] | a) != U_[sj]) {
                    undo_.emplace_back(sj, U_[sj]);
                    U_[sj] |= a;
                    touch(sj);
                }
            }
            ++current_;
            chosen_.push_back(a);
            rec(idx + 1);
            chosen_.pop_back();
            --current_;
            while (undo_.size() > mark) {
                U_[undo_.back().first] = undo_.back().second;
                undo_.pop_back();
            }
            rewind(inner);
        }
        if (!stop_) {
            touch(idx);
            rec(idx + 1);
        }
        decided_[idx] = 0;
        release();
    }

    int n_;
    std::vector<Mask> sets_;
    std::vector<int> need_, chain_of_;
    std::vector<std::vector<int>> chains_, subs_;
    std::vector<Mask> U_;  // a set plus every included superset of it
    std::vector<char> decided_, is_pending_;
    std::vector<std::pair<std::size_t, Mask>> undo_;
    std::vector<long> cap_;
    long cap_total_ = 0;
    std::vector<int> pending_;
    std::vector<std::pair<int, long>> cap_undo_;
    MaxFamilyResult res_;
    const MaxFamilyOptions* opt_ = nullptr;
    long current_ = 0;
    std::vector<Mask> chosen_;
    bool stop_ = false;
};

inline std::vector<Mask> middle_layer(int n) {
    std::vector<Mask> out;
    for (Mask a = 0; a < (Mask(1) << n); ++a)
        if (popcount(a) == n / 2) out.push_back(a);
    return out;
}

}  // namespace detail

// Exact maximum over all families on {0..n-1}, seeded with the middle layer
// (an antichain, hence rho-Sperner for every rho).
inline MaxFamilyResult exhaustive_max_family(int n, double rho, const MaxFamilyOptions& opt = {}) {
    require(n >= 1 && n <= 12, "exhaustive search limited to n <= 12");
    require(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    std::vector<Mask> all(std::size_t(1) << n);
    std::iota(all.begin(), all.end(), Mask(0));
    detail::FamilySearch search(n, rho, std::move(all), symmetric_chains(n));
    return search.run(opt, detail::middle_layer(n));
}

struct PieceBound {
    long bound = 0;            // sum of exact piece maxima, valid for every family
    int cube_dim = 0;
    std::vector<long> piece_max;  // indexed by the start level of the base chain
    std::vector<long> piece_count;
    std::uint64_t nodes = 0;
    bool proven = false;       // every piece search completed
};

// Upper bound on the size of any rho-Sperner family. The lattice splits into
// pieces C x 2^T, with C a symmetric chain on the first n - t points and T the
// last t points. A family's trace on a piece is again rho-Sperner, so the
// piece maxima add up to a bound. Pieces whose chains start on the same level
// are isomorphic, so one search per level suffices. t = n is the plain search.
inline PieceBound piece_decomposition_bound(int n, double rho, int t, const MaxFamilyOptions& opt = {}) {
    require(n >= 1 && n <= 12, "exhaustive search limited to n <= 12");
    require(t >= 0 && t <= n, "cube dimension must lie in [0, n]");
    require(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    const int m = n - t;
    PieceBound out;
    out.cube_dim = t;
    out.proven = true;
    out.piece_max.assign(std::size_t(m / 2) + 1, 0);
    out.piece_count.assign(std::size_t(m / 2) + 1, 0);
    std::vector<const std::vector<Mask>*> rep(std::size_t(m / 2) + 1, nullptr);
    const auto base = symmetric_chains(m);
    for (const auto& c : base) {
        const auto j = std::size_t(popcount(c.front()));
        ++out.piece_count[j];
        if (!rep[j]) rep[j] = &c;
    }
    for (std::size_t j = 0; j < rep.size(); ++j) {
        if (!rep[j]) continue;
        std::vector<Mask> sets;
        std::vector<std::vector<Mask>> chains;
        for (Mask T = 0; T < (Mask(1) << t); ++T) {
            std::vector<Mask> ch;
            for (Mask x : *rep[j]) ch.push_back(x | (T << m));
            sets.insert(sets.end(), ch.begin(), ch.end());
            chains.push_back(std::move(ch));
        }
        detail::FamilySearch search(n, rho, std::move(sets), chains);
        const auto r = search.run(opt);
        out.piece_max[j] = r.size;
        out.nodes += r.nodes;
        out.proven = out.proven && r.proven;
        out.bound += r.size * out.piece_count[j];
    }
    return out;
}

// Smallest cube dimension whose piece bound stays within limit (default: the
// integer part of sperner_bound). The last entry is t = n, the exact maximum,
// when no smaller dimension suffices.
inline PieceBound certify_family_limit(int n, double rho, std::optional<long> limit = std::nullopt,
                                       const MaxFamilyOptions& opt = {}) {
    const long lim = limit.value_or(long(std::floor(sperner_bound(n, rho))));
    PieceBound pb;
    for (int t = 0; t <= n; ++t) {
        pb = piece_decomposition_bound(n, rho, t, opt);
        if (pb.proven && pb.bound <= lim) break;
    }
    return pb;
}

struct TailRow {
    int j = 0;
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double bound = 0.0;  // (1 - rho)^j
    double sigma = 0.0;
    bool ok = true;      // estimate <= bound + 3 sigma
};

// Number of members on the maximal chain built from the permutation perm.
inline int chain_hits(const std::unordered_set<Mask>& members, const std::vector<int>& perm) {
    Mask prefix = 0;
    int hits = members.count(0) ? 1 : 0;
    for (int e : perm) {
        prefix |= Mask(1) << e;
        hits += members.count(prefix) ? 1 : 0;
    }
    return hits;
}

// Monte Carlo estimate of P[|A_sigma| >= j + 1] for uniform permutations sigma.
inline std::vector<TailRow> lubell_chain_statistic(const SetFamily& fam, double rho, std::uint64_t samples,
                                                   std::uint64_t seed) {
    require(samples > 0, "samples must be positive");
    if (!is_rho_sperner(fam.witness ? fam : with_canonical_witness(fam), rho))
        throw PreconditionError("family is not rho-Sperner");
    const std::unordered_set<Mask> members(fam.members.begin(), fam.members.end());
    constexpr std::uint64_t block = 4096;
    const std::uint64_t blocks = (samples + block - 1) / block;
    std::vector<std::vector<std::uint64_t>> counts(blocks, std::vector<std::uint64_t>(std::size_t(fam.n) + 2, 0));
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(hash_combine(seed, b));
        std::vector<int> perm(std::size_t(fam.n));
        const std::uint64_t lo = b * block, hi = std::min(samples, lo + block);
        for (std::uint64_t s = lo; s < hi; ++s) {
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = fam.n - 1; i > 0; --i) std::swap(perm[std::size_t(i)], perm[std::size_t(rng.integer(0, i))]);
            ++counts[b][std::size_t(chain_hits(members, perm))];
        }
    });
    std::vector<std::uint64_t> hist(std::size_t(fam.n) + 2, 0);
    for (const auto& c : counts)
        for (std::size_t i = 0; i < c.size(); ++i) hist[i] += c[i];
    std::vector<TailRow> rows;
    for (int j = 0; j <= fam.n; ++j) {
        std::uint64_t tail = 0;
        for (std::size_t h = std::size_t(j) + 1; h < hist.size(); ++h) tail += hist[h];
        const auto w = wilson(tail, samples);
        TailRow r;
        r.j = j;
        r.estimate = w.estimate;
        r.lo = w.lo;
        r.hi = w.hi;
        r.bound = std::pow(1.0 - rho, j);
        r.sigma = std::sqrt(w.estimate * (1.0 - w.estimate) / double(samples));
        r.ok = r.estimate <= r.bound + 3.0 * r.sigma;
        rows.push_back(r);
    }
    return rows;
}

// A random family grown greedily under the canonical witness. Each candidate is
// checked against the running unions, so an attempt costs O(|family|).
inline SetFamily random_rho_sperner_family(int n, double rho, int attempts, Rng& rng, double density = 0.5) {
    require(n >= 1 && n <= 24, "ground set size must lie in [1, 24]");
    require(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    SetFamily fam;
    fam.n = n;
    std::vector<Mask> U;  // member plus every member containing it
    std::unordered_set<Mask> have;
    auto fits = [&](Mask a, Mask u) { return n - popcount(u) >= min_witness_size(n, popcount(a), rho); };
    for (int t = 0; t < attempts; ++t) {
        Mask x = 0;
        const double p = rng.uniform(0.2, 0.8) * density * 2.0;
        for (int e = 0; e < n; ++e)
            if (rng.uniform() < p) x |= Mask(1) << e;
        if (have.count(x)) continue;
        Mask ux = x;
        bool good = true;
        for (std::size_t i = 0; i < fam.members.size() && good; ++i) {
            const Mask a = fam.members[i];
            if ((x & ~a) == 0) ux |= a;
            if ((a & ~x) == 0) good = fits(a, U[i] | x);
        }
        if (!good || !fits(x, ux)) continue;
        for (std::size_t i = 0; i < fam.members.size(); ++i)
            if ((fam.members[i] & ~x) == 0) U[i] |= x;
        fam.members.push_back(x);
        U.push_back(ux);
        have.insert(x);
    }
    return with_canonical_witness(std::move(fam));
}

}  // namespace andlab
