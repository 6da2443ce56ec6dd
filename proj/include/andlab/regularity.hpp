#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace andlab {

enum class SearchMode { exact, greedy };

struct RegularityOptions {
    std::size_t exact_cap = 4096;       // largest |E| accepted in exact mode
    std::uint64_t node_budget = 20000000;
};

struct RegularityResult {
    long defect_area = 0;
    std::vector<TiltedRectangle> witness;  // disjoint non-sparse tilted squares inside E
    bool proven_optimal = false;           // exact mode finished within the node budget
    std::uint64_t nodes = 0;
    std::size_t candidates = 0;

    // Regular iff the optimum is at most delta |E|; greedy can only refute.
    bool certifies_irregular(double delta, std::size_t e_size) const {
        return static_cast<double>(defect_area) > delta * static_cast<double>(e_size);
    }
};

namespace detail {

struct TiltedCandidate {
    long s0, t0, n, area;
    TiltedRectangle rect() const { return tilted(s0, s0 + n - 1, t0, t0 + n - 1); }
};

// Every nonempty tilted square inside E in which F is not delta-sparse.
inline std::vector<TiltedCandidate> nonsparse_squares(const SiteSet& F, const SiteSet& E,
                                                      double delta) {
    std::vector<TiltedCandidate> out;
    if (E.empty()) return out;
    long smin = E[0].s(), smax = smin, tmin = E[0].t(), tmax = tmin;
    for (const Site& p : E) {
        smin = std::min<long>(smin, p.s());
        smax = std::max<long>(smax, p.s());
        tmin = std::min<long>(tmin, p.t());
        tmax = std::max<long>(tmax, p.t());
    }
    const long ns = smax - smin + 1, nt = tmax - tmin + 1;
    auto at = [nt](long i, long j) { return static_cast<std::size_t>(i * (nt + 1) + j); };
    // prefix sums of E membership on the (s, t) grid; per-diagonal prefix sums of F.
    std::vector<long> pe(static_cast<std::size_t>((ns + 1) * (nt + 1)), 0);
    std::vector<long> fs(pe.size(), 0), ft(static_cast<std::size_t>((nt + 1) * (ns + 1)), 0);
    std::vector<char> inE(static_cast<std::size_t>(ns * nt), 0), inF(inE.size(), 0);
    for (const Site& p : E) inE[static_cast<std::size_t>((p.s() - smin) * nt + (p.t() - tmin))] = 1;
    for (const Site& p : F)
        if (E.contains(p)) inF[static_cast<std::size_t>((p.s() - smin) * nt + (p.t() - tmin))] = 1;
    for (long i = 0; i < ns; ++i)
        for (long j = 0; j < nt; ++j) {
            const auto c = static_cast<std::size_t>(i * nt + j);
            pe[at(i + 1, j + 1)] = inE[c] + pe[at(i, j + 1)] + pe[at(i + 1, j)] - pe[at(i, j)];
            fs[at(i, j + 1)] = fs[at(i, j)] + inF[c];
        }
    auto atT = [ns](long j, long i) { return static_cast<std::size_t>(j * (ns + 1) + i); };
    for (long j = 0; j < nt; ++j)
        for (long i = 0; i < ns; ++i)
            ft[atT(j, i + 1)] = ft[atT(j, i)] + inF[static_cast<std::size_t>(i * nt + j)];

    for (long i0 = 0; i0 < ns; ++i0)
        for (long j0 = 0; j0 < nt; ++j0)
            for (long n = 1; i0 + n <= ns && j0 + n <= nt; ++n) {
                const long i1 = i0 + n, j1 = j0 + n;
                const TiltedRectangle r = tilted(smin + i0, smin + i1 - 1, tmin + j0, tmin + j1 - 1);
                const long want = tilted_count(r);
                const long have = pe[at(i1, j1)] - pe[at(i0, j1)] - pe[at(i1, j0)] + pe[at(i0, j0)];
                if (have < want) break;
                if (want == 0) continue;
                bool sparse = true;
                for (long i = i0; i < i1 && sparse; ++i) {
                    const long sz = count_parity(tmin + j0, tmin + j1 - 1, (smin + i) & 1);
                    const long cnt = fs[at(i, j1)] - fs[at(i, j0)];
                    if (sz > 0 && double(cnt) > delta * double(sz)) sparse = false;
                }
                for (long j = j0; j < j1 && sparse; ++j) {
                    const long sz = count_parity(smin + i0, smin + i1 - 1, (tmin + j) & 1);
                    const long cnt = ft[atT(j, i1)] - ft[atT(j, i0)];
                    if (sz > 0 && double(cnt) > delta * double(sz)) sparse = false;
                }
                if (!sparse) out.push_back({smin + i0, tmin + j0, n, want});
            }
    return out;
}

}  // namespace detail

inline RegularityResult regularity_defect(const SiteSet& F, const SiteSet& E, double delta,
                                          SearchMode mode, const RegularityOptions& opt = {}) {
    require(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
    if (mode == SearchMode::exact && E.size() > opt.exact_cap)
        throw PreconditionError("exact regularity search limited to " +
                                std::to_string(opt.exact_cap) + " sites");
    auto cands = detail::nonsparse_squares(F, E, delta);
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        if (a.area != b.area) return a.area > b.area;
        if (a.s0 != b.s0) return a.s0 < b.s0;
        if (a.t0 != b.t0) return a.t0 < b.t0;
        return a.n < b.n;
    });
    RegularityResult res;
    res.candidates = cands.size();

    std::vector<std::vector<std::size_t>> members(cands.size());
    auto sites_of = [&](std::size_t c) -> const std::vector<std::size_t>& {
        if (members[c].empty())
            for (const Site& p : tilted_sites(cands[c].rect()))
                members[c].push_back(static_cast<std::size_t>(E.index_of(p)));
        return members[c];
    };

    // Greedy: largest first, keep if disjoint from everything kept so far.
    std::vector<char> used(E.size(), 0);
    std::vector<std::size_t> greedy;
    for (std::size_t c = 0; c < cands.size(); ++c) {
        if (cands[c].area > static_cast<long>(E.size()) - res.defect_area) continue;
        const auto& ms = sites_of(c);
        if (std::any_of(ms.begin(), ms.end(), [&](std::size_t i) { return used[i] != 0; })) {
            if (mode == SearchMode::greedy) members[c].clear();
            continue;
        }
        for (std::size_t i : ms) used[i] = 1;
        greedy.push_back(c);
        res.defect_area += cands[c].area;
    }
    for (std::size_t c : greedy) res.witness.push_back(cands[c].rect());
    if (mode == SearchMode::greedy) return res;

    // Exact: branch on the first free site that some candidate could still cover.
    std::vector<std::vector<std::size_t>> by_site(E.size());
    for (std::size_t c = 0; c < cands.size(); ++c)
        for (std::size_t i : sites_of(c)) by_site[i].push_back(c);
    std::vector<char> avail(E.size(), 0);
    long coverable = 0;
    for (std::size_t i = 0; i < E.size(); ++i)
        if (!by_site[i].empty()) avail[i] = 1, ++coverable;

    long best = res.defect_area;
    std::vector<std::size_t> chosen, best_set = greedy;
    bool budget_hit = false;
    auto fits = [&](std::size_t c) {
        for (std::size_t i : members[c])
            if (!avail[i]) return false;
        return true;
    };
    auto rec = [&](auto&& self, std::size_t start, long current, long remaining) -> void {
        if (++res.nodes > opt.node_budget) {
            budget_hit = true;
            return;
        }
        if (current > best) best = current, best_set = chosen;
        if (current + remaining <= best) return;
        std::size_t p = start;
        while (p < E.size() && !avail[p]) ++p;
        if (p == E.size()) return;
        for (std::size_t c : by_site[p]) {
            if (budget_hit) return;
            if (!fits(c)) continue;
            for (std::size_t i : members[c]) avail[i] = 0;
            chosen.push_back(c);
            self(self, p + 1, current + cands[c].area, remaining - cands[c].area);
            chosen.pop_back();
            for (std::size_t i : members[c]) avail[i] = 1;
        }
        if (budget_hit) return;
        avail[p] = 0;
        self(self, p + 1, current, remaining - 1);
        avail[p] = 1;
    };
    rec(rec, 0, 0, coverable);
    res.defect_area = best;
    res.proven_optimal = !budget_hit;
    res.witness.clear();
    for (std::size_t c : best_set) res.witness.push_back(cands[c].rect());
    return res;
}

}  // namespace andlab
