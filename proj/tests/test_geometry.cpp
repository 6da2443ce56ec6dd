#include <gtest/gtest.h>

#include <andlab/geometry.hpp>
#include <andlab/potential.hpp>
#include <andlab/regularity.hpp>
#include <andlab/rng.hpp>

#include <functional>

using namespace andlab;

namespace {

// Brute force over a box in (x, y).
SiteSet tilted_brute(const TiltedRectangle& r) {
    std::vector<Site> out;
    for (int x = -200; x <= 200; ++x)
        for (int y = -200; y <= 200; ++y) {
            const long s = x + y, t = x - y;
            if (s >= r.s_interval.lo && s <= r.s_interval.hi && t >= r.t_interval.lo &&
                t <= r.t_interval.hi)
                out.push_back({x, y});
        }
    return SiteSet(out);
}

}  // namespace

TEST(Tilted, SingleSite) {
    const auto s = tilted_sites(tilted(1, 1, 1, 1));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], (Site{1, 0}));
}

TEST(Tilted, FourByFourHasEightSites) {
    EXPECT_EQ(tilted_sites(tilted(1, 4, 1, 4)).size(), 8u);
    EXPECT_EQ(tilted_count(tilted(1, 4, 1, 4)), 8);
}

TEST(Tilted, ParityIncompatibleIsEmpty) {
    EXPECT_TRUE(tilted_sites(tilted(2, 2, 1, 1)).empty());
    EXPECT_TRUE(tilted_sites(tilted(3, 1, 0, 5)).empty());
}

TEST(Tilted, MatchesBruteForceAndClosedForm) {
    Rng rng(11);
    for (int it = 0; it < 60; ++it) {
        const long s0 = rng.integer(-20, 20), t0 = rng.integer(-20, 20);
        const auto r = tilted(s0, s0 + rng.integer(0, 63), t0, t0 + rng.integer(0, 63));
        const auto s = tilted_sites(r);
        EXPECT_EQ(s, tilted_brute(r));
        for (const Site& p : s) EXPECT_EQ(((p.s() - p.t()) % 2 + 2) % 2, 0);
        long expect = 0;
        for (long a = r.s_interval.lo; a <= r.s_interval.hi; ++a)
            for (long b = r.t_interval.lo; b <= r.t_interval.hi; ++b) expect += ((a - b) % 2 == 0);
        EXPECT_EQ(long(s.size()), expect);
        EXPECT_EQ(tilted_count(r), expect);
    }
}

TEST(Tilted, FromStRoundTrip) {
    for (int s = -5; s <= 5; ++s)
        for (int t = -5; t <= 5; ++t) {
            if ((s - t) % 2) {
                EXPECT_THROW(Site::from_st(s, t), PreconditionError);
                continue;
            }
            const Site p = Site::from_st(s, t);
            EXPECT_EQ(p.s(), s);
            EXPECT_EQ(p.t(), t);
        }
}

TEST(Diagonal, Slices) {
    const auto r = tilted(1, 4, 1, 4);
    EXPECT_TRUE(diagonal_slice(r, 7, Sign::plus).empty());
    const auto d = diagonal_slice(r, 2, Sign::plus);
    ASSERT_EQ(d.size(), 2u);
    for (const Site& p : d) EXPECT_EQ(p.s(), 2);
    const auto m = diagonal_slice(r, 3, Sign::minus);
    for (const Site& p : m) EXPECT_EQ(p.t(), 3);
    EXPECT_EQ(m.size(), 2u);
    EXPECT_THROW(diagonal_slice({Interval::all(), Interval::all()}, 0, Sign::plus), PreconditionError);
}

TEST(Sparse, EmptyAndFull) {
    const auto r = tilted(0, 9, 0, 9);
    EXPECT_TRUE(check_sparse({}, r, 0.0).sparse(SignSelection::both));
    const auto all = tilted_sites(r);
    EXPECT_FALSE(check_sparse(all, r, 0.99).sparse(SignSelection::both));
    EXPECT_TRUE(check_sparse(all, r, 1.0).sparse(SignSelection::both));
}

TEST(Sparse, FullDiagonal) {
    const auto r = tilted(0, 15, 0, 15);
    const auto F = diagonal_slice(r, 6, Sign::plus);
    const auto v = check_sparse(F, r, 0.5);
    EXPECT_FALSE(v.sparse(SignSelection::both));
    EXPECT_FALSE(v.sparse_plus);
    EXPECT_DOUBLE_EQ(v.worst_ratio, 1.0);
    EXPECT_EQ(v.worst_k, 6);
    EXPECT_EQ(v.worst_sign, Sign::plus);
}

TEST(Sparse, BruteForceAndMonotone) {
    Rng rng(5);
    for (int it = 0; it < 40; ++it) {
        const auto r = tilted(0, rng.integer(1, 20), 0, rng.integer(1, 20));
        std::vector<Site> f;
        for (const Site& p : tilted_sites(r))
            if (rng.uniform() < 0.2) f.push_back(p);
        const SiteSet F(f);
        const double delta = rng.uniform(0.0, 0.5);
        bool plus = true, minus = true;
        double worst = 0;
        for (long k = -60; k <= 60; ++k)
            for (Sign sg : {Sign::plus, Sign::minus}) {
                const auto d = diagonal_slice(r, k, sg);
                if (d.empty()) continue;
                const auto c = set_intersection(d, F).size();
                worst = std::max(worst, double(c) / double(d.size()));
                if (double(c) > delta * double(d.size())) {
                    (sg == Sign::plus ? plus : minus) = false;
                }
            }
        const auto v = check_sparse(F, r, delta);
        EXPECT_EQ(v.sparse_plus, plus);
        EXPECT_EQ(v.sparse_minus, minus);
        EXPECT_DOUBLE_EQ(v.worst_ratio, worst);
        if (v.sparse(SignSelection::both)) {
            EXPECT_TRUE(check_sparse(F, r, std::min(1.0, delta + 0.1)).sparse(SignSelection::both));
        }
    }
}

TEST(Dyadic, HalfDouble) {
    const auto q = square_at(8, 16, 8);
    EXPECT_TRUE(q.half_aligned());
    EXPECT_FALSE(square_at(2, 0, 8).half_aligned());
    EXPECT_EQ(q.halved(), square_at(10, 18, 4));
    EXPECT_EQ(q.doubled(), square_at(4, 12, 16));
    EXPECT_EQ(square_at(3, 3, 2).halved(), square_at(3, 3, 1));
    EXPECT_EQ(q.sites().size(), 64u);
    EXPECT_TRUE(q.doubled().contains(q));
}

TEST(Potential, EmptyAndFrozen) {
    EXPECT_TRUE(sample_potential({}, 3).values().empty());
    const auto Q = square_at(0, 0, 8).sites();
    for (std::uint64_t seed : {1ull, 99ull}) {
        const auto V = sample_potential(Q, seed, freeze(Q, 1));
        for (double v : V.values()) EXPECT_EQ(v, 1.0);
    }
    EXPECT_THROW(sample_potential(Q, 1, {{Site{0, 0}, 2}}), PreconditionError);
}

TEST(Potential, MeanAndDeterminism) {
    const auto Q = square_at(0, 0, 128).sites();  // > 10^4 free sites
    const auto V = sample_potential(Q, 1234);
    double mean = 0;
    for (double v : V.values()) mean += v;
    mean /= double(Q.size());
    EXPECT_GE(mean, 0.47);
    EXPECT_LE(mean, 0.53);
    EXPECT_EQ(V, sample_potential(Q, 1234));
    std::map<Site, int> fr{{Site{3, 3}, 0}, {Site{5, 7}, 1}};
    const auto W = sample_potential(Q, 77, fr);
    EXPECT_EQ(W(Site{3, 3}), 0.0);
    EXPECT_EQ(W(Site{5, 7}), 1.0);
    EXPECT_THROW(W(Site{-1, 0}), MissingSite);
}

namespace {

// Independent packing oracle: candidates by direct enumeration, optimum by include/exclude.
long brute_defect(const SiteSet& F, const SiteSet& E, double delta) {
    std::vector<SiteSet> cands;
    long smin = 1 << 20, smax = -(1 << 20), tmin = smin, tmax = smax;
    for (const Site& p : E) {
        smin = std::min<long>(smin, p.s()), smax = std::max<long>(smax, p.s());
        tmin = std::min<long>(tmin, p.t()), tmax = std::max<long>(tmax, p.t());
    }
    for (long s0 = smin; s0 <= smax; ++s0)
        for (long t0 = tmin; t0 <= tmax; ++t0)
            for (long n = 1; s0 + n - 1 <= smax && t0 + n - 1 <= tmax; ++n) {
                const auto r = tilted(s0, s0 + n - 1, t0, t0 + n - 1);
                const auto sites = tilted_sites(r);
                if (sites.empty() || !sites.subset_of(E)) continue;
                if (!check_sparse(F, r, delta).sparse(SignSelection::both)) cands.push_back(sites);
            }
    long best = 0;
    std::function<void(std::size_t, SiteSet, long)> rec = [&](std::size_t i, SiteSet used, long area) {
        best = std::max(best, area);
        if (i == cands.size()) return;
        if (set_intersection(used, cands[i]).empty())
            rec(i + 1, set_union(used, cands[i]), area + long(cands[i].size()));
        rec(i + 1, used, area);
    };
    rec(0, {}, 0);
    return best;
}

}  // namespace

TEST(Regularity, EmptyF) {
    const auto E = square_at(0, 0, 8).sites();
    const auto r = regularity_defect({}, E, 0.1, SearchMode::exact);
    EXPECT_EQ(r.defect_area, 0);
    EXPECT_TRUE(r.proven_optimal);
}

TEST(Regularity, FullFIsIrregular) {
    const auto E = square_at(0, 0, 32).sites();
    const auto r = regularity_defect(E, E, 0.1, SearchMode::greedy);
    EXPECT_GE(r.defect_area, long(0.9 * double(E.size())));
    EXPECT_TRUE(r.certifies_irregular(0.1, E.size()));
}

TEST(Regularity, ExactMatchesBruteForce) {
    Rng rng(21);
    int nonzero = 0;
    for (int it = 0; it < 12; ++it) {
        const int side = it < 6 ? 4 : 5;
        std::vector<Site> e;
        for (int x = 0; x < side; ++x)
            for (int y = 0; y < side; ++y) e.push_back({x, y});
        const SiteSet E(e);
        std::vector<Site> f;
        for (const Site& p : E)
            if (rng.uniform() < 0.15) f.push_back(p);
        const SiteSet F(f);
        const double delta = rng.uniform(0.1, 0.6);
        const auto ex = regularity_defect(F, E, delta, SearchMode::exact);
        const auto gr = regularity_defect(F, E, delta, SearchMode::greedy);
        ASSERT_TRUE(ex.proven_optimal);
        EXPECT_EQ(ex.defect_area, brute_defect(F, E, delta));
        nonzero += ex.defect_area > 0;
        EXPECT_LE(gr.defect_area, ex.defect_area);
        // witnesses are disjoint, inside E and non-sparse
        SiteSet used;
        long area = 0;
        for (const auto& q : ex.witness) {
            const auto s = tilted_sites(q);
            EXPECT_TRUE(q.is_square());
            EXPECT_TRUE(s.subset_of(E));
            EXPECT_TRUE(set_intersection(used, s).empty());
            EXPECT_FALSE(check_sparse(F, q, delta).sparse(SignSelection::both));
            used = set_union(used, s);
            area += long(s.size());
        }
        EXPECT_EQ(area, ex.defect_area);
    }
    EXPECT_GE(nonzero, 6);
}

TEST(Regularity, SparseGridIsNotRegularAtSmallScales) {
    // Every small tilted square around a grid point is non-sparse, so the
    // grid is far from delta-regular in a 64-square when delta = eps^2.
    const double eps = 0.2, delta = eps * eps;
    const int N = int(std::ceil(1.0 / (eps * eps)));
    const auto E = square_at(0, 0, 64).sites();
    std::vector<Site> f;
    for (const Site& p : E)
        if (p.x % N == 0 && p.y % N == 0) f.push_back(p);
    const auto r = regularity_defect(SiteSet(f), E, delta, SearchMode::greedy);
    EXPECT_TRUE(r.certifies_irregular(delta, E.size()));
}

TEST(Regularity, ExactCap) {
    const auto E = square_at(0, 0, 128).sites();
    EXPECT_THROW(regularity_defect({}, E, 0.1, SearchMode::exact), PreconditionError);
}
