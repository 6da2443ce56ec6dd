#include <andlab/sperner.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace andlab;

namespace {

SetFamily family(int n, std::vector<Mask> members) {
    SetFamily f;
    f.n = n;
    f.members = std::move(members);
    return f;
}

// every family on n <= 4 points, by bitmask over the 2^n subsets
long brute_max(int n, double rho) {
    const std::size_t N = std::size_t(1) << n;
    long best = 0;
    for (std::uint64_t code = 0; code < (std::uint64_t(1) << N); ++code) {
        const long size = std::popcount(code);
        if (size <= best) continue;
        std::vector<Mask> m;
        for (std::size_t i = 0; i < N; ++i)
            if (code >> i & 1) m.push_back(Mask(i));
        if (admits_witness(family(n, m), rho)) best = size;
    }
    return best;
}

long factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

// histogram of |A_sigma| over all n! permutations
std::vector<long> exact_chain_histogram(const SetFamily& fam) {
    const std::unordered_set<Mask> members(fam.members.begin(), fam.members.end());
    std::vector<int> perm(std::size_t(fam.n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<long> hist(std::size_t(fam.n) + 2, 0);
    do ++hist[std::size_t(chain_hits(members, perm))];
    while (std::next_permutation(perm.begin(), perm.end()));
    return hist;
}

SetFamily layer(int n, int k) {
    std::vector<Mask> m;
    for (Mask a = 0; a < (Mask(1) << n); ++a)
        if (popcount(a) == k) m.push_back(a);
    return family(n, m);
}

}  // namespace

TEST(RhoSperner, AntichainWithComplementsIsOneSperner) {
    SetFamily f = layer(5, 2);
    std::vector<Mask> w;
    for (Mask a : f.members) w.push_back(full_mask(5) & ~a);
    f.witness = w;
    EXPECT_TRUE(is_rho_sperner(f, 1.0));
}

TEST(RhoSperner, ChainFromEmptySetFailsForEveryWitness) {
    for (double rho : {1.0, 0.5, 0.01}) {
        for (Mask b0 = 0; b0 < 2; ++b0) {
            SetFamily f = family(1, {0, 1});
            f.witness = std::vector<Mask>{b0, 0};
            EXPECT_FALSE(is_rho_sperner(f, rho));
        }
        EXPECT_FALSE(admits_witness(family(1, {0, 1}), rho));
    }
}

TEST(RhoSperner, ThreeSetsMinusOneOnSixPoints) {
    SetFamily f = layer(6, 3);
    f.members.erase(f.members.begin() + 7);
    std::vector<Mask> w;
    for (Mask a : f.members) w.push_back(full_mask(6) & ~a);
    f.witness = w;
    EXPECT_TRUE(is_rho_sperner(f, 1.0));
}

TEST(RhoSperner, WitnessSizeAndBlockingBothMatter) {
    // {0} below {0,1}: witness of {0} must avoid 1
    SetFamily f = family(4, {0b0001, 0b0011});
    f.witness = std::vector<Mask>{0b1100, 0b1100};
    EXPECT_TRUE(is_rho_sperner(f, 2.0 / 3.0));
    EXPECT_FALSE(is_rho_sperner(f, 1.0));
    f.witness = std::vector<Mask>{0b0110, 0b1100};
    EXPECT_FALSE(is_rho_sperner(f, 0.5));
    f.witness = std::vector<Mask>{0b1000, 0b1100};
    EXPECT_FALSE(is_rho_sperner(f, 2.0 / 3.0));
    EXPECT_TRUE(is_rho_sperner(f, 1.0 / 3.0));
}

TEST(RhoSperner, Errors) {
    EXPECT_THROW(is_rho_sperner(family(3, {1, 2}), 0.5), PreconditionError);
    SetFamily f = family(3, {1});
    f.witness = std::vector<Mask>{1};
    EXPECT_THROW(is_rho_sperner(f, 0.5), PreconditionError);
    EXPECT_THROW(family(3, {1, 1}).validate(), PreconditionError);
    EXPECT_THROW(family(3, {8}).validate(), PreconditionError);
    SetFamily g = family(3, {1});
    g.witness = std::vector<Mask>{2};
    EXPECT_THROW(is_rho_sperner(g, 0.0), PreconditionError);
    EXPECT_THROW(is_rho_sperner(g, 1.5), PreconditionError);
}

TEST(SpernerBound, Values) {
    EXPECT_DOUBLE_EQ(sperner_bound(4, 1.0), 8.0);
    EXPECT_DOUBLE_EQ(sperner_bound(1, 1.0), 2.0);
    EXPECT_NEAR(sperner_bound(2, 0.5), 5.656854, 1e-6);
    EXPECT_THROW(sperner_bound(0, 1.0), PreconditionError);
    EXPECT_THROW(sperner_bound(3, 0.0), PreconditionError);
}

TEST(SpernerBound, BinomialBelowBoundUpToSixty) {
    // C(n,k)^2 * n <= 4^n, exactly in 128-bit arithmetic
    for (int n = 1; n <= 60; ++n) {
        unsigned __int128 c = 1;
        const unsigned __int128 four_n = static_cast<unsigned __int128>(1) << (2 * n);
        for (int k = 0; k <= n; ++k) {
            EXPECT_TRUE(c * c * static_cast<unsigned __int128>(n) <= four_n) << n << " " << k;
            c = c * static_cast<unsigned __int128>(n - k) / static_cast<unsigned __int128>(k + 1);
        }
    }
}

TEST(SymmetricChains, PartitionTheCube) {
    for (int n = 0; n <= 12; ++n) {
        const auto chains = symmetric_chains(n);
        std::vector<int> seen(std::size_t(1) << n, 0);
        long mid = 1;
        for (int k = 0; k < n / 2; ++k) mid = mid * (n - k) / (k + 1);
        EXPECT_EQ(long(chains.size()), mid);
        for (const auto& c : chains) {
            EXPECT_EQ(popcount(c.front()) + popcount(c.back()), n);
            for (std::size_t i = 0; i + 1 < c.size(); ++i) {
                EXPECT_EQ(c[i] & ~c[i + 1], 0u);
                EXPECT_EQ(popcount(c[i + 1]) - popcount(c[i]), 1);
            }
            for (Mask m : c) ++seen[m];
        }
        for (int s : seen) EXPECT_EQ(s, 1);
    }
}

TEST(ExhaustiveMax, SmallValues) {
    EXPECT_EQ(exhaustive_max_family(3, 1.0).size, 3);
    EXPECT_EQ(exhaustive_max_family(4, 1.0).size, 6);
    EXPECT_EQ(exhaustive_max_family(1, 1.0).size, 1);
    const auto r = exhaustive_max_family(2, 0.5);
    EXPECT_TRUE(r.proven);
    EXPECT_GE(r.size, 2);
    EXPECT_LE(double(r.size), sperner_bound(2, 0.5));
    EXPECT_THROW(exhaustive_max_family(13, 1.0), PreconditionError);
}

TEST(ExhaustiveMax, MatchesBruteForceOverAllFamilies) {
    for (int n = 1; n <= 4; ++n)
        for (double rho : {1.0, 0.75, 0.5, 0.25}) {
            const long oracle = brute_max(n, rho);
            const auto r = exhaustive_max_family(n, rho);
            EXPECT_TRUE(r.proven);
            EXPECT_EQ(r.size, oracle) << n << " " << rho;
            EXPECT_EQ(long(r.example.members.size()), r.size);
            EXPECT_TRUE(is_rho_sperner(r.example, rho));
            EXPECT_LE(double(oracle), sperner_bound(n, rho));
        }
}

TEST(ExhaustiveMax, ClassicalSpernerNumbers) {
    long c = 1;
    for (int n = 1; n <= 10; ++n) {
        c = c * n / ((n + 1) / 2);  // C(n, n/2) from C(n-1, (n-1)/2)
        const auto r = exhaustive_max_family(n, 1.0);
        EXPECT_TRUE(r.proven);
        EXPECT_EQ(r.size, c) << n;
    }
}

TEST(ExhaustiveMax, HalfDensityValues) {
    const long expect[] = {1, 2, 4, 7, 13, 27};
    for (int n = 1; n <= 6; ++n) {
        const auto r = exhaustive_max_family(n, 0.5);
        EXPECT_TRUE(r.proven);
        EXPECT_EQ(r.size, expect[n - 1]) << n;
        EXPECT_TRUE(is_rho_sperner(r.example, 0.5));
    }
}

TEST(ExhaustiveMax, ThresholdModeStopsEarly) {
    MaxFamilyOptions o;
    o.threshold = 10;
    const auto r = exhaustive_max_family(6, 0.5, o);
    EXPECT_TRUE(r.proven);
    EXPECT_GT(r.size, 10);
    EXPECT_TRUE(is_rho_sperner(r.example, 0.5));
    o.threshold = 27;
    const auto s = exhaustive_max_family(6, 0.5, o);
    EXPECT_TRUE(s.proven);
    EXPECT_LE(s.size, 27);
}

TEST(ExhaustiveMax, BudgetExhaustionIsReported) {
    MaxFamilyOptions o;
    o.node_budget = 50;
    const auto r = exhaustive_max_family(7, 0.5, o);
    EXPECT_FALSE(r.proven);
}

TEST(PieceBound, DominatesExactMaximum) {
    for (double rho : {1.0, 0.5, 0.25})
        for (int n = 1; n <= 6; ++n) {
            const long exact = exhaustive_max_family(n, rho).size;
            for (int t = 0; t <= n; ++t) {
                const auto pb = piece_decomposition_bound(n, rho, t);
                EXPECT_TRUE(pb.proven);
                EXPECT_GE(pb.bound, exact) << n << " " << rho << " " << t;
                if (t == n) {
                    EXPECT_EQ(pb.bound, exact);
                }
                long pieces = 0;
                for (long c : pb.piece_count) pieces += c;
                long mid = 1;
                for (int k = 0; k < (n - t) / 2; ++k) mid = mid * (n - t - k) / (k + 1);
                EXPECT_EQ(pieces, mid);
            }
        }
}

TEST(PieceBound, IsomorphicPiecesAgree) {
    // every chain of the base decomposition gives the same piece maximum as its level representative
    const int n = 7, t = 3;
    const auto pb = piece_decomposition_bound(n, 0.5, t);
    for (const auto& c : symmetric_chains(n - t)) {
        std::vector<Mask> sets;
        std::vector<std::vector<Mask>> chains;
        for (Mask T = 0; T < (Mask(1) << t); ++T) {
            std::vector<Mask> ch;
            for (Mask x : c) ch.push_back(x | (T << (n - t)));
            sets.insert(sets.end(), ch.begin(), ch.end());
            chains.push_back(ch);
        }
        detail::FamilySearch s(n, 0.5, sets, chains);
        EXPECT_EQ(s.run({}).size, pb.piece_max[std::size_t(popcount(c.front()))]);
    }
}

TEST(PieceBound, CertifiesBoundUpToTen) {
    for (double rho : {1.0, 0.5, 0.25})
        for (int n = 1; n <= 10; ++n) {
            const auto pb = certify_family_limit(n, rho);
            EXPECT_TRUE(pb.proven);
            EXPECT_LE(double(pb.bound), sperner_bound(n, rho)) << n << " " << rho;
        }
}

TEST(RandomFamilies, AllWitnessedAndBelowBound) {
    Rng rng(20240611);
    long biggest_ratio_hits = 0;
    for (int i = 0; i < 100000; ++i) {
        const int n = 2 + int(rng.integer(0, 18));
        const double rho = rng.uniform(0.05, 1.0);
        const int attempts = int(rng.integer(1, n <= 6 ? 200 : 40));
        const SetFamily f = random_rho_sperner_family(n, rho, attempts, rng, rng.uniform(0.2, 0.8));
        ASSERT_TRUE(is_rho_sperner(f, rho));
        ASSERT_LE(double(f.members.size()), sperner_bound(n, rho));
        if (double(f.members.size()) > 0.25 * sperner_bound(n, rho)) ++biggest_ratio_hits;
    }
    EXPECT_GT(biggest_ratio_hits, 0);  // the small-n draws do get near the bound
}

TEST(Lubell, AntichainMeetsEveryChainAtMostOnce) {
    const SetFamily f = with_canonical_witness(layer(6, 3));
    const auto rows = lubell_chain_statistic(f, 1.0, 20000, 7);
    EXPECT_DOUBLE_EQ(rows[0].estimate, 1.0);
    for (std::size_t j = 1; j < rows.size(); ++j) {
        EXPECT_EQ(rows[j].estimate, 0.0);
        EXPECT_TRUE(rows[j].ok);
    }
}

TEST(Lubell, LymIdentityExact) {
    Rng rng(99);
    for (int i = 0; i < 40; ++i) {
        const int n = 2 + int(rng.integer(0, 6));
        const SetFamily f = random_rho_sperner_family(n, rng.uniform(0.1, 1.0), 60, rng);
        // sum_k |A_k| k!(n-k)! = sum over permutations of |A_sigma|
        long lhs = 0;
        for (Mask a : f.members) lhs += factorial(popcount(a)) * factorial(n - popcount(a));
        const auto hist = exact_chain_histogram(f);
        long rhs = 0;
        for (std::size_t h = 0; h < hist.size(); ++h) rhs += long(h) * hist[h];
        EXPECT_EQ(lhs, rhs);
    }
}

TEST(Lubell, ExactTailWithinBoundAndMatchesSampling) {
    Rng rng(5);
    for (int i = 0; i < 12; ++i) {
        const int n = 3 + int(rng.integer(0, 5));
        const double rho = rng.uniform(0.15, 0.9);
        const SetFamily f = random_rho_sperner_family(n, rho, 200, rng);
        const auto hist = exact_chain_histogram(f);
        const double total = double(factorial(n));
        const auto rows = lubell_chain_statistic(f, rho, 200000, 1000 + std::uint64_t(i));
        for (const auto& r : rows) {
            double tail = 0;
            for (std::size_t h = std::size_t(r.j) + 1; h < hist.size(); ++h) tail += double(hist[h]);
            tail /= total;
            EXPECT_LE(tail, r.bound + 1e-12) << n << " " << rho << " " << r.j;
            EXPECT_TRUE(r.ok);
            // the exact value sits inside a widened Wilson interval
            EXPECT_GE(tail, r.lo - 2.0 * r.sigma - 1e-9);
            EXPECT_LE(tail, r.hi + 2.0 * r.sigma + 1e-9);
        }
    }
}

TEST(Lubell, DeterministicPerSeed) {
    Rng rng(3);
    const SetFamily f = random_rho_sperner_family(9, 0.4, 80, rng);
    const auto a = lubell_chain_statistic(f, 0.4, 30000, 11);
    const auto b = lubell_chain_statistic(f, 0.4, 30000, 11);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[j].estimate, b[j].estimate);
}

TEST(Lubell, Errors) {
    const SetFamily f = with_canonical_witness(layer(4, 2));
    EXPECT_THROW(lubell_chain_statistic(f, 1.0, 0, 1), PreconditionError);
    EXPECT_THROW(lubell_chain_statistic(with_canonical_witness(family(1, {0, 1})), 0.5, 100, 1),
                 PreconditionError);
}
