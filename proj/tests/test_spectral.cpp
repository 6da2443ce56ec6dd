#include <andlab/gri.hpp>
#include <andlab/multiscale.hpp>
#include <andlab/variation.hpp>

#include <gtest/gtest.h>

#include <cmath>

#include "defect_oracle.hpp"

using namespace andlab;

namespace {

VariationInstance diagonal_instance() {
    VariationInstance inst;
    const double r1 = 0.005;
    inst.A = Eigen::Vector3d(0.9, r1 / 2, 0.001).asDiagonal();
    inst.r = {r1, 0.8, 0.85, 0.9, 0.95};
    inst.i = inst.j = 1;
    inst.k = 1;
    return inst;
}

double box_gap_brute(const DyadicSquare& Q, const DyadicSquare& inner, const DyadicSquare& cover) {
    double best = INFINITY;
    for (Site p : inner.sites())
        for (Site q : Q.sites())
            if (!cover.contains(q)) best = std::min(best, distance(p, q));
    return best;
}

}  // namespace

TEST(MinMaxVariation, ViolatedHypothesesAreReported) {
    VariationInstance inst = diagonal_instance();
    inst.r[0] = 0.85;  // r1 >= r2
    const auto v = minmax_variation_check(inst);
    EXPECT_FALSE(v.hypothesis[0]);
    EXPECT_FALSE(v.hypotheses_met);
}

TEST(MinMaxVariation, DiagonalInstance) {
    const auto v = minmax_variation_check(diagonal_instance());
    EXPECT_TRUE(v.hypotheses_met);
    EXPECT_TRUE(v.conclusion_holds);
    EXPECT_EQ(v.count_before, 1);
    EXPECT_EQ(v.count_after, 2);
    EXPECT_NEAR(v.lambda_i_after, 0.9, 1e-12);  // 0.9 is now the second largest
}

TEST(MinMaxVariation, EachHypothesisCanFail) {
    auto base = diagonal_instance();
    {
        auto inst = base;
        inst.r[0] = 0.0076;  // above c min{...}
        EXPECT_FALSE(minmax_variation_check(inst).hypothesis[1]);
    }
    {
        auto inst = base;
        inst.i = inst.j = 2;  // lambda_{i-1} = r1/2 is not above r2
        EXPECT_FALSE(minmax_variation_check(inst).hypothesis[2]);
    }
    {
        auto inst = base;
        inst.k = 0;  // e_k no longer carries the lambda_j eigenvector
        EXPECT_FALSE(minmax_variation_check(inst).hypothesis[3]);
    }
    {
        auto inst = base;
        // rotate a little of the band eigenvector into coordinate k
        const double t = 0.99;
        Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
        R(0, 0) = R(1, 1) = std::cos(t);
        R(0, 1) = -std::sin(t);
        R(1, 0) = std::sin(t);
        inst.A = R * inst.A * R.transpose();
        const auto v = minmax_variation_check(inst);
        EXPECT_FALSE(v.hypothesis[4] && v.hypothesis[3]);
    }
    EXPECT_THROW(minmax_variation_check(VariationInstance{Eigen::Matrix2d{{1, 2}, {0, 1}}, 0, {}, 0, 0, 0.01}),
                 PreconditionError);
}

TEST(MinMaxVariation, RejectionSampledInstancesAllConclude) {
    Rng rng(4242);
    long met = 0, tries = 0;
    while (met < 10000) {
        ++tries;
        const auto inst = sample_variation_instance(rng, 50);
        const auto v = minmax_variation_check(inst);
        if (!v.hypotheses_met) continue;
        ++met;
        ASSERT_TRUE(v.conclusion_holds) << "instance " << tries;
        ASSERT_GE(v.margin, 0.0);
    }
    RecordProperty("tries", std::to_string(tries));
}

TEST(AlmostOrthonormal, Examples) {
    for (int n : {1, 2, 7, 40}) {
        std::vector<Eigen::VectorXd> basis;
        for (int a = 0; a < n; ++a) basis.push_back(Eigen::VectorXd::Unit(n, a));
        const auto v = almost_orthonormal_check(basis);
        EXPECT_TRUE(v.hypothesis_met);
        EXPECT_TRUE(v.bound_holds);
    }
    const auto dup = almost_orthonormal_check({Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)});
    EXPECT_FALSE(dup.hypothesis_met);
    EXPECT_NEAR(dup.max_deviation, 1.0, 1e-15);
    EXPECT_THROW(almost_orthonormal_check({}), PreconditionError);
    EXPECT_THROW(almost_orthonormal_check({Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)}), PreconditionError);
}

TEST(AlmostOrthonormal, SimplexFrameHasMoreVectorsThanDimensions) {
    // n + 1 unit vectors at mutual inner product -1/n meet the hypothesis once n > 5
    for (int n = 10; n <= 60; n += 5) {
        
        std::vector<Eigen::VectorXd> f;
        const double beta = (-1.0 + 1.0 / std::sqrt(n + 1.0)) / n, norm = std::sqrt(n / (n + 1.0));
        for (int a = 0; a < n; ++a) {
            Eigen::VectorXd v = Eigen::VectorXd::Constant(n, beta);
            v(a) += 1.0;
            f.push_back(v / norm);
        }
        f.push_back(Eigen::VectorXd::Constant(n, -1.0 / std::sqrt(n + 1.0)) / norm);
        const auto v = almost_orthonormal_check(f);
        EXPECT_NEAR(v.max_deviation, 1.0 / n, 1e-12);
        EXPECT_TRUE(v.hypothesis_met);
        EXPECT_TRUE(v.bound_holds);
        EXPECT_EQ(v.m, n + 1);
    }
}

TEST(AlmostOrthonormal, RandomFamiliesNeverExceedBound) {
    Rng rng(77);
    long met = 0, above_n = 0;
    for (int t = 0; t < 20000; ++t) {
        const auto v = almost_orthonormal_check(sample_near_orthonormal(rng, 100));
        if (!v.hypothesis_met) continue;
        ++met;
        above_n += v.m > v.n ? 1 : 0;
        ASSERT_TRUE(v.bound_holds);
    }
    EXPECT_GT(met, 1000);
    EXPECT_GT(above_n, 10);
}

TEST(Gri, SameSquareHasNoBoundaryTerms) {
    const SiteSet Q = square_at(0, 0, 8).sites();
    const auto V = sample_potential(Q, 3);
    const auto r = gri_decompose(Q, Q, V, 0.7, {2, 3}, {6, 1});
    EXPECT_EQ(r.exact_residual, 0.0);
    EXPECT_EQ(r.boundary_pairs, 0);
}

TEST(Gri, IdentityAgainstDenseResolvents) {
    const SiteSet Q = square_at(0, 0, 16).sites();
    const SiteSet Qp = square_at(4, 4, 8).sites();
    const auto V = sample_potential(Q, 11);
    const auto RQ = resolvent(assemble_hq(Q, V), 0.2);
    const auto RQp = resolvent(assemble_hq(Qp, V), 0.2);
    for (Site x : {Site{5, 5}, Site{11, 4}})
        for (Site y : {Site{0, 0}, Site{7, 9}, Site{15, 15}}) {
            const auto r = gri_decompose(Q, Qp, V, 0.2, x, y);
            EXPECT_NEAR(r.rq_xy, RQ.entries(Q.index_of(x), Q.index_of(y)), 1e-10 * r.scale);
            const double dense_qp = Qp.contains(y) ? RQp.entries(Qp.index_of(x), Qp.index_of(y)) : 0.0;
            EXPECT_NEAR(r.rqp_xy, dense_qp, 1e-10 * r.scale);
            EXPECT_LE(r.exact_residual, 1e-8 * RQ.entries.cwiseAbs().maxCoeff());
            EXPECT_TRUE(r.bound_holds);
            EXPECT_TRUE(Qp.contains(r.u));
            EXPECT_FALSE(Qp.contains(r.v));
            EXPECT_TRUE(adjacent(r.u, r.v));
            EXPECT_EQ(r.boundary_pairs, 32);
        }
}

TEST(Gri, RandomInstances) {
    Rng rng(9);
    for (int t = 0; t < 60; ++t) {
        const int L = 1 << int(rng.integer(2, 5));
        const SiteSet Q = square_at(0, 0, L).sites();
        const int w = int(rng.integer(1, L)), h = int(rng.integer(1, L));
        const int x0 = int(rng.integer(0, L - w)), y0 = int(rng.integer(0, L - h));
        const SiteSet Qp = box_sites(x0, y0, w, h);
        const auto V = sample_potential(Q, 100 + std::uint64_t(t));
        const Site x = Qp[std::size_t(rng.integer(0, long(Qp.size()) - 1))];
        const Site y = Q[std::size_t(rng.integer(0, long(Q.size()) - 1))];
        const double lb = rng.uniform(0.0, 9.0);
        try {
            const auto r = gri_decompose(Q, Qp, V, lb, x, y);
            EXPECT_LE(r.exact_residual, 1e-8 * r.scale) << t;
            EXPECT_TRUE(r.bound_holds) << t;
        } catch (const NearSingular&) {
        }
    }
}

TEST(Gri, StrongDecayMakesBoundaryTermSmall) {
    const SiteSet Q = square_at(0, 0, 32).sites();
    const SiteSet Qp = square_at(8, 8, 16).sites();
    const auto V = PotentialField::constant(Q, 1.0);
    const auto r = gri_decompose(Q, Qp, V, 0.0, {15, 15}, {16, 16});
    RecordProperty("ratio", std::to_string(r.witness_term / std::abs(r.rqp_xy)));
    EXPECT_LE(r.exact_residual, 1e-8 * r.scale);
}

TEST(Gri, Errors) {
    const SiteSet Q = square_at(0, 0, 4).sites();
    const auto V = PotentialField::constant(Q, 0.0);
    const SiteSet one = box_sites(1, 1, 1, 1);
    EXPECT_THROW(gri_decompose(Q, one, V, 4.0, {1, 1}, {2, 2}), NearSingular);
    EXPECT_THROW(gri_decompose(Q, one, V, 1.0, {2, 2}, {2, 2}), PreconditionError);
    EXPECT_THROW(gri_decompose(one, Q, V, 1.0, {1, 1}, {1, 1}), PreconditionError);
}

TEST(Continuity, SameEnergyIsTrivial) {
    const auto H = assemble_hq(square_at(0, 0, 8), sample_potential(square_at(0, 0, 8).sites(), 5));
    const auto fit = decay_fit(resolvent(H, 0.3));
    const double beta = fit.m, alpha = std::max(fit.A, beta + 1.0);
    const auto v = resolvent_continuity_check(H, 0.3, 0.3, alpha, beta);
    EXPECT_TRUE(v.hypotheses_met);
    EXPECT_TRUE(v.conclusion_holds);
    EXPECT_EQ(v.worst_ratio, v.worst_decay_ratio);
}

TEST(Continuity, HalfRadiusRandomSquares) {
    Rng rng(31);
    int met = 0;
    for (int t = 0; t < 150; ++t) {
        const DyadicSquare q = square_at(0, 0, 16);
        const auto H = assemble_hq(q, sample_potential(q.sites(), 500 + std::uint64_t(t)));
        const double lambda = rng.uniform(0.0, 9.0);
        DecayFit fit;
        try {
            fit = decay_fit(resolvent(H, lambda));
        } catch (const NearSingular&) {
            continue;
        }
        const double beta = std::max(fit.m, 1e-3), alpha = std::max(detail::certified_A(resolvent(H, lambda).entries, H.sites, beta), beta + 1e-3);
        const double radius = 0.25 * beta / double(H.size()) * std::exp(-alpha);
        const double lp = lambda + (rng.bit() ? 0.5 : -0.5) * radius;
        const auto v = resolvent_continuity_check(H, lambda, lp, alpha, beta);
        ASSERT_TRUE(v.hypotheses_met) << t << " " << v.ordering_ok << v.decay_ok << v.radius_ok << " " << v.worst_decay_ratio << " " << alpha << " " << beta;
        ++met;
        EXPECT_TRUE(v.conclusion_holds) << t;
        EXPECT_TRUE(v.contraction_ok) << t;
    }
    EXPECT_GT(met, 100);
}

TEST(Continuity, OutsideRadiusNearEigenvalue) {
    const DyadicSquare q = square_at(0, 0, 8);
    const auto H = assemble_hq(q, sample_potential(q.sites(), 8));
    const auto sp = eigendecompose(H, false);
    const double ev = sp.eigenvalues(20);
    const double lambda = ev + 0.05;
    const auto fit = decay_fit(resolvent(H, lambda));
    const double beta = std::max(fit.m, 1e-3), alpha = std::max(fit.A, beta + 1e-3);
    const auto v = resolvent_continuity_check(H, lambda, ev + 1e-9, alpha, beta);
    EXPECT_FALSE(v.radius_ok);
    EXPECT_FALSE(v.hypotheses_met);
    EXPECT_FALSE(v.conclusion_holds);
}

TEST(DefectDistance, NoDefectsIsEuclidean) {
    const DyadicSquare Q = square_at(0, 0, 16);
    const auto g = defect_distance(Q, {}, 3.0);
    for (Site x : {Site{0, 0}, Site{3, 9}})
        for (Site y : Q.sites()) EXPECT_EQ(g(x, y), distance(x, y));
}

TEST(DefectDistance, MatchesExplicitGraphOracle) {
    struct Case {
        int L;
        std::vector<DyadicSquare> defects;
        double L3;
    };
    const std::vector<Case> cases = {
        {16, {square_at(4, 4, 8)}, 0.75},
        {16, {square_at(0, 0, 8)}, 0.5},
        {16, {square_at(0, 0, 4), square_at(8, 4, 4), square_at(4, 12, 4)}, 0.9},
        {16, {square_at(2, 2, 4), square_at(8, 8, 8)}, 0.0},
        {32, {square_at(2, 3, 16), square_at(20, 20, 8)}, 0.9},
    };
    for (const auto& c : cases) {
        const DyadicSquare Q = square_at(0, 0, c.L);
        const auto g = defect_distance(Q, c.defects, c.L3);
        bool neg = true;
        const Eigen::MatrixXd oracle = oracle::defect_distances(Q, c.defects, c.L3, &neg);
        ASSERT_FALSE(neg);
        const Eigen::MatrixXd d = g.matrix();
        EXPECT_LE((d - oracle).cwiseAbs().maxCoeff(), 1e-12) << c.L << " " << c.L3;
        const SiteSet s = Q.sites();
        for (Eigen::Index a = 0; a < d.rows(); a += 7)
            for (Eigen::Index b = 0; b < d.rows(); b += 5) {
                EXPECT_LE(d(a, b), distance(s[std::size_t(a)], s[std::size_t(b)]) + 1e-12);
                for (Eigen::Index z = 0; z < d.rows(); z += 11) EXPECT_LE(d(a, b), d(a, z) + d(z, b) + 1e-12);
            }
    }
}

TEST(DefectDistance, JumpThroughDefect) {
    const DyadicSquare Q = square_at(0, 0, 32);
    const DyadicSquare D = square_at(8, 8, 16);
    const double L3 = 1.5;
    const auto g = defect_distance(Q, {D}, L3);
    const Site x{16, 16}, y{30, 16};
    // exit straight east through (24, 16), after reaching the source box
    const double dist_to_exit = distance(x, {24, 16});
    EXPECT_LE(g(x, y), distance(x, y) - L3 + dist_to_exit);
    EXPECT_NEAR(g(x, y), -L3 + distance(Site{24, 16}, y), 1e-12);
    EXPECT_GE(defect_distance_constant(g), 0.0);
}

TEST(DefectDistance, NegativeCycleWhenL3TooLarge) {
    const DyadicSquare Q = square_at(0, 0, 32);
    const std::vector<DyadicSquare> two = {square_at(0, 0, 16), square_at(16, 0, 16)};
    EXPECT_THROW(defect_distance(Q, two, 20.0), NegativeCycle);
    bool neg = false;
    oracle::defect_distances(square_at(0, 0, 16), {square_at(0, 0, 8), square_at(8, 0, 8)}, 9.0, &neg);
    EXPECT_TRUE(neg);
    EXPECT_THROW(defect_distance(square_at(0, 0, 16), {square_at(0, 0, 8), square_at(8, 0, 8)}, 9.0), NegativeCycle);
    EXPECT_THROW(defect_distance(Q, {square_at(0, 0, 16), square_at(8, 8, 16)}, 1.0), PreconditionError);
}

namespace {

std::vector<DyadicSquare> half_aligned_cover(const DyadicSquare& Q, int side) {
    std::vector<DyadicSquare> out;
    for (int y = Q.corner.y; y + side <= Q.corner.y + Q.side(); y += side / 2)
        for (int x = Q.corner.x; x + side <= Q.corner.x + Q.side(); x += side / 2) out.push_back(square_at(x, y, side));
    return out;
}

}  // namespace

TEST(Multiscale, NoDefectSquareWithMeasuredDecay) {
    const DyadicSquare Q = square_at(0, 0, 64);
    const auto V = PotentialField::constant(Q.sites(), 1.0);
    const auto goods = half_aligned_cover(Q, 16);
    double m = 1.0, L6 = -INFINITY;
    for (const auto& g : goods) m = std::min(m, decay_fit(resolvent(assemble_hq(g, V), 0.0)).m);
    for (const auto& g : goods) {
        const auto R = resolvent(assemble_hq(g, V), 0.0);
        L6 = std::max(L6, detail::certified_A(R.entries, R.sites, m));
    }
    MultiscaleParams p;
    p.eps = 0.2;
    p.delta = 0.5;
    p.m = m;
    p.L = {64, std::pow(64.0, 0.8), 16, 1, 1, 16, L6};
    const auto v = multiscale_propagation_check(Q, V, 0.0, {}, goods, p);
    EXPECT_TRUE(v.good_ok);
    EXPECT_EQ(v.covered_by_good, 64 * 64);
    EXPECT_GE(v.margin, 0.0);
    EXPECT_TRUE(v.conclusion_holds);
    RecordProperty("m", std::to_string(m));
    RecordProperty("margin", std::to_string(v.margin));
}

TEST(Multiscale, CoverageGapIsAnError) {
    const DyadicSquare Q = square_at(0, 0, 32);
    const auto V = PotentialField::constant(Q.sites(), 1.0);
    auto goods = half_aligned_cover(Q, 16);
    goods.erase(goods.begin() + 4);  // the central square
    MultiscaleParams p;
    p.L = {32, 16, 8, 1, 1, 16, 1};
    p.m = 0.5;
    EXPECT_THROW(multiscale_propagation_check(Q, V, 0.0, {}, goods, p), PreconditionError);
}

TEST(Multiscale, DefectCoversItsInterior) {
    const DyadicSquare Q = square_at(0, 0, 32);
    const auto V = sample_potential(Q.sites(), 17);
    std::vector<DyadicSquare> goods;
    const DyadicSquare D = square_at(8, 8, 16);
    for (const auto& g : half_aligned_cover(Q, 8))
        if (!(D.halved().contains(g))) goods.push_back(g);
    MultiscaleParams p;
    p.m = 0.3;
    p.delta = 1.0;
    p.L = {32, 30, 16, 1.5, 40, 8, 40};
    const auto v = multiscale_propagation_check(Q, V, 0.0, {D}, goods, p);
    EXPECT_GT(v.covered_by_defect, 0);
    EXPECT_TRUE(std::isfinite(v.log_alpha));
}

TEST(Cover, SingleSquareIsCentred) {
    const DyadicSquare Q = square_at(0, 0, 1024);
    const DyadicSquare inner = square_at(500, 300, 2);
    const auto c = cover_disjointify(Q, {inner}, 1, 8, 64);
    EXPECT_EQ(c.L3, 64);
    ASSERT_EQ(c.cover.size(), 1u);
    EXPECT_EQ(c.merges, 0);
    EXPECT_TRUE(cover_property(Q, inner, c.cover[0]));
    EXPECT_EQ(c.cover[0].corner, (Site{501 - 32, 301 - 32}));
    // near the corner of Q the square is clamped
    const auto d = cover_disjointify(Q, {square_at(0, 0, 2)}, 1, 8, 64);
    EXPECT_EQ(d.cover[0].corner, (Site{0, 0}));
    EXPECT_TRUE(cover_property(Q, square_at(0, 0, 2), d.cover[0]));
}

TEST(Cover, OverlappingSeedsMerge) {
    const DyadicSquare Q = square_at(0, 0, 1 << 18);
    const std::vector<DyadicSquare> inner = {square_at(100000, 100000, 1), square_at(100010, 100004, 1),
                                             square_at(100030, 99990, 1)};
    const auto c = cover_disjointify(Q, inner, 3, 512, 512);
    EXPECT_LE(c.merges, 2);
    EXPECT_GE(c.merges, 1);
    ASSERT_EQ(c.cover.size(), 3u);
    for (std::size_t a = 0; a < c.cover.size(); ++a)
        for (std::size_t b = a + 1; b < c.cover.size(); ++b) EXPECT_FALSE(c.cover[a].intersects(c.cover[b]));
    for (std::size_t k = 0; k < inner.size(); ++k) EXPECT_TRUE(cover_property(Q, inner[k], c.cover[std::size_t(c.owner[k])]));
    EXPECT_GE(c.L3, 512);
    EXPECT_LE(c.L3, 512 * 512);
}

TEST(Cover, FarApartNeedsNoMerging) {
    const DyadicSquare Q = square_at(0, 0, 1 << 18);
    const std::vector<DyadicSquare> inner = {square_at(1000, 1000, 1), square_at(200000, 3000, 1),
                                             square_at(90000, 250000, 1)};
    const auto c = cover_disjointify(Q, inner, 3, 512, 512);
    EXPECT_EQ(c.merges, 0);
    EXPECT_EQ(c.L3, 512);
}

TEST(Cover, RandomInstancesHaveTheProperty) {
    Rng rng(123);
    for (int t = 0; t < 300; ++t) {
        const int K = int(rng.integer(1, 3));
        const int alpha = 1 << (3 * K);
        const int L2 = 1 << int(rng.integer(0, 1));
        const int L1 = alpha * L2;
        const DyadicSquare Q = square_at(0, 0, alpha * L1 * (t % 2 ? 1 : 2));
        std::vector<DyadicSquare> inner;
        const int cluster = int(rng.integer(0, Q.side() - L2));
        for (int k = 0; k < K; ++k) {
            const int spread = rng.bit() ? L1 : Q.side();
            const int x = std::clamp(cluster + int(rng.integer(-spread, spread)), 0, Q.side() - L2);
            const int y = std::clamp(cluster + int(rng.integer(-spread, spread)), 0, Q.side() - L2);
            inner.push_back(square_at(x, y, L2));
        }
        const auto c = cover_disjointify(Q, inner, K, alpha, L1);
        ASSERT_EQ(int(c.cover.size()), K);
        EXPECT_LE(c.merges, K - 1);
        EXPECT_GE(c.L3, L1);
        EXPECT_LE(c.L3, alpha * L1);
        for (std::size_t a = 0; a < c.cover.size(); ++a) {
            EXPECT_TRUE(Q.contains(c.cover[a]));
            for (std::size_t b = a + 1; b < c.cover.size(); ++b) EXPECT_FALSE(c.cover[a].intersects(c.cover[b]));
        }
        for (std::size_t k = 0; k < inner.size(); ++k) {
            const auto& owner = c.cover[std::size_t(c.owner[k])];
            EXPECT_TRUE(cover_property(Q, inner[k], owner));
            if (Q.side() <= 64) { EXPECT_GE(box_gap_brute(Q, inner[k], owner), owner.side() / 8.0); }
        }
    }
}

TEST(Cover, Preconditions) {
    const DyadicSquare Q = square_at(0, 0, 1024);
    EXPECT_THROW(cover_disjointify(Q, {square_at(0, 0, 2)}, 2, 32, 16), PreconditionError);   // alpha < 8^2
    EXPECT_THROW(cover_disjointify(Q, {square_at(0, 0, 4)}, 1, 8, 16), PreconditionError);    // L1 < alpha L2
    EXPECT_THROW(cover_disjointify(Q, {square_at(0, 0, 2)}, 1, 8, 256), PreconditionError);   // L0 < alpha L1
}
