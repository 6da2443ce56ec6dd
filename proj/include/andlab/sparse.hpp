#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "operator.hpp"
#include "potential.hpp"
#include "rng.hpp"

namespace andlab {

using SparseMatrix = Eigen::SparseMatrix<double>;

inline SparseMatrix sparse_hamiltonian(const SiteSet& Q, const PotentialField& V) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(Q.size() * 5);
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const Site p = Q[i];
        trips.emplace_back(int(i), int(i), 4.0 + V(p));
        for (Site d : kNeighbourOffsets) {
            const long j = Q.index_of(p + d);
            if (j >= 0) trips.emplace_back(int(i), int(j), -1.0);
        }
    }
    SparseMatrix H(long(Q.size()), long(Q.size()));
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

inline SparseMatrix shifted(const SparseMatrix& H, double sigma) {
    SparseMatrix I(H.rows(), H.cols());
    I.setIdentity();
    return H - sigma * I;
}

// Number of eigenvalues strictly below sigma, from the inertia of H - sigma.
inline long count_below(const SparseMatrix& H, double sigma) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(H, sigma));
    if (ldlt.info() != Eigen::Success) throw NearSingular("LDLT of H - sigma failed", 0.0, 1.0);
    const auto& D = ldlt.vectorD();
    long neg = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
        if (D(i) == 0.0 || !std::isfinite(D(i))) throw NearSingular("sigma is an eigenvalue", 0.0, 1.0);
        neg += D(i) < 0.0 ? 1 : 0;
    }
    return neg;
}

inline long count_in_window(const SparseMatrix& H, double lo, double hi) {
    if (hi < lo) return 0;
    return count_below(H, std::nextafter(hi, 1e300)) - count_below(H, lo);
}

struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

// The k eigenpairs of symmetric H closest to sigma, by shift-invert subspace iteration.
inline EigenPairs nearest_eigenpairs(const SparseMatrix& H, double sigma, int k, std::uint64_t seed = 1,
                                     double tol = 1e-11, int max_iter = 500) {
    const Eigen::Index n = H.rows();
    EigenPairs out;
    if (k <= 0) return out;
    require(k <= n, "more eigenpairs requested than the dimension");
    if (n <= 64 || k + 4 >= n) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H)};
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
            return std::abs(es.eigenvalues()(a) - sigma) < std::abs(es.eigenvalues()(b) - sigma);
        });
        out.values.resize(k);
        out.vectors.resize(n, k);
        for (int c = 0; c < k; ++c) {
            out.values(c) = es.eigenvalues()(idx[std::size_t(c)]);
            out.vectors.col(c) = es.eigenvectors().col(idx[std::size_t(c)]);
        }
        return out;
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(H, sigma));
    if (ldlt.info() != Eigen::Success) throw NearSingular("LDLT of H - sigma failed", 0.0, 1.0);
    const int p = std::min<int>(int(n), k + 4);
    Rng rng(seed);
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const double scale = 8.0 + H.diagonal().cwiseAbs().maxCoeff();
    Eigen::VectorXd theta;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd Y = ldlt.solve(X);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
        Y = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
        const Eigen::MatrixXd HY = H * Y;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(Y.transpose() * HY);
        // order Ritz values by distance to sigma
        std::vector<int> idx(static_cast<std::size_t>(p));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::abs(small.eigenvalues()(a) - sigma) < std::abs(small.eigenvalues()(b) - sigma);
        });
        Eigen::MatrixXd U(p, p);
        theta.resize(p);
        for (int c = 0; c < p; ++c) {
            U.col(c) = small.eigenvectors().col(idx[std::size_t(c)]);
            theta(c) = small.eigenvalues()(idx[std::size_t(c)]);
        }
        X = Y * U;
        const Eigen::MatrixXd HX = HY * U;
        double worst = 0.0;
        for (int c = 0; c < k; ++c) worst = std::max(worst, (HX.col(c) - theta(c) * X.col(c)).norm());
        if (worst <= tol * scale) {
            out.values = theta.head(k);
            out.vectors = X.leftCols(k);
            return out;
        }
    }
    throw ConvergenceError("shift-invert subspace iteration did not converge");
}

// The k smallest eigenpairs. A shift certified (by inertia) to lie below the
// spectrum is moved up towards the smallest Ritz value to speed convergence.
inline EigenPairs lowest_eigenpairs(const SparseMatrix& H, int k, std::uint64_t seed = 1) {
    const Eigen::Index n = H.rows();
    require(k >= 1 && k <= n, "invalid number of eigenpairs");
    double floor = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (SparseMatrix::InnerIterator it(H, i); it; ++it)
            if (it.row() != i) off += std::abs(it.value());
        floor = std::min(floor, H.coeff(i, i) - off);
    }
    floor -= 1e-3;
    auto rough = nearest_eigenpairs(H, floor, std::min<int>(int(n), k + 1), seed, 1e-3, 2000);
    double sigma = rough.values.minCoeff();
    if (rough.values.size() > k) sigma -= 0.5 * (rough.values(k) - rough.values(k - 1));
    sigma = std::max(sigma - 1e-6, floor);
    while (count_below(H, sigma) > 0) sigma = 0.5 * (sigma + floor);
    return nearest_eigenpairs(H, sigma, k, seed);
}

// All eigenpairs with eigenvalue in [lo, hi].
inline EigenPairs window_eigenpairs(const SparseMatrix& H, double lo, double hi, std::uint64_t seed = 1) {
    const long count = count_in_window(H, lo, hi);
    auto pairs = nearest_eigenpairs(H, 0.5 * (lo + hi), int(count), seed);
    for (Eigen::Index c = 0; c < pairs.values.size(); ++c)
        if (pairs.values(c) < lo - 1e-9 || pairs.values(c) > hi + 1e-9)
            throw ConvergenceError("eigenpair outside the counted window");
    return pairs;
}

inline double max_abs_row_sum(const SparseMatrix& H) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < H.outerSize(); ++c) {
        double sum = 0.0;  // symmetric, so column sums are row sums
        for (SparseMatrix::InnerIterator it(H, c); it; ++it) sum += std::abs(it.value());
        best = std::max(best, sum);
    }
    return best;
}

// Columns of (H - lambda_bar)^{-1} by sparse LU. Raises NearSingular when an
// eigenvalue lies within 1e-12 max(1, ||H||_inf) of lambda_bar (inertia count).
class SparseResolvent {
public:
    SparseResolvent(const SparseMatrix& H, double lambda_bar) : lambda_bar_(lambda_bar) {
        scale_ = std::max(1.0, max_abs_row_sum(H));
        const double floor = 1e-12 * scale_;
        long hits = 0;
        try {
            hits = count_in_window(H, lambda_bar - floor, lambda_bar + floor);
        } catch (const NearSingular&) {
            hits = 1;
        }
        if (hits > 0)
            throw NearSingular("lambda_bar = " + std::to_string(lambda_bar) + " lies within " +
                                   std::to_string(floor) + " of the spectrum",
                               floor, scale_);
        SparseMatrix M = shifted(H, lambda_bar);
        M.makeCompressed();
        lu_.analyzePattern(M);
        lu_.factorize(M);
        if (lu_.info() != Eigen::Success) throw NearSingular("sparse LU of H - lambda_bar failed", 0.0, scale_);
        n_ = H.rows();
    }

    Eigen::VectorXd column(Eigen::Index j) const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
        e(j) = 1.0;
        Eigen::VectorXd x = lu_.solve(e);
        if (!x.allFinite()) throw NearSingular("sparse solve produced non-finite values", 0.0, scale_);
        return x;
    }

    // the whole matrix, symmetrised
    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd out = lu_.solve(Eigen::MatrixXd::Identity(n_, n_));
        if (!out.allFinite()) throw NearSingular("sparse solve produced non-finite values", 0.0, scale_);
        return 0.5 * (out + out.transpose());
    }

    double lambda_bar() const { return lambda_bar_; }
    Eigen::Index size() const { return n_; }

private:
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    double lambda_bar_ = 0.0;
    double scale_ = 1.0;
    Eigen::Index n_ = 0;
};

inline ResolventMatrix sparse_resolvent(const SiteSet& Q, const PotentialField& V, double lambda_bar) {
    const SparseResolvent solver(sparse_hamiltonian(Q, V), lambda_bar);
    return {Q, lambda_bar, solver.dense(), std::nullopt};
}

}  // namespace andlab
