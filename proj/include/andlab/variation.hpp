#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "operator.hpp"
#include "rng.hpp"

namespace andlab {

// Eigenvalue ranks i, j are 0-based in descending order; k is a coordinate.
struct VariationInstance {
    Eigen::MatrixXd A;
    int k = 0;
    std::array<double, 5> r{};  // r1..r5
    int i = 0;
    int j = 0;
    double c_small = 0.01;
};

struct VariationVerdict {
    std::array<bool, 5> hypothesis{};  // items (1)..(5)
    bool hypotheses_met = false;
    bool conclusion_holds = false;
    long count_before = 0;  // eigenvalues >= r1 of A
    long count_after = 0;   // same for A + e_k e_k^T
    double lambda_i_after = 0.0;
    double margin = 0.0;    // lambda_i(A + e_k e_k^T) - r1
    double weight_jk = 0.0;     // v_{j,k}^2
    double band_weight = 0.0;   // sum over r2 < lambda < r5 of v_{l,k}^2
};

inline VariationVerdict minmax_variation_check(const VariationInstance& inst) {
    const Eigen::Index n = inst.A.rows();
    require(n == inst.A.cols() && n >= 1, "matrix must be square and nonempty");
    require((inst.A - inst.A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, inst.A.cwiseAbs().maxCoeff()),
            "matrix must be symmetric");
    require(inst.k >= 0 && inst.k < n && inst.i >= 0 && inst.i < n && inst.j >= 0 && inst.j < n,
            "indices out of range");
    const auto& r = inst.r;
    VariationVerdict out;
    const Spectrum sp = eigendecompose(inst.A);
    const auto& lam = sp.eigenvalues;
    const auto& vec = sp.eigenvectors;

    out.hypothesis[0] = 0 < r[0] && r[0] < r[1] && r[1] < r[2] && r[2] < r[3] && r[3] < r[4] && r[4] < 1;
    out.hypothesis[1] = r[0] <= inst.c_small * std::min(r[2] * r[4], r[1] * r[2] / r[3]);
    out.hypothesis[2] = inst.j >= inst.i && 0 < lam(inst.j) && lam(inst.j) <= lam(inst.i) && lam(inst.i) < r[0] &&
                        r[0] < r[1] && (inst.i == 0 || r[1] < lam(inst.i - 1));
    out.weight_jk = vec(inst.k, inst.j) * vec(inst.k, inst.j);
    out.hypothesis[3] = out.weight_jk >= r[2];
    for (Eigen::Index l = 0; l < n; ++l)
        if (r[1] < lam(l) && lam(l) < r[4]) out.band_weight += vec(inst.k, l) * vec(inst.k, l);
    out.hypothesis[4] = out.band_weight <= r[3];
    out.hypotheses_met = true;
    for (bool h : out.hypothesis) out.hypotheses_met = out.hypotheses_met && h;

    Eigen::MatrixXd B = inst.A;
    B(inst.k, inst.k) += 1.0;
    const Spectrum after = eigendecompose(B, {}, false);
    for (Eigen::Index l = 0; l < n; ++l) {
        out.count_before += lam(l) >= r[0] ? 1 : 0;
        out.count_after += after.eigenvalues(l) >= r[0] ? 1 : 0;
    }
    out.lambda_i_after = after.eigenvalues(inst.i);
    out.margin = out.lambda_i_after - r[0];
    out.conclusion_holds = out.count_before < out.count_after;
    return out;
}

// Random orthogonal matrix whose column j leans towards e_k by `lean`.
inline Eigen::MatrixXd leaning_basis(int n, int j, int k, double lean, Rng& rng) {
    Eigen::MatrixXd G(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) G(a, b) = rng.normal();
    // column j goes first so Gram-Schmidt keeps its direction
    G.col(j).swap(G.col(0));
    G(k, 0) += lean * std::sqrt(double(n));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    Q.col(0).swap(Q.col(j));
    return Q;
}

// Instance built to satisfy the hypotheses often; callers filter on hypotheses_met.
// Some draws sit close to the edges of the hypotheses.
inline VariationInstance sample_variation_instance(Rng& rng, int n_max = 50, double c_small = 0.01) {
    require(n_max >= 2, "need n_max >= 2");
    VariationInstance inst;
    inst.c_small = c_small;
    const int n = int(rng.integer(2, n_max));
    const bool tight = rng.uniform() < 0.3;
    auto& r = inst.r;
    r[4] = rng.uniform(0.1, 0.95);
    r[3] = r[4] * rng.uniform(0.05, tight ? 0.99 : 0.9);
    r[2] = r[3] * rng.uniform(0.05, tight ? 0.99 : 0.9);
    r[1] = r[2] * rng.uniform(0.05, tight ? 0.99 : 0.9);
    r[0] = c_small * std::min(r[2] * r[4], r[1] * r[2] / r[3]) * (tight ? rng.uniform(0.95, 1.0) : rng.uniform(0.05, 1.0));

    inst.i = int(rng.integer(0, n - 1));
    inst.j = int(rng.integer(inst.i, n - 1));
    inst.k = int(rng.integer(0, n - 1));
    Eigen::VectorXd lam(n);
    const double li = r[0] * (tight ? rng.uniform(0.9, 0.999) : rng.uniform(0.05, 0.999));
    const double lj = li * rng.uniform(0.01, 1.0);
    for (int l = 0; l < n; ++l) {
        if (l < inst.i) {
            // above r2: in the band (r2, r5) or at least r5
            lam(l) = rng.uniform() < 0.5 ? rng.uniform(r[1], r[4]) : rng.uniform(r[4], 3.0);
            if (tight && rng.uniform() < 0.5) lam(l) = r[1] * (1.0 + 1e-3 * rng.uniform());
        } else if (l == inst.i) {
            lam(l) = li;
        } else if (l < inst.j) {
            lam(l) = rng.uniform(lj, li);
        } else if (l == inst.j) {
            lam(l) = lj;
        } else {
            lam(l) = lj - rng.uniform(0.0, 2.0);
        }
    }
    // the groups occupy disjoint ranges, so sorting keeps li on rank i and lj on rank j
    std::sort(lam.data(), lam.data() + n, std::greater<double>());
    const double lean = tight ? rng.uniform(0.5, 3.0) : rng.uniform(0.5, 20.0);
    const Eigen::MatrixXd Q = leaning_basis(n, inst.j, inst.k, lean, rng);
    inst.A = Q * lam.asDiagonal() * Q.transpose();
    inst.A = 0.5 * (inst.A + inst.A.transpose()).eval();
    return inst;
}

struct OrthonormalVerdict {
    bool hypothesis_met = false;
    bool bound_holds = false;
    long m = 0;
    long n = 0;
    double max_deviation = 0.0;  // max |v_i . v_j - delta_ij|
    double tolerance = 0.0;      // (5n)^{-1/2}
    double bound = 0.0;          // (5 - sqrt 5) n / 2
};

inline OrthonormalVerdict almost_orthonormal_check(const std::vector<Eigen::VectorXd>& vectors) {
    require(!vectors.empty(), "need at least one vector");
    const Eigen::Index n = vectors.front().size();
    require(n >= 1, "vectors must have positive dimension");
    Eigen::MatrixXd M(n, Eigen::Index(vectors.size()));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        require(vectors[i].size() == n, "dimension mismatch");
        M.col(Eigen::Index(i)) = vectors[i];
    }
    OrthonormalVerdict out;
    out.m = long(vectors.size());
    out.n = long(n);
    out.tolerance = 1.0 / std::sqrt(5.0 * double(n));
    out.bound = (5.0 - std::sqrt(5.0)) * double(n) / 2.0;
    Eigen::MatrixXd gram = M.transpose() * M;
    gram.diagonal().array() -= 1.0;
    out.max_deviation = gram.cwiseAbs().maxCoeff();
    out.hypothesis_met = out.max_deviation <= out.tolerance;
    out.bound_holds = double(out.m) <= out.bound;
    return out;
}

// Families of several shapes: perturbed orthonormal sets, perturbed simplex
// frames (n + 1 vectors at mutual inner product -1/n), orthonormal sets padded
// with random unit vectors, and plain random unit vectors.
inline std::vector<Eigen::VectorXd> sample_near_orthonormal(Rng& rng, int n_max = 100) {
    require(n_max >= 1, "need n_max >= 1");
    const int n = int(rng.integer(1, n_max));
    const int shape = int(rng.integer(0, 3));
    const double tol = 1.0 / std::sqrt(5.0 * n);
    const double noise = tol * rng.uniform(0.0, 1.5) / std::sqrt(double(n));
    std::vector<Eigen::VectorXd> out;
    auto unit = [&] {
        Eigen::VectorXd v(n);
        for (int a = 0; a < n; ++a) v(a) = rng.normal();
        return Eigen::VectorXd(v / v.norm());
    };
    // orthonormal basis in a random orientation: two Householder reflections
    const Eigen::VectorXd h1 = unit(), h2 = unit();
    auto rotate = [&](Eigen::VectorXd v) {
        v -= 2.0 * h1 * h1.dot(v);
        v -= 2.0 * h2 * h2.dot(v);
        return v;
    };
    int m = 0;
    switch (shape) {
        case 0:
            m = int(rng.integer(1, n));
            for (int a = 0; a < m; ++a) out.push_back(rotate(Eigen::VectorXd::Unit(n, a)));
            break;
        case 1: {
            const double beta = (-1.0 + 1.0 / std::sqrt(n + 1.0)) / n;
            const double norm = std::sqrt(n / (n + 1.0));
            for (int a = 0; a < n; ++a) {
                Eigen::VectorXd v = Eigen::VectorXd::Constant(n, beta);
                v(a) += 1.0;
                out.push_back(rotate(v / norm));
            }
            out.push_back(rotate(Eigen::VectorXd::Constant(n, -1.0 / std::sqrt(n + 1.0)) / norm));
            break;
        }
        case 2:
            m = int(rng.integer(1, n));
            for (int a = 0; a < m; ++a) out.push_back(rotate(Eigen::VectorXd::Unit(n, a)));
            for (int extra = int(rng.integer(1, n + 1)); extra > 0; --extra) out.push_back(unit());
            break;
        default:
            m = int(rng.integer(1, 2 * n));
            for (int a = 0; a < m; ++a) out.push_back(unit());
            break;
    }
    for (auto& v : out)
        for (int a = 0; a < n; ++a) v(a) += noise * rng.normal();
    return out;
}

}  // namespace andlab
