#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "potential.hpp"

namespace andlab {

// H_Q = 1_Q (-Laplacian + V) 1_Q on an explicit site set, dense.
struct HamiltonianMatrix {
    SiteSet sites;
    Eigen::MatrixXd entries;
    Eigen::VectorXd potential;

    Eigen::Index size() const { return entries.rows(); }
};

inline HamiltonianMatrix assemble_hq(const SiteSet& Q, const PotentialField& V) {
    const auto n = static_cast<Eigen::Index>(Q.size());
    HamiltonianMatrix H{Q, Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Site p = Q[static_cast<std::size_t>(i)];
        H.potential(i) = V(p);
        H.entries(i, i) = 4.0 + H.potential(i);
        for (Site d : kNeighbourOffsets) {
            const long j = Q.index_of(p + d);
            if (j > i) {
                H.entries(i, j) = -1.0;
                H.entries(j, i) = -1.0;
            }
        }
    }
    return H;
}

inline HamiltonianMatrix assemble_hq(const DyadicSquare& Q, const PotentialField& V) {
    return assemble_hq(Q.sites(), V);
}

// Applies the stencil directly, without forming the matrix.
inline Eigen::VectorXd apply_stencil(const SiteSet& Q, const PotentialField& V,
                                     const Eigen::VectorXd& psi) {
    Eigen::VectorXd out(psi.size());
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const Site p = Q[i];
        double acc = (4.0 + V(p)) * psi(Eigen::Index(i));
        for (Site d : kNeighbourOffsets) {
            const long j = Q.index_of(p + d);
            if (j >= 0) acc -= psi(j);
        }
        out(Eigen::Index(i)) = acc;
    }
    return out;
}

struct Spectrum {
    SiteSet sites;
    Eigen::VectorXd eigenvalues;   // descending
    Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues(k); empty if not requested

    Eigen::Index size() const { return eigenvalues.size(); }
    double lambda_min() const { return eigenvalues(eigenvalues.size() - 1); }
    double lambda_max() const { return eigenvalues(0); }
};

inline double max_abs_row_sum(const Eigen::MatrixXd& A) {
    return A.rows() == 0 ? 0.0 : A.cwiseAbs().rowwise().sum().maxCoeff();
}

inline Spectrum eigendecompose(const Eigen::MatrixXd& A, const SiteSet& sites = {},
                               bool with_vectors = true) {
    const Eigen::Index n = A.rows();
    Spectrum sp{sites, Eigen::VectorXd(n), Eigen::MatrixXd()};
    if (n == 0) return sp;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        A, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        const double scale = max_abs_row_sum(A);
        throw ConvergenceError("symmetric eigensolver did not converge (n = " +
                               std::to_string(n) + ", max row sum = " + std::to_string(scale) +
                               ", asymmetry = " + std::to_string((A - A.transpose()).cwiseAbs().maxCoeff()) + ")");
    }
    sp.eigenvalues = es.eigenvalues().reverse();
    if (with_vectors) {
        sp.eigenvectors = es.eigenvectors().rowwise().reverse();
        for (Eigen::Index k = 0; k < n; ++k) {
            auto col = sp.eigenvectors.col(k);
            const double tiny = 1e-12 * col.cwiseAbs().maxCoeff();
            for (Eigen::Index i = 0; i < n; ++i)
                if (std::abs(col(i)) > tiny) {
                    if (col(i) < 0) col = -col;
                    break;
                }
        }
    }
    return sp;
}

inline Spectrum eigendecompose(const HamiltonianMatrix& H, bool with_vectors = true) {
    return eigendecompose(H.entries, H.sites, with_vectors);
}

struct RealInterval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_closed = true;
    bool hi_closed = true;

    bool contains(double v) const {
        const bool above = lo_closed ? v >= lo : v > lo;
        const bool below = hi_closed ? v <= hi : v < hi;
        return above && below;
    }
};

inline long count_eigs(const Spectrum& sp, const RealInterval& I) {
    long c = 0;
    for (Eigen::Index k = 0; k < sp.size(); ++k) c += I.contains(sp.eigenvalues(k)) ? 1 : 0;
    return c;
}

inline double operator_norm(const Eigen::MatrixXd& A) {
    if (A.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}
inline double hs_norm(const Eigen::MatrixXd& A) { return A.norm(); }

struct DecayFit {
    double A = 0.0;
    double m = 0.0;
    double ls_slope = 0.0;      // slope of the least-squares line through the envelope
    double ls_intercept = 0.0;
    bool degenerate = false;    // single site, no pairs at positive distance
    std::optional<double> budget;
};

struct ResolventMatrix {
    SiteSet sites;
    double lambda_bar = 0.0;
    Eigen::MatrixXd entries;
    std::optional<DecayFit> decay;
};

// Dominant |eigenvalue| of a symmetric matrix by power iteration; a lower bound on ||A||_2.
inline double power_norm_estimate(const Eigen::MatrixXd& A, int iters = 60) {
    const Eigen::Index n = A.rows();
    if (n == 0) return 0.0;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * std::sin(double(i) + 1.0);
    v.normalize();
    double est = 0.0;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd w = A * v;
        const double nw = w.norm();
        if (!(nw > 0.0)) return est;
        est = std::max(est, nw);
        v = w / nw;
    }
    return est;
}

inline ResolventMatrix resolvent(const HamiltonianMatrix& H, double lambda_bar) {
    const Eigen::Index n = H.size();
    Eigen::MatrixXd M = H.entries;
    M.diagonal().array() -= lambda_bar;
    const double scale = std::max(1.0, max_abs_row_sum(H.entries));
    const double floor = 1e-12 * scale;
    ResolventMatrix R{H.sites, lambda_bar, Eigen::MatrixXd(), std::nullopt};
    if (n == 0) return R;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    R.entries = lu.inverse();
    auto singular = [&](double dist) {
        return NearSingular("lambda_bar = " + std::to_string(lambda_bar) +
                                " lies within " + std::to_string(dist) + " of the spectrum",
                            dist, scale);
    };
    if (!R.entries.allFinite()) throw singular(0.0);
    // dist(lambda_bar, spec) = 1/||R||_2 and ||R||_2 <= ||R||_inf for symmetric R.
    const double upper = max_abs_row_sum(R.entries);
    if (1.0 / upper <= floor) {
        const double lower = power_norm_estimate(R.entries);
        if (1.0 / lower <= floor) throw singular(1.0 / lower);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        const double dist = es.eigenvalues().cwiseAbs().minCoeff();
        if (dist <= floor) throw singular(dist);
    }
    R.entries = 0.5 * (R.entries + R.entries.transpose()).eval();
    return R;
}

inline double resolvent_residual(const HamiltonianMatrix& H, const ResolventMatrix& R) {
    Eigen::MatrixXd M = H.entries;
    M.diagonal().array() -= R.lambda_bar;
    return (M * R.entries - Eigen::MatrixXd::Identity(H.size(), H.size())).cwiseAbs().maxCoeff();
}

// Entrywise |R(x,y)| <= exp(A - m |x - y|), tested as log|R| - A + m d <= 0.
inline bool decay_certificate_holds(const Eigen::MatrixXd& R, const SiteSet& sites, double A,
                                    double m) {
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            const double d = distance(sites[std::size_t(i)], sites[std::size_t(j)]);
            if (std::log(std::abs(R(i, j))) - A + m * d > 0.0) return false;
        }
    return true;
}

namespace detail {

// Upper envelope of log|R| keyed by squared distance.
struct Envelope {
    std::vector<long long> d2;
    std::vector<double> value;
};

inline Envelope log_envelope(const Eigen::MatrixXd& R, const SiteSet& sites) {
    std::vector<std::pair<long long, double>> pts;
    pts.reserve(std::size_t(R.size()));
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            const double a = std::abs(R(i, j));
            if (a > 0.0) pts.emplace_back(distance_sq(sites[std::size_t(i)], sites[std::size_t(j)]), std::log(a));
        }
    std::sort(pts.begin(), pts.end());
    Envelope e;
    for (const auto& [d2, v] : pts) {
        if (e.d2.empty() || e.d2.back() != d2) {
            e.d2.push_back(d2);
            e.value.push_back(v);
        } else {
            e.value.back() = std::max(e.value.back(), v);
        }
    }
    return e;
}

// Smallest A with the certificate holding for this m, in the certificate's own arithmetic.
inline double certified_A(const Eigen::MatrixXd& R, const SiteSet& sites, double m) {
    double A = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            const double a = std::abs(R(i, j));
            if (a == 0.0) continue;
            const double d = distance(sites[std::size_t(i)], sites[std::size_t(j)]);
            A = std::max(A, std::log(a) + m * d);
        }
    while (!decay_certificate_holds(R, sites, A, m))
        A = std::nextafter(A, std::numeric_limits<double>::infinity());
    return A;
}

}  // namespace detail

// Exponential decay fit. With a budget: the largest m whose certified A stays within it.
// Without: m is the (nonnegative) least-squares envelope slope and A the smallest valid intercept.
inline DecayFit decay_fit(const Eigen::MatrixXd& R, const SiteSet& sites,
                          std::optional<double> budget = std::nullopt) {
    require(R.rows() == R.cols() && std::size_t(R.rows()) == sites.size(), "matrix and sites disagree");
    if (R.size() == 0 || R.cwiseAbs().maxCoeff() == 0.0)
        throw PreconditionError("decay fit of an all-zero resolvent");
    DecayFit fit;
    fit.budget = budget;
    const auto env = detail::log_envelope(R, sites);
    if (env.d2.size() < 2) {
        fit.degenerate = true;
        fit.m = 0.0;
        fit.A = detail::certified_A(R, sites, 0.0);
        return fit;
    }
    // least squares through the envelope (d, E(d)), d > 0
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t k = 0; k < env.d2.size(); ++k) {
        if (env.d2[k] == 0) continue;
        const double d = std::sqrt(double(env.d2[k]));
        sx += d, sy += env.value[k], sxx += d * d, sxy += d * env.value[k], cnt += 1;
    }
    const double den = cnt * sxx - sx * sx;
    fit.ls_slope = den > 0 ? (cnt * sxy - sx * sy) / den : 0.0;
    fit.ls_intercept = cnt > 0 ? (sy - fit.ls_slope * sx) / cnt : 0.0;

    if (budget) {
        double e0 = -std::numeric_limits<double>::infinity();
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < env.d2.size(); ++k) {
            if (env.d2[k] == 0) e0 = env.value[k];
            else m = std::min(m, (*budget - env.value[k]) / std::sqrt(double(env.d2[k])));
        }
        if (e0 > *budget) throw PreconditionError("decay budget below the diagonal of the resolvent");
        double A = detail::certified_A(R, sites, m);
        while (A > *budget) {
            m = std::nextafter(m, -std::numeric_limits<double>::infinity());
            A = detail::certified_A(R, sites, m);
        }
        fit.m = m;
        fit.A = A;
        return fit;
    }
    fit.m = std::max(0.0, -fit.ls_slope);
    fit.A = detail::certified_A(R, sites, fit.m);
    return fit;
}

inline DecayFit decay_fit(const ResolventMatrix& R, std::optional<double> budget = std::nullopt) {
    return decay_fit(R.entries, R.sites, budget);
}

}  // namespace andlab
